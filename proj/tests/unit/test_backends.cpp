#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <future>
#include <thread>

#include <httplib.h>

#include "hoigen/http_backends.hpp"
#include "hoigen/mock_backends.hpp"
#include "hoigen/prompt_engine.hpp"
#include "hoigen/rules.hpp"

using namespace hoigen;
using nlohmann::json;

namespace {

/// An httplib server on an ephemeral port, stopped on destruction.
class LocalServer {
 public:
  LocalServer() = default;
  ~LocalServer() {
    server.stop();
    if (thread_.joinable()) thread_.join();
  }

  void start() {
    port_ = server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  std::string url(std::string_view path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + std::string(path);
  }

  httplib::Server server;

 private:
  int port_ = 0;
  std::thread thread_;
};

EndpointConfig endpoint(std::string url) {
  EndpointConfig e;
  e.url = std::move(url);
  e.timeout_ms = 2000;
  e.retries = 1;
  return e;
}

}  // namespace

TEST_SUITE("backends") {
  TEST_CASE("generation request wire round trip") {
    GenerationRequest r{"pos", "neg", {}};
    r.params.seed = 0xfedcba9876543210ULL;
    r.params.guidance = 5.5;
    const json j = to_wire(r);
    CHECK(j["steps_base"] == 80);
    CHECK(j["steps_refine"] == 20);
    CHECK(j["width"] == 1024);
    const GenerationRequest back = generation_request_from_wire(j);
    CHECK(back.positive == "pos");
    CHECK(back.params == r.params);
  }

  TEST_CASE("generation response wire") {
    const GenerationResponse r{{1, 2, 3, 250}, "m"};
    const auto back = generation_response_from_wire(to_wire(r));
    CHECK(back.image_bytes == r.image_bytes);
    CHECK(back.model_id == "m");
    CHECK_THROWS_AS(generation_response_from_wire(json{{"model_id", "m"}}), BackendProtocolError);
    CHECK_THROWS_AS(generation_response_from_wire(json{{"image_bytes", "%%%"}}),
                    BackendProtocolError);
  }

  TEST_CASE("llm and verifier wire") {
    CHECK(to_wire(LlmRequest{"p", 10, 0.5}) == json{{"prompt", "p"}, {"max_tokens", 10}, {"temperature", 0.5}});
    CHECK(llm_text_from_wire(json{{"text", "hi"}}) == "hi");
    CHECK_THROWS_AS(llm_text_from_wire(json{{"text", 3}}), BackendProtocolError);
    const Bytes img{9, 8, 7};
    const json v = verifier_request_to_wire(img, "a cup");
    CHECK(v["prompt"] == "a cup");
    CHECK(base64_decode(v["image_bytes"].get<std::string>()) == img);
    CHECK(verifier_score_from_wire(json{{"score", 0.25}}) == 0.25);
    CHECK_THROWS_AS(verifier_score_from_wire(json{{"score", 1.5}}), BackendProtocolError);
    CHECK_THROWS_AS(verifier_score_from_wire(json{{"score", "0.5"}}), BackendProtocolError);
  }

  TEST_CASE("check_params") {
    GenerationParams p;
    CHECK_NOTHROW(check_params(p));
    p.steps_base = 0;
    p.steps_refine = 0;
    CHECK_THROWS_AS(check_params(p), std::invalid_argument);
    p = {};
    p.guidance = 0;
    CHECK_THROWS_AS(check_params(p), std::invalid_argument);
    p = {};
    p.steps_refine = -1;
    CHECK_THROWS_AS(check_params(p), std::invalid_argument);
  }

  TEST_CASE("concurrency cap bounds in-flight calls") {
    MockProposer inner("p", std::chrono::milliseconds(5));
    CappedProposer capped(inner, 2);
    std::vector<std::future<void>> fs;
    for (int i = 0; i < 12; ++i) {
      fs.push_back(std::async(std::launch::async, [&capped, i] {
        GenerationRequest r{"x", "y", {}};
        r.params.seed = static_cast<std::uint64_t>(i);
        capped.generate(r);
      }));
    }
    for (auto& f : fs) f.get();
    CHECK(capped.cap().peak() <= 2);
    CHECK(inner.meter().peak() <= 2);
    CHECK(inner.meter().calls() == 12);
    CHECK_THROWS_AS(ConcurrencyCap(0), std::invalid_argument);
  }

  TEST_CASE("mock proposer is deterministic and distinct per id") {
    MockProposer a("a"), b("b");
    GenerationRequest r{"pos", "neg", {}};
    r.params.seed = 4;
    const auto x = a.generate(r);
    CHECK(x.image_bytes == a.generate(r).image_bytes);
    CHECK(x.image_bytes != b.generate(r).image_bytes);
    CHECK(x.model_id == "mock-a");
    CHECK(x.image_bytes[0] == 'P');
    CHECK(x.image_bytes[1] == '6');
    CHECK_THROWS_AS(MockProposer("c", {}, true).generate(r), BackendUnavailable);
  }

  TEST_CASE("mock verifier accept rate and determinism") {
    MockVerifier v(0.7, 0.5);
    int accepted = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
      const std::string img = "image-" + std::to_string(i);
      const Bytes bytes(img.begin(), img.end());
      const double s = v.score(bytes, "prompt");
      CHECK(s == v.score(bytes, "prompt"));
      CHECK(s >= 0.0);
      CHECK(s < 1.0);
      if (s >= 0.5) ++accepted;
    }
    // 3 sigma of a binomial(4000, 0.7) is about 87.
    CHECK(std::abs(accepted - 2800) < 87);
    MockVerifier never(0.0, 0.5), always(1.0, 0.5);
    const Bytes one{1};
    CHECK(never.score(one, "p") < 0.5);
    CHECK(always.score(one, "p") >= 0.5);
  }

  TEST_CASE("mock llm answers both meta-prompts") {
    MockLlm llm(3);
    const BasePrompt base{"A man holding a kettle", "Kitchen objects", "Asian"};
    const std::string program_reply = llm.complete({render_program_request(base)});
    const HandProgram p = extract_program(program_reply);
    CHECK(validate_program(p).is_plausible());
    const std::string pair_reply = llm.complete({render_prompt_pair_request(p, base)});
    const PromptPair pair = extract_prompt_pair(pair_reply);
    CHECK(pair.positive.rfind("Photo of a man holding a kettle", 0) == 0);
    CHECK(word_count(pair.positive) <= kMaxPositiveWords);
    CHECK(llm.complete({render_program_request(base)}) == program_reply);
  }

  TEST_CASE("http llm against a local server") {
    LocalServer srv;
    std::string seen_auth;
    json seen_body;
    srv.server.Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
      seen_auth = req.get_header_value("Authorization");
      seen_body = json::parse(req.body);
      res.set_content(json{{"text", "echo:" + seen_body["prompt"].get<std::string>()}}.dump(),
                      "application/json");
    });
    srv.start();
    ::setenv("HOIGEN_TEST_TOKEN", "s3cret", 1);
    auto e = endpoint(srv.url("/v1/complete"));
    e.auth_env = "HOIGEN_TEST_TOKEN";
    HttpLlm llm(e);
    CHECK(llm.complete({"hello", 12, 0.1}) == "echo:hello");
    CHECK(seen_auth == "Bearer s3cret");
    CHECK(seen_body["max_tokens"] == 12);
  }

  TEST_CASE("http proposer and verifier round trip") {
    LocalServer srv;
    srv.server.Post("/gen", [](const httplib::Request& req, httplib::Response& res) {
      const auto r = generation_request_from_wire(json::parse(req.body));
      const std::string body = "P6 " + r.positive + std::to_string(r.params.seed);
      res.set_content(to_wire(GenerationResponse{Bytes(body.begin(), body.end()), "remote"}).dump(),
                      "application/json");
    });
    srv.server.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
      const json j = json::parse(req.body);
      const double s = base64_decode(j["image_bytes"].get<std::string>()).size() / 100.0;
      res.set_content(json{{"score", s}}.dump(), "application/json");
    });
    srv.start();
    HttpProposer prop(endpoint(srv.url("/gen")));
    GenerationRequest r{"cup", "blur", {}};
    r.params.seed = 42;
    const auto resp = prop.generate(r);
    CHECK(std::string(resp.image_bytes.begin(), resp.image_bytes.end()) == "P6 cup42");
    CHECK(resp.model_id == "remote");
    HttpVerifier ver(endpoint(srv.url("/score")));
    CHECK(ver.score(resp.image_bytes, "cup") == doctest::Approx(0.08));
  }

  TEST_CASE("http retries 5xx then reports unavailable") {
    LocalServer srv;
    std::atomic<int> hits{0};
    srv.server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
      if (hits.fetch_add(1) == 0) {
        res.status = 503;
        return;
      }
      res.set_content(R"({"text":"ok"})", "application/json");
    });
    srv.server.Post("/down", [&](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
    });
    srv.server.Post("/bad", [&](const httplib::Request&, httplib::Response& res) {
      res.status = 400;
      res.set_content("nope", "text/plain");
    });
    srv.server.Post("/notjson", [&](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html>", "text/html");
    });
    srv.start();
    CHECK(HttpLlm(endpoint(srv.url("/flaky"))).complete({"x"}) == "ok");
    CHECK(hits.load() == 2);
    CHECK_THROWS_AS(HttpLlm(endpoint(srv.url("/down"))).complete({"x"}), BackendUnavailable);
    CHECK_THROWS_AS(HttpLlm(endpoint(srv.url("/bad"))).complete({"x"}), BackendProtocolError);
    CHECK_THROWS_AS(HttpLlm(endpoint(srv.url("/notjson"))).complete({"x"}), BackendProtocolError);
  }

  TEST_CASE("http connection refused is unavailable") {
    auto e = endpoint("http://127.0.0.1:1/none");
    e.retries = 0;
    e.timeout_ms = 500;
    CHECK_THROWS_AS(HttpLlm(e).complete({"x"}), BackendUnavailable);
    CHECK_THROWS_AS(HttpLlm(endpoint("")).complete({"x"}), BackendUnavailable);
  }
}
