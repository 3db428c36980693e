#include "hoigen/http_backends.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

namespace hoigen {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto slash = url.find('/', host_begin);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string expand_env(const std::string& value) {
  if (value.size() > 3 && value.starts_with("${") && value.ends_with("}")) {
    const std::string name = value.substr(2, value.size() - 3);
    const char* v = std::getenv(name.c_str());
    return v ? v : "";
  }
  return value;
}

}  // namespace

nlohmann::json post_json(const EndpointConfig& endpoint, const nlohmann::json& body) {
  if (endpoint.url.empty()) throw BackendUnavailable("endpoint url is empty");
  const SplitUrl url = split_url(endpoint.url);

  httplib::Headers headers;
  for (const auto& [k, v] : endpoint.headers) headers.emplace(k, expand_env(v));
  if (!endpoint.auth_env.empty()) {
    if (const char* token = std::getenv(endpoint.auth_env.c_str()); token && *token) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  const std::string payload = body.dump();
  const auto timeout = std::chrono::milliseconds(endpoint.timeout_ms);

  std::string last_error;
  for (int attempt = 0; attempt <= endpoint.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100) * (1 << (attempt - 1)));
    }
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_error = fmt::format("{}: {}", endpoint.url, httplib::to_string(res.error()));
      continue;
    }
    if (res->status >= 500) {
      last_error = fmt::format("{}: HTTP {}", endpoint.url, res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw BackendProtocolError(
          fmt::format("{}: HTTP {}: {}", endpoint.url, res->status, res->body));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw BackendProtocolError(fmt::format("{}: invalid JSON: {}", endpoint.url, e.what()));
    }
  }
  throw BackendUnavailable(last_error);
}

std::string HttpLlm::complete(const LlmRequest& request) {
  return llm_text_from_wire(post_json(endpoint_, to_wire(request)));
}

GenerationResponse HttpProposer::generate(const GenerationRequest& request) {
  return generation_response_from_wire(post_json(endpoint_, to_wire(request)));
}

double HttpVerifier::score(std::span<const std::uint8_t> image, std::string_view prompt) {
  return verifier_score_from_wire(post_json(endpoint_, verifier_request_to_wire(image, prompt)));
}

}  // namespace hoigen
