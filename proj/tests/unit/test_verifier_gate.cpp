#include <doctest.h>

#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "hoigen/verifier_gate.hpp"
#include "stubs.hpp"

using namespace hoigen;
using hoigen::testing::constant_verifier;
using hoigen::testing::FunctionVerifier;
using hoigen::testing::TempDir;

namespace {

struct Fixture {
  TempDir dir;
  ImageStore store{dir.path()};
  std::shared_ptr<EnrichedPrompt> enriched = [] {
    auto e = std::make_shared<EnrichedPrompt>();
    e->program = parse_program(hoigen::testing::kGoldenProgram);
    e->pair = {"A hand holds a cup", "blurry"};
    return e;
  }();

  CandidateImage candidate(const std::string& proposer, const std::string& body) {
    const Bytes bytes(body.begin(), body.end());
    const StoredImage s = store.put(bytes);
    CandidateImage c;
    c.pair_id = "pair-" + body;
    c.proposer_id = proposer;
    c.image_ref = s.relative_path;
    c.content_hash = s.content_hash;
    c.enriched = enriched;
    return c;
  }
};

/// Score keyed by image content: the first byte divided by 100.
std::shared_ptr<FunctionVerifier> byte_verifier() {
  return std::make_shared<FunctionVerifier>(
      [](std::span<const std::uint8_t> img, std::string_view) { return img[0] / 100.0; });
}

std::string body_for(double score) { return std::string(1, static_cast<char>(score * 100 + 0.5)) + "img"; }

}  // namespace

TEST_SUITE("verifier_gate") {
  TEST_CASE("verify_pair labels against the threshold") {
    Fixture f;
    const auto c = f.candidate("p", "x");
    const std::pair<double, Label> cases[] = {
        {0.9, Label::Accept}, {0.5, Label::Accept}, {0.2, Label::Reject}};
    for (const auto& [score, label] : cases) {
      const Verdict v = verify_pair(c, *constant_verifier(score), 0.5, f.store);
      CHECK(v.label == label);
      CHECK(v.score == score);
      CHECK(v.threshold_used == 0.5);
      CHECK(v.pair_id == "pair-x");
      CHECK(v.verifier_id == "default");
    }
    CHECK_THROWS_AS(verify_pair(c, *constant_verifier(0.5), 0.0, f.store), std::invalid_argument);
    CHECK_THROWS_AS(verify_pair(c, *constant_verifier(0.5), 1.0, f.store), std::invalid_argument);
    CHECK_THROWS_AS(verify_pair(c, *constant_verifier(1.2), 0.5, f.store), BackendProtocolError);
  }

  TEST_CASE("verifier sees the positive prompt only") {
    Fixture f;
    std::string seen;
    FunctionVerifier v([&seen](std::span<const std::uint8_t>, std::string_view p) {
      seen = std::string(p);
      return 0.7;
    });
    verify_pair(f.candidate("p", "x"), v, 0.5, f.store);
    CHECK(seen == "A hand holds a cup");
  }

  TEST_CASE("gate partitions in candidate order") {
    Fixture f;
    auto v = byte_verifier();
    const std::vector<CandidateImage> cs = {f.candidate("p", body_for(0.8)),
                                            f.candidate("p", body_for(0.4)),
                                            f.candidate("p", body_for(0.6))};
    const GateOutcome out = gate(cs, *v, 0.5, f.store);
    REQUIRE(out.accepted.size() == 2);
    REQUIRE(out.rejected.size() == 1);
    CHECK(out.accepted[0].verdict.score == doctest::Approx(0.8));
    CHECK(out.accepted[1].verdict.score == doctest::Approx(0.6));
    CHECK(out.rejected[0].verdict.score == doctest::Approx(0.4));
    CHECK(out.signal == GateSignal::Proceed);
    CHECK(v->calls.load() == 3);
  }

  TEST_CASE("gate signals retry when nothing passes") {
    Fixture f;
    const std::vector<CandidateImage> cs = {f.candidate("p", "a"), f.candidate("p", "b")};
    const GateOutcome out = gate(cs, *constant_verifier(0.1), 0.5, f.store);
    CHECK(out.accepted.empty());
    CHECK(out.rejected.size() == 2);
    CHECK(out.signal == GateSignal::RetryNeeded);
    CHECK_THROWS_AS(gate(std::span<const CandidateImage>{}, *constant_verifier(0.1), 0.5, f.store),
                    std::invalid_argument);
  }

  TEST_CASE("raising the threshold never admits more") {
    Fixture f;
    auto v = byte_verifier();
    std::vector<CandidateImage> cs;
    for (int s = 0; s <= 99; s += 3) cs.push_back(f.candidate("p", body_for(s / 100.0)));
    std::size_t prev = cs.size() + 1;
    for (double t = 0.05; t < 1.0; t += 0.05) {
      const std::size_t n = gate(cs, *v, t, f.store).accepted.size();
      CHECK(n <= prev);
      prev = n;
    }
  }

  TEST_CASE("corrupt or missing images are detected") {
    Fixture f;
    auto c = f.candidate("p", "payload");
    {
      std::ofstream out(f.store.absolute(c.image_ref), std::ios::binary | std::ios::trunc);
      out << "tampered";
    }
    CHECK_THROWS_AS(verify_pair(c, *constant_verifier(0.9), 0.5, f.store), CorruptImage);
    auto missing = f.candidate("p", "other");
    std::filesystem::remove(f.store.absolute(missing.image_ref));
    CHECK_THROWS_AS(verify_pair(missing, *constant_verifier(0.9), 0.5, f.store), CorruptImage);
  }

  TEST_CASE("unavailable verifier aborts the gate") {
    Fixture f;
    FunctionVerifier down([](std::span<const std::uint8_t>, std::string_view) -> double {
      throw BackendUnavailable("down");
    });
    const std::vector<CandidateImage> cs = {f.candidate("p", "a")};
    CHECK_THROWS_AS(gate(cs, down, 0.5, f.store), BackendUnavailable);
  }

  TEST_CASE("router picks per-proposer verifier and threshold") {
    Fixture f;
    auto def = constant_verifier(0.6);
    auto strict = constant_verifier(0.6);
    VerifierRouter router("default", *def, 0.5);
    router.add_verifier("strict", *strict);
    router.assign("hi", std::string("strict"), 0.7);
    router.assign("lo", std::nullopt, 0.55);
    CHECK_THROWS_AS(router.assign("x", std::string("nope"), std::nullopt), std::invalid_argument);

    const std::vector<CandidateImage> cs = {f.candidate("hi", "a"), f.candidate("lo", "b"),
                                            f.candidate("other", "c")};
    const GateOutcome out = gate(cs, router, f.store);
    REQUIRE(out.rejected.size() == 1);
    CHECK(out.rejected[0].verdict.verifier_id == "strict");
    CHECK(out.rejected[0].verdict.threshold_used == 0.7);
    REQUIRE(out.accepted.size() == 2);
    CHECK(out.accepted[0].verdict.threshold_used == 0.55);
    CHECK(out.accepted[1].verdict.verifier_id == "default");
    CHECK(strict->calls.load() == 1);
    CHECK(def->calls.load() == 2);
  }

  TEST_CASE("review band holds uncertain scores") {
    Fixture f;
    auto v = byte_verifier();
    VerifierRouter router("default", *v, 0.5);
    const std::vector<CandidateImage> cs = {
        f.candidate("p", body_for(0.9)), f.candidate("p", body_for(0.55)),
        f.candidate("p", body_for(0.45)), f.candidate("p", body_for(0.1))};
    const GateOutcome off = gate(cs, router, f.store);
    CHECK(off.accepted.size() == 2);
    CHECK(off.queued.empty());
    const GateOutcome on = gate(cs, router, f.store, ReviewBand{true, 0.1});
    CHECK(on.accepted.size() == 1);
    CHECK(on.queued.size() == 2);
    CHECK(on.rejected.size() == 1);
    CHECK(on.signal == GateSignal::Proceed);
  }
}
