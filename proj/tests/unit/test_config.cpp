#include <doctest.h>

#include <fstream>

#include "hoigen/campaign.hpp"
#include "hoigen/errors.hpp"
#include "stubs.hpp"

using namespace hoigen;
using hoigen::testing::TempDir;
using nlohmann::json;

namespace {

json base_json() { return default_config_json("data"); }

void expect_config_error(const json& j, std::string_view fragment) {
  try {
    config_from_json(j);
    FAIL("no error for ", fragment);
  } catch (const ConfigError& e) {
    CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
  }
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("default config parses and validates") {
    const CampaignConfig c = config_from_json(base_json(), "/base");
    CHECK(c.data_dir == std::filesystem::path("/base/data"));
    CHECK(init_quota(c.quota).total_target() == 10100);
    CHECK(c.base_prompts.size() == 13);
    CHECK(c.proposers.size() == 3);
    CHECK(c.threshold == 0.5);
    CHECK(c.budgets.proposer_rounds == 3);
    CHECK(c.budgets.enrich_attempts == 3);
    CHECK_FALSE(c.human_review.enabled);
    CHECK(c.human_review.delta == doctest::Approx(0.1));
    CHECK(c.llm.endpoint.auth_env == "HOIGEN_LLM_TOKEN");
    CHECK(c.proposers[0].descriptor.params.steps_base == 80);
    CHECK(c.proposers[0].descriptor.params.steps_refine == 20);
  }

  TEST_CASE("absolute data_dir is kept") {
    auto j = base_json();
    j["data_dir"] = "/abs/dir";
    CHECK(config_from_json(j, "/base").data_dir == std::filesystem::path("/abs/dir"));
  }

  TEST_CASE("load_config resolves against the file's directory") {
    TempDir dir;
    {
      std::ofstream out(dir / "campaign.json");
      out << base_json().dump(2);
    }
    CHECK(load_config(dir / "campaign.json").data_dir == dir.path() / "data");
    {
      std::ofstream out(dir / "broken.json");
      out << "{ not json";
    }
    CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  }

  TEST_CASE("quota scale forms") {
    for (const json& s : {json("1/100"), json(0.01), json("0.01")}) {
      auto j = base_json();
      j["quota"]["scale"] = s;
      CHECK(init_quota(config_from_json(j).quota).total_target() == 101);
    }
    auto j = base_json();
    j["quota"]["scale"] = "1/300";
    expect_config_error(j, "quota");
    j["quota"]["scale"] = true;
    expect_config_error(j, "scale");
  }

  TEST_CASE("invariants are enforced") {
    auto j = base_json();
    j["budgets"]["proposer_rounds"] = 0;
    expect_config_error(j, "proposer_rounds");

    j = base_json();
    j["concurrency"]["llm"] = 0;
    expect_config_error(j, "concurrency");

    j = base_json();
    j["threshold"] = 1.0;
    expect_config_error(j, "threshold");

    j = base_json();
    j["human_review"] = {{"enabled", true}, {"band", 0.6}};
    expect_config_error(j, "band");

    j = base_json();
    j["base_prompts"].erase("Electronics");
    expect_config_error(j, "Electronics");

    j = base_json();
    j["proposers"][1]["id"] = "power";
    expect_config_error(j, "duplicate proposer");

    j = base_json();
    j["proposers"][0]["categories"] = json::array();
    expect_config_error(j, "serves no category");

    j = base_json();
    j["proposers"].erase(2);
    expect_config_error(j, "OpenHand");

    j = base_json();
    j["proposers"][0]["verifier_id"] = "ghost";
    expect_config_error(j, "ghost");

    j = base_json();
    j["proposers"][0]["params"]["guidance"] = 0;
    expect_config_error(j, "guidance");

    j = base_json();
    j["rules"] = {{"E9", "off"}};
    expect_config_error(j, "E9");

    j = base_json();
    j["categories"] = {{"Wiggle", "PowerGrasp"}};
    expect_config_error(j, "Wiggle");

    j = base_json();
    j["mock"]["failing_proposers"] = {"nobody"};
    expect_config_error(j, "nobody");

    j = base_json();
    j["proposers"] = "nope";
    expect_config_error(j, "config");

    CHECK_THROWS_AS(config_from_json(json::array()), ConfigError);
  }

  TEST_CASE("rule overrides and category overrides") {
    auto j = base_json();
    j["rules"] = {{"W1", "off"}, {"E3", "warning"}};
    j["categories"] = {{"Press", "PowerGrasp"}};
    const CampaignConfig c = config_from_json(j);
    const RuleProfile p = rule_profile(c);
    CHECK_FALSE(p.severity(RuleId::W1).has_value());
    CHECK(p.severity(RuleId::E3) == Severity::Warning);
    CHECK(category_table(c).of(MotionType::Press) == kPowerGrasp);
    CHECK(category_table(c).of(MotionType::Support) == kOpenHand);
  }

  TEST_CASE("per-proposer verifier and threshold") {
    auto j = base_json();
    j["verifiers"].push_back({{"id", "strict"}, {"url", "http://127.0.0.1:9200/score"}});
    j["proposers"][0]["verifier_id"] = "strict";
    j["proposers"][0]["threshold"] = 0.8;
    const CampaignConfig c = config_from_json(j);
    CHECK(c.proposers[0].descriptor.verifier_id == "strict");
    CHECK(c.proposers[0].descriptor.threshold == 0.8);
    CHECK(c.verifiers.size() == 2);
    const BackendSet mocks = make_mock_backends(c);
    CHECK(mocks.verifiers.count("strict") == 1);
    CHECK(mocks.proposers.size() == 3);
    const BackendSet http = make_http_backends(c);
    CHECK(http.verifiers.count("default") == 1);
  }

  TEST_CASE("base prompt rendering") {
    CHECK(render_base_prompt("A {race} person's hand holding a {object}", "Asian", "cup") ==
          "A Asian person's hand holding a cup");
    CHECK(render_base_prompt("no placeholders", "x", "y") == "no placeholders");
    CHECK(render_base_prompt("{object} and {object}", "x", "y") == "y and y");
  }
}
