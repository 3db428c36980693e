#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "hoigen/campaign.hpp"
#include "hoigen/mock_backends.hpp"
#include "hoigen/util.hpp"

namespace hoigen {

using nlohmann::json;

namespace {

EndpointConfig endpoint_from_json(const json& j, const char* url_key = "url") {
  EndpointConfig e;
  e.url = j.value(url_key, "");
  e.headers = j.value("headers", std::map<std::string, std::string>{});
  e.auth_env = j.value("auth_env", "");
  e.timeout_ms = j.value("timeout_ms", e.timeout_ms);
  e.retries = j.value("retries", e.retries);
  return e;
}

GenerationParams params_from_json(const json& j) {
  GenerationParams p;
  p.width = j.value("width", p.width);
  p.height = j.value("height", p.height);
  p.steps_base = j.value("steps_base", p.steps_base);
  p.steps_refine = j.value("steps_refine", p.steps_refine);
  p.guidance = j.value("guidance", p.guidance);
  return p;
}

QuotaScale scale_from_json(const json& j) {
  if (j.is_string()) return QuotaScale::parse(j.get<std::string>());
  if (j.is_number_integer()) return QuotaScale::parse(std::to_string(j.get<std::int64_t>()));
  if (j.is_number()) return QuotaScale::parse(j.dump());
  throw ConfigError("quota.scale must be a number or a string such as \"1/100\"");
}

QuotaConfig quota_from_json(const json& j) {
  QuotaConfig q = QuotaConfig::default_table();
  if (j.contains("object_types") || j.contains("races") || j.contains("targets")) {
    q.object_types = j.at("object_types").get<std::vector<std::string>>();
    q.races = j.at("races").get<std::vector<std::string>>();
    q.targets = j.at("targets").get<std::vector<std::vector<std::int64_t>>>();
  }
  if (const auto it = j.find("scale"); it != j.end()) q.scale = scale_from_json(*it);
  return q;
}

std::optional<MotionType> motion_from_token(std::string_view token) {
  const std::string want = normalize_token(token);
  for (MotionType m : kAllMotionTypes) {
    if (normalize_token(to_string(m)) == want) return m;
  }
  return std::nullopt;
}

}  // namespace

CampaignConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  CampaignConfig c;
  try {
    std::filesystem::path dir = j.value("data_dir", "data");
    c.data_dir = dir.is_absolute() || base_dir.empty() ? dir : base_dir / dir;
    c.master_seed = j.value("master_seed", std::uint64_t{0});
    if (const auto it = j.find("quota"); it != j.end()) c.quota = quota_from_json(*it);
    c.base_prompts = j.value("base_prompts", c.base_prompts);
    c.object_examples = j.value("object_examples", c.object_examples);

    if (const auto it = j.find("llm"); it != j.end()) {
      c.llm.endpoint = endpoint_from_json(*it);
      c.llm.max_tokens = it->value("max_tokens", c.llm.max_tokens);
      c.llm.temperature = it->value("temperature", c.llm.temperature);
    }
    for (const auto& pj : j.value("proposers", json::array())) {
      ProposerConfig p;
      p.descriptor.id = pj.at("id").get<std::string>();
      p.endpoint = endpoint_from_json(pj, pj.contains("url") ? "url" : "endpoint");
      p.descriptor.endpoint = p.endpoint.url;
      p.descriptor.categories = pj.value("categories", std::vector<std::string>{});
      p.descriptor.params = params_from_json(pj.value("params", json::object()));
      if (pj.contains("verifier_id")) p.descriptor.verifier_id = pj["verifier_id"].get<std::string>();
      if (pj.contains("threshold")) p.descriptor.threshold = pj["threshold"].get<double>();
      p.descriptor.max_in_flight = pj.value("max_in_flight", 1);
      c.proposers.push_back(std::move(p));
    }
    for (const auto& vj : j.value("verifiers", json::array())) {
      c.verifiers.push_back({vj.at("id").get<std::string>(), endpoint_from_json(vj)});
    }
    c.default_verifier = j.value("default_verifier", c.default_verifier);
    c.threshold = j.value("threshold", c.threshold);
    if (const auto it = j.find("human_review"); it != j.end()) {
      c.human_review.enabled = it->value("enabled", false);
      c.human_review.delta = it->value("band", c.human_review.delta);
    }
    if (const auto it = j.find("budgets"); it != j.end()) {
      c.budgets.enrich_attempts = it->value("enrich_attempts", c.budgets.enrich_attempts);
      c.budgets.proposer_rounds = it->value("proposer_rounds", c.budgets.proposer_rounds);
      c.budgets.max_attempts = it->value("max_attempts", c.budgets.max_attempts);
      c.budgets.fatal_after = it->value("fatal_after", c.budgets.fatal_after);
    }
    if (const auto it = j.find("concurrency"); it != j.end()) {
      c.concurrency.workers = it->value("workers", c.concurrency.workers);
      c.concurrency.llm = it->value("llm", c.concurrency.llm);
      c.concurrency.verifier = it->value("verifier", c.concurrency.verifier);
    }
    c.rules = j.value("rules", c.rules);
    c.categories = j.value("categories", c.categories);
    if (const auto it = j.find("review"); it != j.end()) {
      c.review_bind = it->value("bind", c.review_bind);
    }
    if (const auto it = j.find("mock"); it != j.end()) {
      c.mock.accept_probability = it->value("accept_probability", c.mock.accept_probability);
      c.mock.latency_ms = it->value("latency_ms", c.mock.latency_ms);
      c.mock.failing_proposers = it->value("failing_proposers", c.mock.failing_proposers);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const InvalidQuota& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate_config(c);
  return c;
}

CampaignConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const StorageFailure& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(j, path.parent_path());
}

RuleProfile rule_profile(const CampaignConfig& config) {
  try {
    return RuleProfile::from_overrides(config.rules);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("rules: ") + e.what());
  }
}

CategoryTable category_table(const CampaignConfig& config) {
  CategoryTable table;
  for (const auto& [token, category] : config.categories) {
    const auto m = motion_from_token(token);
    if (!m) throw ConfigError("categories: unknown motion type '" + token + "'");
    if (category.empty()) throw ConfigError("categories: empty category for '" + token + "'");
    table.set(*m, PoseCategory{category});
  }
  return table;
}

void validate_config(const CampaignConfig& c) {
  const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (c.data_dir.empty()) fail("data_dir must be set");

  QuotaMatrix q;
  try {
    q = init_quota(c.quota);
  } catch (const InvalidQuota& e) {
    fail(std::string("quota: ") + e.what());
  }
  for (const auto& o : q.object_types()) {
    if (!c.base_prompts.count(o)) fail("no base prompt template for object type '" + o + "'");
  }
  for (const auto& [type, examples] : c.object_examples) {
    if (std::find(q.object_types().begin(), q.object_types().end(), type) ==
        q.object_types().end()) {
      fail("object_examples: unknown object type '" + type + "'");
    }
  }

  const auto& b = c.budgets;
  if (b.enrich_attempts < 1) fail("budgets.enrich_attempts must be >= 1");
  if (b.proposer_rounds < 1) fail("budgets.proposer_rounds must be >= 1");
  if (b.max_attempts < 0) fail("budgets.max_attempts must be >= 0");
  if (b.fatal_after < 1) fail("budgets.fatal_after must be >= 1");
  const auto& cc = c.concurrency;
  if (cc.workers < 1 || cc.llm < 1 || cc.verifier < 1) fail("concurrency caps must be >= 1");

  if (!(c.threshold > 0.0 && c.threshold < 1.0)) fail("threshold must lie in (0, 1)");
  if (c.human_review.enabled && !(c.human_review.delta > 0.0 && c.human_review.delta < 0.5)) {
    fail("human_review.band must lie in (0, 0.5)");
  }
  if (!(c.mock.accept_probability >= 0.0 && c.mock.accept_probability <= 1.0)) {
    fail("mock.accept_probability must lie in [0, 1]");
  }
  if (c.mock.latency_ms < 0) fail("mock.latency_ms must be >= 0");
  if (c.llm.max_tokens < 1) fail("llm.max_tokens must be >= 1");

  std::set<std::string> verifier_ids{c.default_verifier};
  for (const auto& v : c.verifiers) {
    if (v.id.empty()) fail("verifier id must be nonempty");
    verifier_ids.insert(v.id);
  }
  if (c.proposers.empty()) fail("at least one proposer is required");
  std::set<std::string> proposer_ids;
  std::set<std::string> served;
  for (const auto& p : c.proposers) {
    const auto& d = p.descriptor;
    if (d.id.empty()) fail("proposer id must be nonempty");
    if (!proposer_ids.insert(d.id).second) fail("duplicate proposer id '" + d.id + "'");
    if (d.categories.empty()) fail("proposer '" + d.id + "' serves no category");
    served.insert(d.categories.begin(), d.categories.end());
    if (d.max_in_flight < 1) fail("proposer '" + d.id + "': max_in_flight must be >= 1");
    if (d.verifier_id && !verifier_ids.count(*d.verifier_id)) {
      fail("proposer '" + d.id + "': unknown verifier '" + *d.verifier_id + "'");
    }
    if (d.threshold && !(*d.threshold > 0.0 && *d.threshold < 1.0)) {
      fail("proposer '" + d.id + "': threshold must lie in (0, 1)");
    }
    try {
      check_params(d.params);
    } catch (const std::invalid_argument& e) {
      fail("proposer '" + d.id + "': " + e.what());
    }
  }
  for (const auto& f : c.mock.failing_proposers) {
    if (!proposer_ids.count(f)) fail("mock.failing_proposers: unknown proposer '" + f + "'");
  }

  rule_profile(c);
  const CategoryTable table = category_table(c);
  for (MotionType m : kAllMotionTypes) {
    if (!served.count(table.of(m).name)) {
      fail(fmt::format("no proposer serves pose category '{}' (motion {})", table.of(m).name,
                       to_string(m)));
    }
  }
}

json default_config_json(const std::string& data_dir) {
  const QuotaConfig q = QuotaConfig::default_table();
  const std::map<std::string, std::pair<std::string, std::vector<std::string>>> prompts = {
      {"Kitchen objects",
       {"A {race} person's hand holding a {object} in a kitchen",
        {"kitchen knife", "coffee mug", "spatula", "frying pan", "whisk"}}},
      {"Sports Objects",
       {"A {race} person's hand gripping a {object}",
        {"tennis racket", "baseball", "basketball", "golf club", "dumbbell"}}},
      {"Electronics",
       {"A {race} person's hand holding a {object}",
        {"smartphone", "tv remote", "game controller", "computer mouse", "camera"}}},
      {"Musical Instruments",
       {"A {race} person's hand playing a {object}",
        {"guitar", "violin bow", "flute", "drumstick", "harmonica"}}},
      {"Hardware tools",
       {"A {race} person's hand using a {object}",
        {"hammer", "screwdriver", "wrench", "pair of pliers", "power drill"}}},
      {"Art supplies",
       {"A {race} person's hand holding a {object}",
        {"paintbrush", "pencil", "crayon", "palette knife", "marker"}}},
      {"Medical Instruments",
       {"A {race} person's hand holding a {object}",
        {"syringe", "stethoscope", "thermometer", "scalpel", "pair of tweezers"}}},
      {"Gardening tools",
       {"A {race} person's hand using a {object}",
        {"trowel", "pair of pruning shears", "watering can", "rake", "hoe"}}},
      {"Vehicle Interior",
       {"A {race} person's hand on the {object} inside a car",
        {"steering wheel", "gear shift", "handbrake", "door handle", "radio knob"}}},
      {"Straight hand",
       {"A {race} person's straight open hand {object}",
        {"resting flat on a table", "raised in a wave", "pressing against a window",
         "held palm up"}}},
      {"Household supplies",
       {"A {race} person's hand holding a {object}",
        {"spray bottle", "broom", "sponge", "detergent bottle", "light bulb"}}},
      {"Office supplies",
       {"A {race} person's hand holding a {object}",
        {"stapler", "pen", "pair of scissors", "tape dispenser", "paper clip"}}},
      {"Miscellaneous",
       {"A {race} person's hand holding a {object}",
        {"umbrella", "key", "book", "wallet", "water bottle"}}},
  };
  json base = json::object();
  json examples = json::object();
  for (const auto& [type, entry] : prompts) {
    base[type] = entry.first;
    examples[type] = entry.second;
  }
  const auto proposer = [](const char* id, const char* category, int port) {
    return json{{"id", id},
                {"url", fmt::format("http://127.0.0.1:{}/generate", port)},
                {"categories", {category}},
                {"params",
                 {{"width", 1024},
                  {"height", 1024},
                  {"steps_base", 80},
                  {"steps_refine", 20},
                  {"guidance", 7.0}}},
                {"max_in_flight", 2},
                {"timeout_ms", 120000},
                {"retries", 2}};
  };
  return json{
      {"data_dir", data_dir},
      {"master_seed", 1},
      {"quota",
       {{"object_types", q.object_types}, {"races", q.races}, {"targets", q.targets},
        {"scale", "1"}}},
      {"base_prompts", base},
      {"object_examples", examples},
      {"llm",
       {{"url", "http://127.0.0.1:9000/complete"},
        {"auth_env", "HOIGEN_LLM_TOKEN"},
        {"max_tokens", 1024},
        {"temperature", 0.7},
        {"timeout_ms", 60000},
        {"retries", 2}}},
      {"proposers",
       {proposer("power", "PowerGrasp", 9001), proposer("precision", "PrecisionGrasp", 9002),
        proposer("open_hand", "OpenHand", 9003)}},
      {"verifiers", {{{"id", "default"}, {"url", "http://127.0.0.1:9100/score"},
                      {"timeout_ms", 60000}, {"retries", 2}}}},
      {"default_verifier", "default"},
      {"threshold", kDefaultThreshold},
      {"human_review", {{"enabled", false}, {"band", 0.1}}},
      {"budgets",
       {{"enrich_attempts", 3}, {"proposer_rounds", 3}, {"max_attempts", 0}, {"fatal_after", 3}}},
      {"concurrency", {{"workers", 4}, {"llm", 4}, {"verifier", 4}}},
      {"rules", json::object()},
      {"categories", json::object()},
      {"review", {{"bind", "127.0.0.1:8765"}}},
      {"mock", {{"accept_probability", 0.7}, {"latency_ms", 0}, {"failing_proposers", json::array()}}},
  };
}

std::string render_base_prompt(std::string_view tmpl, std::string_view race,
                               std::string_view object) {
  std::string out;
  out.reserve(tmpl.size() + race.size() + object.size());
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl.compare(i, 6, "{race}") == 0) {
      out += race;
      i += 6;
    } else if (tmpl.compare(i, 8, "{object}") == 0) {
      out += object;
      i += 8;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

BackendSet make_http_backends(const CampaignConfig& config) {
  BackendSet set;
  if (config.llm.endpoint.url.empty()) throw ConfigError("llm.url is required without --mock");
  set.llm = std::make_shared<HttpLlm>(config.llm.endpoint);
  for (const auto& p : config.proposers) {
    if (p.endpoint.url.empty()) throw ConfigError("proposer '" + p.descriptor.id + "' has no url");
    set.proposers[p.descriptor.id] = std::make_shared<HttpProposer>(p.endpoint);
  }
  for (const auto& v : config.verifiers) {
    if (v.endpoint.url.empty()) throw ConfigError("verifier '" + v.id + "' has no url");
    set.verifiers[v.id] = std::make_shared<HttpVerifier>(v.endpoint);
  }
  if (!set.verifiers.count(config.default_verifier)) {
    throw ConfigError("default verifier '" + config.default_verifier + "' has no endpoint");
  }
  return set;
}

BackendSet make_mock_backends(const CampaignConfig& config) {
  const std::chrono::milliseconds latency(config.mock.latency_ms);
  BackendSet set;
  set.llm = std::make_shared<MockLlm>(config.master_seed, latency);
  for (const auto& p : config.proposers) {
    const auto& id = p.descriptor.id;
    const bool failing = std::find(config.mock.failing_proposers.begin(),
                                   config.mock.failing_proposers.end(),
                                   id) != config.mock.failing_proposers.end();
    set.proposers[id] = std::make_shared<MockProposer>(id, latency, failing);
  }
  std::set<std::string> ids{config.default_verifier};
  for (const auto& v : config.verifiers) ids.insert(v.id);
  for (const auto& id : ids) {
    double threshold = config.threshold;
    for (const auto& p : config.proposers) {
      if (p.descriptor.verifier_id == id && p.descriptor.threshold) {
        threshold = *p.descriptor.threshold;
      }
    }
    set.verifiers[id] = std::make_shared<MockVerifier>(config.mock.accept_probability, threshold,
                                                       latency, stable_hash64(id));
  }
  return set;
}

}  // namespace hoigen
