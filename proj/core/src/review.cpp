#include "hoigen/review.hpp"

#include <set>
#include <utility>

#include <fmt/format.h>

#include "hoigen/errors.hpp"
#include "hoigen/jsonl.hpp"
#include "hoigen/util.hpp"

namespace hoigen {

using nlohmann::json;

json to_json(const ReviewItem& item) {
  return json{{"pair_id", item.pair_id},
              {"image_path", item.image_path},
              {"positive", item.positive},
              {"negative", item.negative},
              {"program_text", item.program_text},
              {"proposer_id", item.proposer_id},
              {"verifier_id", item.verifier_id},
              {"verifier_score", item.score},
              {"threshold", item.threshold},
              {"object_type", item.object_type},
              {"race", item.race},
              {"pose_category", item.pose_category},
              {"seed", item.seed},
              {"warnings", item.warnings},
              {"created_at", item.created_at}};
}

ReviewItem review_item_from_json(const json& j) {
  ReviewItem item;
  item.pair_id = j.at("pair_id").get<std::string>();
  item.image_path = j.at("image_path").get<std::string>();
  item.positive = j.at("positive").get<std::string>();
  item.negative = j.value("negative", "");
  item.program_text = j.value("program_text", "");
  item.proposer_id = j.value("proposer_id", "");
  item.verifier_id = j.value("verifier_id", "");
  item.score = j.at("verifier_score").get<double>();
  item.threshold = j.at("threshold").get<double>();
  item.object_type = j.value("object_type", "");
  item.race = j.value("race", "");
  item.pose_category = j.value("pose_category", "");
  item.seed = j.value("seed", std::uint64_t{0});
  item.warnings = j.value("warnings", std::vector<std::string>{});
  item.created_at = j.value("created_at", "");
  return item;
}

void ReviewQueue::append(const ReviewItem& item) const {
  append_line(path_, to_json(item).dump());
}

std::vector<ReviewItem> ReviewQueue::load() const {
  std::vector<ReviewItem> out;
  std::set<std::string> seen;
  for (const auto& rec : read_jsonl(path_).records) {
    try {
      auto item = review_item_from_json(rec.value);
      if (seen.insert(item.pair_id).second) out.push_back(std::move(item));
    } catch (const json::exception& e) {
      throw CorruptRecord(rec.line, e.what());
    }
  }
  return out;
}

void check_rating(int rating, std::string_view dimension) {
  if (rating < 1 || rating > 5) {
    throw RangeError(fmt::format("{} rating {} outside 1..5", dimension, rating));
  }
}

namespace {

int rating_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(fmt::format("missing field '{}'", key));
  if (!it->is_number_integer()) {
    if (it->is_number()) throw RangeError(fmt::format("{} rating must be an integer", key));
    throw std::invalid_argument(fmt::format("field '{}' must be an integer", key));
  }
  const auto v = it->get<std::int64_t>();
  if (v < 1 || v > 5) throw RangeError(fmt::format("{} rating {} outside 1..5", key, v));
  return static_cast<int>(v);
}

}  // namespace

HumanLabel label_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("label must be an object");
  HumanLabel label;
  const auto pid = j.find("pair_id");
  if (pid == j.end() || !pid->is_string() || pid->get<std::string>().empty()) {
    throw std::invalid_argument("missing field 'pair_id'");
  }
  label.pair_id = pid->get<std::string>();
  label.fidelity = rating_field(j, "fidelity");
  label.alignment = rating_field(j, "alignment");
  label.overall = rating_field(j, "overall");
  const auto acc = j.find("accept");
  if (acc == j.end() || !acc->is_boolean()) {
    throw std::invalid_argument("field 'accept' must be a boolean");
  }
  label.accept = acc->get<bool>();
  if (const auto r = j.find("rater_id"); r != j.end() && !r->is_null()) {
    if (!r->is_string()) throw std::invalid_argument("field 'rater_id' must be a string");
    if (!r->get<std::string>().empty()) label.rater_id = r->get<std::string>();
  }
  return label;
}

json to_json(const HumanLabel& label) {
  return json{{"pair_id", label.pair_id},     {"rater_id", label.rater_id},
              {"image_path", label.image_path}, {"positive", label.positive},
              {"good", label.accept},          {"fidelity", label.fidelity},
              {"alignment", label.alignment},  {"overall", label.overall}};
}

HumanLabel stored_label_from_json(const json& j) {
  HumanLabel label;
  label.pair_id = j.at("pair_id").get<std::string>();
  label.rater_id = j.at("rater_id").get<std::string>();
  label.image_path = j.value("image_path", "");
  label.positive = j.value("positive", "");
  label.accept = j.at("good").get<bool>();
  label.fidelity = j.at("fidelity").get<int>();
  label.alignment = j.at("alignment").get<int>();
  label.overall = j.at("overall").get<int>();
  check_rating(label.fidelity, "fidelity");
  check_rating(label.alignment, "alignment");
  check_rating(label.overall, "overall");
  return label;
}

LabelStore::IngestResult LabelStore::ingest(std::span<const HumanLabel> labels) {
  std::lock_guard lock(mu_);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& l : load()) seen.emplace(l.pair_id, l.rater_id);

  IngestResult result;
  for (const auto& l : labels) {
    check_rating(l.fidelity, "fidelity");
    check_rating(l.alignment, "alignment");
    check_rating(l.overall, "overall");
  }
  for (const auto& l : labels) {
    if (!seen.emplace(l.pair_id, l.rater_id).second) {
      ++result.duplicates;
      continue;
    }
    append_line(path_, to_json(l).dump());
    ++result.added;
  }
  return result;
}

std::vector<HumanLabel> LabelStore::load() const { return read_training_labels(path_); }

void export_training_labels(std::span<const HumanLabel> labels,
                            const std::filesystem::path& out) {
  std::string text;
  for (const auto& l : labels) {
    text += to_json(l).dump();
    text += '\n';
  }
  write_file_atomic(out, text);
}

std::vector<HumanLabel> read_training_labels(const std::filesystem::path& path) {
  std::vector<HumanLabel> out;
  for (const auto& rec : read_jsonl(path).records) {
    try {
      out.push_back(stored_label_from_json(rec.value));
    } catch (const json::exception& e) {
      throw CorruptRecord(rec.line, e.what());
    } catch (const RangeError& e) {
      throw CorruptRecord(rec.line, e.what());
    }
  }
  return out;
}

}  // namespace hoigen
