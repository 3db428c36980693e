#include "hoigen/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "hoigen/errors.hpp"
#include "hoigen/jsonl.hpp"
#include "hoigen/review.hpp"

namespace hoigen {

using nlohmann::json;

std::string_view to_string(Metric m) {
  return m == Metric::ClipScore ? "ClipScore" : "ImageReward";
}

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::Fidelity: return "Fidelity";
    case Dimension::Alignment: return "Alignment";
    case Dimension::Overall: return "Overall";
  }
  return "?";
}

namespace {

// Rounds to 15 significant digits, the decimal precision a double carries,
// so decimal inputs such as {0.2, 0.6, 1.0} land on 0.5 rather than one ulp
// below it.
double round_significant(double x) {
  return std::strtod(fmt::format("{:.15g}", x).c_str(), nullptr);
}

}  // namespace

std::vector<double> normalize_min_max(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("normalize_min_max: empty input");
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("normalize_min_max: non-finite value");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double max = *hi;
  std::vector<double> out;
  out.reserve(values.size());
  if (max == min) {
    out.assign(values.size(), 0.5);
    return out;
  }
  const double range = max - min;
  for (double v : values) {
    if (v == min) {
      out.push_back(0.0);
    } else if (v == max) {
      out.push_back(1.0);
    } else {
      out.push_back(std::clamp(round_significant((v - min) / range), 0.0, 1.0));
    }
  }
  return out;
}

double stable_mean(std::vector<double> values) {
  if (values.empty()) throw EmptyGroup("mean of an empty group");
  std::sort(values.begin(), values.end());
  double sum = 0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::vector<ScoreCell> aggregate_scores(std::span<const ScoreSample> samples) {
  if (samples.empty()) throw EmptyGroup("aggregate_scores: no samples");
  std::map<std::pair<std::string, Metric>, std::vector<double>> groups;
  for (const auto& s : samples) {
    if (!std::isfinite(s.value)) {
      throw std::invalid_argument(fmt::format("non-finite score for model {}", s.model_id));
    }
    groups[{s.model_id, s.metric}].push_back(s.value);
  }
  std::vector<ScoreCell> out;
  for (auto& [key, values] : groups) {
    if (key.second == Metric::ImageReward) values = normalize_min_max(values);
    const auto n = values.size();
    out.push_back({key.first, key.second, stable_mean(std::move(values)), n});
  }
  return out;
}

std::vector<RatingCell> human_study_report(std::span<const RatingRecord> records) {
  std::map<std::pair<std::string, Dimension>, std::vector<double>> groups;
  std::map<std::pair<std::string, Dimension>, std::set<std::string>> raters;
  for (const auto& r : records) {
    check_rating(r.rating, to_string(r.dimension));
    groups[{r.model_id, r.dimension}].push_back(r.rating);
    raters[{r.model_id, r.dimension}].insert(r.rater_id);
  }
  std::vector<RatingCell> out;
  for (auto& [key, values] : groups) {
    const auto n = values.size();
    out.push_back({key.first, key.second, stable_mean(std::move(values)), n,
                   raters[key].size()});
  }
  return out;
}

namespace {

Metric metric_from_string(const std::string& s) {
  if (s == "ClipScore" || s == "CLIPScore" || s == "clip_score") return Metric::ClipScore;
  if (s == "ImageReward" || s == "image_reward") return Metric::ImageReward;
  throw std::invalid_argument("unknown metric '" + s + "'");
}

Dimension dimension_from_string(const std::string& s) {
  if (s == "Fidelity" || s == "fidelity") return Dimension::Fidelity;
  if (s == "Alignment" || s == "alignment") return Dimension::Alignment;
  if (s == "Overall" || s == "overall") return Dimension::Overall;
  throw std::invalid_argument("unknown dimension '" + s + "'");
}

}  // namespace

ScoreSample score_sample_from_json(const json& j) {
  ScoreSample s;
  s.model_id = j.at("model_id").get<std::string>();
  s.prompt_id = j.value("prompt_id", "");
  s.metric = metric_from_string(j.at("metric").get<std::string>());
  s.value = j.at("value").get<double>();
  if (!std::isfinite(s.value)) throw std::invalid_argument("score must be finite");
  return s;
}

RatingRecord rating_record_from_json(const json& j) {
  RatingRecord r;
  r.rater_id = j.value("rater_id", "anonymous");
  r.image_id = j.at("image_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.dimension = dimension_from_string(j.at("dimension").get<std::string>());
  const auto& rating = j.at("rating");
  if (!rating.is_number_integer()) throw RangeError("rating must be an integer in 1..5");
  const auto v = rating.get<std::int64_t>();
  if (v < 1 || v > 5) throw RangeError(fmt::format("rating {} outside 1..5", v));
  r.rating = static_cast<int>(v);
  return r;
}

EvalInput load_eval_file(const std::filesystem::path& path) {
  EvalInput out;
  const auto contents = read_jsonl(path);
  for (const auto& line : contents.records) {
    const json& j = line.value;
    try {
      if (j.contains("metric")) {
        out.scores.push_back(score_sample_from_json(j));
      } else if (j.contains("dimension")) {
        out.ratings.push_back(rating_record_from_json(j));
      } else if (j.contains("fidelity")) {
        const HumanLabel label =
            j.contains("good") ? stored_label_from_json(j) : label_from_json(j);
        const std::string model = j.value("model_id", "dataset");
        for (const auto& [dim, value] :
             {std::pair{Dimension::Fidelity, label.fidelity},
              std::pair{Dimension::Alignment, label.alignment},
              std::pair{Dimension::Overall, label.overall}}) {
          out.ratings.push_back({label.rater_id, label.pair_id, model, dim, value});
        }
      } else {
        throw std::invalid_argument("neither a score sample nor a rating");
      }
    } catch (const RangeError&) {
      throw;
    } catch (const std::exception& e) {
      throw CorruptRecord(line.line, e.what());
    }
  }
  if (contents.torn_tail) throw CorruptRecord(contents.records.size() + 1, "unterminated line");
  return out;
}

std::string render_eval_report(std::span<const ScoreCell> scores,
                               std::span<const RatingCell> ratings) {
  std::string out;
  if (!scores.empty()) {
    out += fmt::format("{:<24}  {:>10}  {:>12}  {:>8}\n", "Model", "ClipScore", "ImageReward*",
                       "samples");
    std::map<std::string, std::pair<const ScoreCell*, const ScoreCell*>> by_model;
    for (const auto& c : scores) {
      auto& slot = by_model[c.model_id];
      (c.metric == Metric::ClipScore ? slot.first : slot.second) = &c;
    }
    for (const auto& [model, cells] : by_model) {
      const auto fmt_cell = [](const ScoreCell* c, int precision) {
        return c ? fmt::format("{:.{}f}", c->mean, precision) : std::string("-");
      };
      const std::size_t n = (cells.first ? cells.first->samples : 0) +
                            (cells.second ? cells.second->samples : 0);
      out += fmt::format("{:<24}  {:>10}  {:>12}  {:>8}\n", model, fmt_cell(cells.first, 2),
                         fmt_cell(cells.second, 4), n);
    }
    out += "* min-max normalized per model; a model whose ImageReward values are all\n"
           "  equal is mapped to 0.5.\n";
  }
  if (!ratings.empty()) {
    if (!out.empty()) out += '\n';
    out += fmt::format("{:<24}  {:>9}  {:>9}  {:>9}  {:>6}\n", "Model", "Fidelity", "Alignment",
                       "Overall", "raters");
    std::map<std::string, std::array<const RatingCell*, 3>> by_model;
    for (const auto& c : ratings) by_model[c.model_id][static_cast<int>(c.dimension)] = &c;
    for (const auto& [model, cells] : by_model) {
      std::size_t raters = 0;
      std::string cols;
      for (const auto* c : cells) {
        cols += fmt::format("  {:>9}", c ? fmt::format("{:.2f}", c->mean) : std::string("-"));
        if (c) raters = std::max(raters, c->raters);
      }
      out += fmt::format("{:<24}{}  {:>6}\n", model, cols, raters);
    }
  }
  return out;
}

json eval_report_json(std::span<const ScoreCell> scores, std::span<const RatingCell> ratings) {
  json s = json::array();
  for (const auto& c : scores) {
    s.push_back({{"model_id", c.model_id},
                 {"metric", to_string(c.metric)},
                 {"mean", c.mean},
                 {"samples", c.samples}});
  }
  json r = json::array();
  for (const auto& c : ratings) {
    r.push_back({{"model_id", c.model_id},
                 {"dimension", to_string(c.dimension)},
                 {"mean", std::round(c.mean * 100.0) / 100.0},
                 {"ratings", c.ratings},
                 {"raters", c.raters}});
  }
  return json{{"scores", s}, {"ratings", r}};
}

}  // namespace hoigen
