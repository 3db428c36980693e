#pragma once

// Score aggregation for externally computed metrics and human ratings.

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hoigen {

enum class Metric { ClipScore, ImageReward };
enum class Dimension { Fidelity, Alignment, Overall };

std::string_view to_string(Metric m);
std::string_view to_string(Dimension d);

struct ScoreSample {
  std::string model_id;
  std::string prompt_id;
  Metric metric = Metric::ClipScore;
  double value = 0;
};

struct RatingRecord {
  std::string rater_id;
  std::string image_id;
  std::string model_id;
  Dimension dimension = Dimension::Overall;
  int rating = 0;
};

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyGroup : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// (v - min) / (max - min), rounded to 15 significant digits. A zero range
/// maps every value to 0.5.
/// Throws EmptyInput, or std::invalid_argument on non-finite values.
std::vector<double> normalize_min_max(std::span<const double> values);

/// Arithmetic mean over values sorted ascending, so the result does not
/// depend on input order.
double stable_mean(std::vector<double> values);

struct ScoreCell {
  std::string model_id;
  Metric metric;
  double mean;
  std::size_t samples;
};

/// Per (model, metric) means, ImageReward min-max normalized within each
/// model first. Sorted by model then metric. Throws EmptyGroup on no input.
std::vector<ScoreCell> aggregate_scores(std::span<const ScoreSample> samples);

struct RatingCell {
  std::string model_id;
  Dimension dimension;
  double mean;
  std::size_t ratings;
  std::size_t raters;
};

/// Per (model, dimension) means on the 1..5 scale. Throws RangeError.
std::vector<RatingCell> human_study_report(std::span<const RatingRecord> records);

ScoreSample score_sample_from_json(const nlohmann::json& j);
/// Throws RangeError for ratings outside 1..5.
RatingRecord rating_record_from_json(const nlohmann::json& j);

struct EvalInput {
  std::vector<ScoreSample> scores;
  std::vector<RatingRecord> ratings;
};

/// Line-delimited file mixing score samples (lines with "metric"), rating
/// records (lines with "dimension") and review labels (lines with
/// "fidelity"; one rating per dimension, model "dataset" unless given).
EvalInput load_eval_file(const std::filesystem::path& path);

std::string render_eval_report(std::span<const ScoreCell> scores,
                               std::span<const RatingCell> ratings);
nlohmann::json eval_report_json(std::span<const ScoreCell> scores,
                                std::span<const RatingCell> ratings);

}  // namespace hoigen
