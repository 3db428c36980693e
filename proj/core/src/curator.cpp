#include "hoigen/curator.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <numeric>

#include <fmt/format.h>

#include "hoigen/errors.hpp"
#include "hoigen/util.hpp"

namespace hoigen {

using nlohmann::json;

std::string to_string(const SlotKey& key) {
  return fmt::format("({}, {})", key.object_type, key.race);
}

namespace {

std::int64_t parse_int(std::string_view s, std::string_view whole) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end) {
    throw InvalidQuota(fmt::format("bad scale '{}'", whole));
  }
  return v;
}

}  // namespace

QuotaScale QuotaScale::parse(std::string_view text) {
  const std::string_view t = trim(text);
  QuotaScale s;
  if (const auto slash = t.find('/'); slash != std::string_view::npos) {
    s.num = parse_int(trim(t.substr(0, slash)), t);
    s.den = parse_int(trim(t.substr(slash + 1)), t);
  } else if (const auto dot = t.find('.'); dot != std::string_view::npos) {
    const auto frac = t.substr(dot + 1);
    if (frac.size() > 15) throw InvalidQuota(fmt::format("scale '{}' too precise", t));
    const auto whole = t.substr(0, dot);
    s.den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) s.den *= 10;
    const std::int64_t w = whole.empty() ? 0 : parse_int(whole, t);
    const std::int64_t f = frac.empty() ? 0 : parse_int(frac, t);
    if (w < 0 || (!whole.empty() && whole.front() == '-')) {
      throw InvalidQuota(fmt::format("scale '{}' must be positive", t));
    }
    s.num = w * s.den + f;
  } else {
    s.num = parse_int(t, t);
  }
  if (s.den <= 0 || s.num <= 0) throw InvalidQuota(fmt::format("scale '{}' must be positive", t));
  const auto g = std::gcd(s.num, s.den);
  s.num /= g;
  s.den /= g;
  return s;
}

std::string QuotaScale::str() const {
  return den == 1 ? std::to_string(num) : fmt::format("{}/{}", num, den);
}

QuotaConfig QuotaConfig::default_table() {
  QuotaConfig c;
  c.races = {"Light skinned", "Dark Skinned", "Asian", "Indian", "Latin"};
  c.object_types = {"Kitchen objects",     "Sports Objects",     "Electronics",
                    "Musical Instruments", "Hardware tools",     "Art supplies",
                    "Medical Instruments", "Gardening tools",    "Vehicle Interior",
                    "Straight hand",       "Household supplies", "Office supplies",
                    "Miscellaneous"};
  c.targets = {
      {100, 200, 200, 200, 200}, {100, 100, 200, 200, 200}, {100, 100, 200, 200, 200},
      {200, 200, 300, 200, 200}, {200, 200, 200, 200, 200}, {100, 100, 100, 100, 100},
      {100, 100, 100, 100, 100}, {100, 100, 100, 100, 100}, {100, 100, 100, 100, 100},
      {100, 200, 300, 200, 200}, {100, 100, 100, 100, 100}, {100, 100, 100, 100, 100},
      {300, 300, 300, 300, 300},
  };
  return c;
}

QuotaMatrix::QuotaMatrix(std::vector<std::string> object_types, std::vector<std::string> races,
                         std::vector<std::vector<std::int64_t>> targets)
    : object_types_(std::move(object_types)), races_(std::move(races)) {
  for (const auto& row : targets) targets_.insert(targets_.end(), row.begin(), row.end());
  filled_.assign(targets_.size(), 0);
}

std::vector<SlotKey> QuotaMatrix::slots() const {
  std::vector<SlotKey> out;
  out.reserve(targets_.size());
  for (const auto& o : object_types_) {
    for (const auto& r : races_) out.push_back({o, r});
  }
  return out;
}

std::size_t QuotaMatrix::index_of(const SlotKey& key) const {
  const auto o = std::find(object_types_.begin(), object_types_.end(), key.object_type);
  const auto r = std::find(races_.begin(), races_.end(), key.race);
  if (o == object_types_.end() || r == races_.end()) {
    throw std::out_of_range("slot " + to_string(key) + " is not in the quota");
  }
  return static_cast<std::size_t>(o - object_types_.begin()) * races_.size() +
         static_cast<std::size_t>(r - races_.begin());
}

bool QuotaMatrix::contains(const SlotKey& key) const {
  return std::find(object_types_.begin(), object_types_.end(), key.object_type) !=
             object_types_.end() &&
         std::find(races_.begin(), races_.end(), key.race) != races_.end();
}

std::int64_t QuotaMatrix::target(const SlotKey& key) const { return targets_[index_of(key)]; }
std::int64_t QuotaMatrix::filled(const SlotKey& key) const { return filled_[index_of(key)]; }

std::int64_t QuotaMatrix::row_target(std::string_view object_type) const {
  std::int64_t sum = 0;
  for (const auto& r : races_) sum += target({std::string(object_type), r});
  return sum;
}

std::int64_t QuotaMatrix::row_filled(std::string_view object_type) const {
  std::int64_t sum = 0;
  for (const auto& r : races_) sum += filled({std::string(object_type), r});
  return sum;
}

std::int64_t QuotaMatrix::column_target(std::string_view race) const {
  std::int64_t sum = 0;
  for (const auto& o : object_types_) sum += target({o, std::string(race)});
  return sum;
}

std::int64_t QuotaMatrix::column_filled(std::string_view race) const {
  std::int64_t sum = 0;
  for (const auto& o : object_types_) sum += filled({o, std::string(race)});
  return sum;
}

std::int64_t QuotaMatrix::total_target() const {
  return std::accumulate(targets_.begin(), targets_.end(), std::int64_t{0});
}

std::int64_t QuotaMatrix::total_filled() const {
  return std::accumulate(filled_.begin(), filled_.end(), std::int64_t{0});
}

bool QuotaMatrix::try_increment(const SlotKey& key) {
  const auto i = index_of(key);
  if (filled_[i] >= targets_[i]) return false;
  ++filled_[i];
  return true;
}

void QuotaMatrix::reset_filled() { std::fill(filled_.begin(), filled_.end(), 0); }

QuotaMatrix init_quota(const QuotaConfig& config) {
  if (config.object_types.empty() || config.races.empty()) {
    throw InvalidQuota("quota axes must be nonempty");
  }
  const auto check_unique = [](std::vector<std::string> v, std::string_view axis) {
    std::sort(v.begin(), v.end());
    if (std::adjacent_find(v.begin(), v.end()) != v.end()) {
      throw InvalidQuota(fmt::format("duplicate {} label", axis));
    }
  };
  check_unique(config.object_types, "object type");
  check_unique(config.races, "race");
  if (config.targets.size() != config.object_types.size()) {
    throw InvalidQuota(fmt::format("expected {} target rows, got {}", config.object_types.size(),
                                   config.targets.size()));
  }
  const auto& s = config.scale;
  if (s.num <= 0 || s.den <= 0) throw InvalidQuota("scale must be positive");

  std::vector<std::vector<std::int64_t>> scaled;
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    const auto& row = config.targets[i];
    if (row.size() != config.races.size()) {
      throw InvalidQuota(fmt::format("row '{}' has {} cells, expected {}",
                                     config.object_types[i], row.size(), config.races.size()));
    }
    auto& out = scaled.emplace_back();
    for (std::size_t j = 0; j < row.size(); ++j) {
      const std::int64_t cell = row[j];
      if (cell < 0) {
        throw InvalidQuota(fmt::format("negative target for ({}, {})", config.object_types[i],
                                       config.races[j]));
      }
      const std::int64_t product = cell * s.num;
      if (product % s.den != 0) {
        throw InvalidQuota(fmt::format("target {} x {} for ({}, {}) is not an integer", cell,
                                       s.str(), config.object_types[i], config.races[j]));
      }
      out.push_back(product / s.den);
    }
  }
  return QuotaMatrix(config.object_types, config.races, std::move(scaled));
}

std::optional<SlotKey> next_slot(const QuotaMatrix& q, std::mt19937_64& rng) {
  const std::int64_t total = q.total_deficit();
  if (total <= 0) return std::nullopt;
  auto r = static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(total)));
  for (const auto& key : q.slots()) {
    const auto d = q.deficit(key);
    if (r < d) return key;
    r -= d;
  }
  return std::nullopt;
}

std::optional<SlotKey> next_slot(const QuotaMatrix& q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return next_slot(q, rng);
}

std::string ManifestRecord::content_hash() const {
  return std::filesystem::path(image_path).stem().string();
}

json to_json(const ManifestRecord& r) {
  return json{{"id", r.id},
              {"image_path", r.image_path},
              {"positive", r.positive},
              {"negative", r.negative},
              {"program_text", r.program_text},
              {"object_type", r.object_type},
              {"race", r.race},
              {"pose_category", r.pose_category},
              {"proposer_id", r.proposer_id},
              {"verifier_score", r.verifier_score},
              {"seed", r.seed},
              {"warnings", r.warnings},
              {"created_at", r.created_at}};
}

ManifestRecord manifest_record_from_json(const json& j) {
  ManifestRecord r;
  r.id = j.at("id").get<std::uint64_t>();
  r.image_path = j.at("image_path").get<std::string>();
  r.positive = j.at("positive").get<std::string>();
  r.negative = j.at("negative").get<std::string>();
  r.program_text = j.at("program_text").get<std::string>();
  r.object_type = j.at("object_type").get<std::string>();
  r.race = j.at("race").get<std::string>();
  r.pose_category = j.at("pose_category").get<std::string>();
  r.proposer_id = j.at("proposer_id").get<std::string>();
  r.verifier_score = j.at("verifier_score").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.created_at = j.at("created_at").get<std::string>();
  return r;
}

ManifestContents read_manifest(const std::filesystem::path& path) {
  auto raw = read_jsonl(path);
  ManifestContents out;
  out.complete_bytes = raw.complete_bytes;
  out.torn_tail = raw.torn_tail;
  out.records.reserve(raw.records.size());
  for (const auto& line : raw.records) {
    try {
      out.records.push_back(manifest_record_from_json(line.value));
    } catch (const json::exception& e) {
      throw CorruptRecord(line.line, e.what());
    }
  }
  return out;
}

RebuildResult rebuild_from_manifest(const std::filesystem::path& manifest,
                                    const QuotaMatrix& targets, bool truncate) {
  auto raw = read_jsonl(manifest);
  RebuildResult out;
  out.quota = targets;
  out.quota.reset_filled();
  out.torn_tail = raw.torn_tail;

  std::set<std::uint64_t> ids;
  for (const auto& line : raw.records) {
    ManifestRecord r;
    try {
      r = manifest_record_from_json(line.value);
    } catch (const json::exception& e) {
      throw CorruptRecord(line.line, e.what());
    }
    if (!out.quota.contains(r.slot())) {
      throw CorruptRecord(line.line, "slot " + to_string(r.slot()) + " is not in the quota");
    }
    if (!ids.insert(r.id).second) {
      throw CorruptRecord(line.line, fmt::format("duplicate id {}", r.id));
    }
    if (!out.quota.try_increment(r.slot())) {
      throw CorruptRecord(line.line, "slot " + to_string(r.slot()) + " exceeds its target");
    }
    out.hashes.insert(r.content_hash());
    out.max_id = std::max(out.max_id, r.id);
    ++out.records;
  }

  if (truncate && raw.torn_tail) {
    std::error_code ec;
    std::filesystem::resize_file(manifest, raw.complete_bytes, ec);
    if (ec) throw StorageFailure("cannot truncate " + manifest.string() + ": " + ec.message());
  }
  return out;
}

std::string_view to_string(AdmitStatus s) {
  switch (s) {
    case AdmitStatus::Admitted: return "admitted";
    case AdmitStatus::SlotFull: return "slot_full";
    case AdmitStatus::Duplicate: return "duplicate";
  }
  return "?";
}

Curator::Curator(std::filesystem::path manifest, const QuotaMatrix& targets)
    : path_(std::move(manifest)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  auto rebuilt = rebuild_from_manifest(path_, targets, true);
  quota_ = std::move(rebuilt.quota);
  max_id_ = rebuilt.max_id;
  hashes_ = std::move(rebuilt.hashes);
}

AdmitResult Curator::admit(ManifestRecord record) {
  std::lock_guard lock(mu_);
  const SlotKey key = record.slot();
  if (!quota_.contains(key)) {
    throw std::invalid_argument("slot " + to_string(key) + " is not in the quota");
  }
  const std::string hash = record.content_hash();
  if (hashes_.count(hash) != 0) return {AdmitStatus::Duplicate};
  if (quota_.deficit(key) <= 0) return {AdmitStatus::SlotFull};

  record.id = max_id_ + 1;
  append_line(path_, to_json(record).dump());
  quota_.try_increment(key);
  hashes_.insert(hash);
  max_id_ = record.id;
  return {AdmitStatus::Admitted, record.id};
}

QuotaMatrix Curator::quota() const {
  std::lock_guard lock(mu_);
  return quota_;
}

std::uint64_t Curator::max_id() const {
  std::lock_guard lock(mu_);
  return max_id_;
}

bool Curator::has_hash(const std::string& hash) const {
  std::lock_guard lock(mu_);
  return hashes_.count(hash) != 0;
}

StatsReport stats(const QuotaMatrix& q, std::span<const ManifestRecord> records) {
  StatsReport out;
  out.quota = q;
  out.records = records.size();
  const auto target = q.total_target();
  out.completion =
      target == 0 ? 1.0 : static_cast<double>(q.total_filled()) / static_cast<double>(target);
  for (const auto& r : records) {
    for (const auto& w : r.warnings) ++out.warning_histogram[w];
    out.last_activity = std::max(out.last_activity, r.created_at);
  }
  return out;
}

std::string render_stats_table(const StatsReport& report) {
  const QuotaMatrix& q = report.quota;
  const auto cell = [](std::int64_t f, std::int64_t t) { return fmt::format("{}/{}", f, t); };

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Object Type"};
  header.insert(header.end(), q.races().begin(), q.races().end());
  header.emplace_back("Total");
  rows.push_back(header);
  for (const auto& o : q.object_types()) {
    std::vector<std::string> row{o};
    for (const auto& r : q.races()) row.push_back(cell(q.filled({o, r}), q.target({o, r})));
    row.push_back(cell(q.row_filled(o), q.row_target(o)));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> total{"Total"};
  for (const auto& r : q.races()) total.push_back(cell(q.column_filled(r), q.column_target(r)));
  total.push_back(cell(q.total_filled(), q.total_target()));
  rows.push_back(std::move(total));

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  const auto rule = [&] {
    for (std::size_t i = 0; i < width.size(); ++i) {
      out += std::string(width[i] + (i == 0 ? 0 : 2), '-');
    }
    out += '\n';
  };
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r == 1 || r + 1 == rows.size()) rule();
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (i == 0) {
        out += fmt::format("{:<{}}", rows[r][i], width[i]);
      } else {
        out += fmt::format("  {:>{}}", rows[r][i], width[i]);
      }
    }
    out += '\n';
  }
  out += fmt::format("\nrecords: {}  completion: {:.4f}\n", report.records, report.completion);
  if (!report.warning_histogram.empty()) {
    out += "warnings:";
    for (const auto& [id, n] : report.warning_histogram) out += fmt::format(" {}={}", id, n);
    out += '\n';
  }
  if (!report.last_activity.empty()) out += "last activity: " + report.last_activity + '\n';
  return out;
}

json stats_json(const StatsReport& report) {
  const QuotaMatrix& q = report.quota;
  json cells = json::array();
  for (const auto& key : q.slots()) {
    cells.push_back({{"object_type", key.object_type},
                     {"race", key.race},
                     {"filled", q.filled(key)},
                     {"target", q.target(key)}});
  }
  json rows = json::object();
  for (const auto& o : q.object_types()) {
    rows[o] = {{"filled", q.row_filled(o)}, {"target", q.row_target(o)}};
  }
  json cols = json::object();
  for (const auto& r : q.races()) {
    cols[r] = {{"filled", q.column_filled(r)}, {"target", q.column_target(r)}};
  }
  return json{{"object_types", q.object_types()},
              {"races", q.races()},
              {"cells", cells},
              {"row_totals", rows},
              {"column_totals", cols},
              {"filled", q.total_filled()},
              {"target", q.total_target()},
              {"records", report.records},
              {"completion", report.completion},
              {"warning_histogram", report.warning_histogram},
              {"last_activity", report.last_activity}};
}

}  // namespace hoigen
