#include "hoigen/review_server.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include <httplib.h>
#include <fmt/format.h>

#include "hoigen/curator.hpp"
#include "hoigen/errors.hpp"
#include "hoigen/image_store.hpp"
#include "hoigen/util.hpp"

namespace hoigen {

using nlohmann::json;

ReviewService::ReviewService(std::filesystem::path data_dir,
                             std::optional<std::uint64_t> shuffle_seed)
    : data_dir_(std::move(data_dir)),
      labels_(data_dir_ / "labels.jsonl"),
      rng_(shuffle_seed ? *shuffle_seed : std::random_device{}()) {}

std::vector<ReviewItem> ReviewService::pending_items() const {
  std::set<std::string> admitted;
  for (const auto& r : read_manifest(data_dir_ / "manifest.jsonl").records) {
    admitted.insert(r.content_hash());
  }
  std::vector<ReviewItem> out;
  for (auto& item : ReviewQueue(data_dir_ / "review_queue.jsonl").load()) {
    if (!admitted.count(content_hash_of_path(item.image_path))) out.push_back(std::move(item));
  }
  return out;
}

json ReviewService::queue(std::size_t limit, const std::string& rater_id) {
  std::set<std::string> done;
  for (const auto& l : labels_.load()) {
    if (l.rater_id == rater_id) done.insert(l.pair_id);
  }
  std::vector<ReviewItem> items = pending_items();
  std::erase_if(items, [&](const ReviewItem& i) { return done.count(i.pair_id) != 0; });
  {
    std::lock_guard lock(rng_mu_);
    std::shuffle(items.begin(), items.end(), rng_);
  }
  if (items.size() > limit) items.resize(limit);

  json out = json::array();
  for (const auto& i : items) {
    out.push_back({{"pair_id", i.pair_id},
                   {"image_url", "/images/" + std::filesystem::path(i.image_path).filename().string()},
                   {"positive", i.positive},
                   {"program_text", i.program_text}});
  }
  return out;
}

LabelStore::IngestResult ReviewService::post_labels(const json& body) {
  if (!body.is_array()) throw std::invalid_argument("body must be a JSON array of labels");
  std::map<std::string, ReviewItem> known;
  for (auto& item : ReviewQueue(data_dir_ / "review_queue.jsonl").load()) {
    known.emplace(item.pair_id, std::move(item));
  }
  std::vector<HumanLabel> labels;
  labels.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    HumanLabel l;
    try {
      l = label_from_json(body[i]);
    } catch (const RangeError& e) {
      throw RangeError(fmt::format("label {}: {}", i, e.what()));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(fmt::format("label {}: {}", i, e.what()));
    }
    const auto it = known.find(l.pair_id);
    if (it == known.end()) {
      throw std::invalid_argument(fmt::format("label {}: unknown pair_id '{}'", i, l.pair_id));
    }
    l.image_path = it->second.image_path;
    l.positive = it->second.positive;
    labels.push_back(std::move(l));
  }
  return labels_.ingest(labels);
}

json ReviewService::stats() const {
  const auto items = ReviewQueue(data_dir_ / "review_queue.jsonl").load();
  const auto labels = labels_.load();
  std::set<std::string> labeled;
  std::set<std::string> raters;
  std::size_t accepts = 0;
  for (const auto& l : labels) {
    labeled.insert(l.pair_id);
    raters.insert(l.rater_id);
    accepts += l.accept ? 1 : 0;
  }
  return json{{"queued", items.size()},
              {"pending", pending_items().size()},
              {"labeled_pairs", labeled.size()},
              {"labels", labels.size()},
              {"accept_votes", accepts},
              {"raters", raters.size()},
              {"manifest_records", read_manifest(data_dir_ / "manifest.jsonl").records.size()}};
}

std::optional<std::filesystem::path> ReviewService::image_path(std::string_view file) const {
  if (file.empty() || file.find('/') != std::string_view::npos ||
      file.find('\\') != std::string_view::npos || file.find("..") != std::string_view::npos) {
    return std::nullopt;
  }
  auto path = data_dir_ / "images" / std::string(file);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  return path;
}

std::pair<std::string, int> parse_bind_address(std::string_view bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw std::invalid_argument(fmt::format("bind address '{}' is not host:port", bind));
  }
  const auto port_text = bind.substr(colon + 1);
  int port = -1;
  const auto [p, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || p != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    throw std::invalid_argument(fmt::format("bad port in '{}'", bind));
  }
  return {std::string(bind.substr(0, colon)), port};
}

struct ReviewServer::Impl {
  ReviewService service;
  httplib::Server server;
  std::thread thread;

  Impl(std::filesystem::path dir, std::optional<std::uint64_t> seed)
      : service(std::move(dir), seed) {
    const auto reply_json = [](httplib::Response& res, int status, const json& body) {
      res.status = status;
      res.set_content(body.dump(), "application/json");
    };
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });

    server.Get("/queue", [this, reply_json](const httplib::Request& req, httplib::Response& res) {
      std::size_t limit = 20;
      if (req.has_param("limit")) {
        const auto text = req.get_param_value("limit");
        std::size_t v = 0;
        const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || p != text.data() + text.size() || v == 0) {
          reply_json(res, 400, {{"error", "limit must be a positive integer"}});
          return;
        }
        limit = v;
      }
      const std::string rater =
          req.has_param("rater_id") ? req.get_param_value("rater_id") : std::string("anonymous");
      try {
        reply_json(res, 200, service.queue(limit, rater.empty() ? "anonymous" : rater));
      } catch (const std::exception& e) {
        reply_json(res, 500, {{"error", e.what()}});
      }
    });

    server.Post("/labels", [this, reply_json](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error& e) {
        reply_json(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
        return;
      }
      try {
        const auto result = service.post_labels(body);
        reply_json(res, 200, {{"added", result.added}, {"duplicates", result.duplicates}});
      } catch (const RangeError& e) {
        reply_json(res, 400, {{"error", e.what()}, {"kind", "RangeError"}});
      } catch (const std::invalid_argument& e) {
        reply_json(res, 400, {{"error", e.what()}});
      } catch (const std::exception& e) {
        reply_json(res, 500, {{"error", e.what()}});
      }
    });

    server.Get("/stats", [this, reply_json](const httplib::Request&, httplib::Response& res) {
      try {
        reply_json(res, 200, service.stats());
      } catch (const std::exception& e) {
        reply_json(res, 500, {{"error", e.what()}});
      }
    });

    server.Get(R"(/images/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto path = service.image_path(req.matches[1].str());
      if (!path) {
        res.status = 404;
        return;
      }
      const Bytes bytes = read_file(*path);
      const auto ext = path->extension().string();
      const char* type = ext == ".png"    ? "image/png"
                         : ext == ".jpg"  ? "image/jpeg"
                         : ext == ".webp" ? "image/webp"
                         : ext == ".ppm"  ? "image/x-portable-pixmap"
                                          : "application/octet-stream";
      res.set_content(std::string(bytes.begin(), bytes.end()), type);
    });
  }
};

ReviewServer::ReviewServer(std::filesystem::path data_dir,
                           std::optional<std::uint64_t> shuffle_seed)
    : impl_(std::make_unique<Impl>(std::move(data_dir), shuffle_seed)) {}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw std::runtime_error(fmt::format("cannot bind {}:{}", host, port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ReviewServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw std::runtime_error(fmt::format("cannot bind {}:{}", host, port));
  }
}

void ReviewServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace hoigen
