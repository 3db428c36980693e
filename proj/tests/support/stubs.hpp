#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "hoigen/backends.hpp"
#include "hoigen/campaign.hpp"

namespace hoigen::testing {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("hoigen-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Replies from a fixed script; the last reply repeats. Records every request.
class ScriptedLlm final : public LlmBackend {
 public:
  explicit ScriptedLlm(std::vector<std::string> replies) : replies_(std::move(replies)) {}

  std::string complete(const LlmRequest& request) override {
    std::lock_guard lock(mu_);
    requests_.push_back(request.prompt);
    const std::size_t i = std::min(next_++, replies_.size() - 1);
    return replies_[i];
  }

  std::vector<std::string> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
  mutable std::mutex mu_;
  std::vector<std::string> requests_;
};

class UnreachableLlm final : public LlmBackend {
 public:
  std::string complete(const LlmRequest&) override { throw BackendUnavailable("connection refused"); }
};

/// Image bytes are a pure function of the request and the proposer name.
class StubProposer final : public ProposerBackend {
 public:
  enum class Mode { Ok, Unavailable, Garbage };
  explicit StubProposer(std::string name, Mode mode = Mode::Ok)
      : name_(std::move(name)), mode_(mode) {}

  GenerationResponse generate(const GenerationRequest& r) override {
    calls.fetch_add(1);
    if (mode_ == Mode::Unavailable) throw BackendUnavailable(name_ + " down");
    if (mode_ == Mode::Garbage) throw BackendProtocolError(name_ + " sent garbage");
    const std::string body = "STUB|" + name_ + "|" + r.positive + "|" + r.negative + "|" +
                             std::to_string(r.params.seed);
    return {Bytes(body.begin(), body.end()), "stub-" + name_};
  }

  std::atomic<int> calls{0};

 private:
  std::string name_;
  Mode mode_;
};

class FunctionVerifier final : public VerifierBackend {
 public:
  using Fn = std::function<double(std::span<const std::uint8_t>, std::string_view)>;
  explicit FunctionVerifier(Fn fn) : fn_(std::move(fn)) {}
  double score(std::span<const std::uint8_t> image, std::string_view prompt) override {
    calls.fetch_add(1);
    return fn_(image, prompt);
  }
  std::atomic<int> calls{0};

 private:
  Fn fn_;
};

inline std::shared_ptr<FunctionVerifier> constant_verifier(double score) {
  return std::make_shared<FunctionVerifier>(
      [score](std::span<const std::uint8_t>, std::string_view) { return score; });
}

/// The scaffolded default configuration pointed at `data_dir`, with the
/// quota scaled and mock latency off.
inline CampaignConfig test_config(const std::filesystem::path& data_dir,
                                  const std::string& scale = "1/100") {
  auto j = default_config_json(data_dir.string());
  j["quota"]["scale"] = scale;
  j["mock"]["latency_ms"] = 0;
  return config_from_json(j);
}

}  // namespace hoigen::testing
