#pragma once

#include <map>
#include <string>

#include "hoigen/backends.hpp"

namespace hoigen {

/// Where and how to reach one backend. Header values of the form ${NAME}
/// are replaced by the environment variable NAME at call time; `auth_env`
/// names a variable whose value is sent as a bearer token.
struct EndpointConfig {
  std::string url;
  std::map<std::string, std::string> headers;
  std::string auth_env;
  int timeout_ms = 60000;
  int retries = 2;
};

/// POSTs JSON to the endpoint with retry and exponential backoff.
/// Connection failures and 5xx responses are retried and finally raise
/// BackendUnavailable; other non-2xx responses raise BackendProtocolError.
nlohmann::json post_json(const EndpointConfig& endpoint, const nlohmann::json& body);

class HttpLlm final : public LlmBackend {
 public:
  explicit HttpLlm(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  std::string complete(const LlmRequest& request) override;

 private:
  EndpointConfig endpoint_;
};

class HttpProposer final : public ProposerBackend {
 public:
  explicit HttpProposer(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  GenerationResponse generate(const GenerationRequest& request) override;

 private:
  EndpointConfig endpoint_;
};

class HttpVerifier final : public VerifierBackend {
 public:
  explicit HttpVerifier(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  double score(std::span<const std::uint8_t> image, std::string_view prompt) override;

 private:
  EndpointConfig endpoint_;
};

}  // namespace hoigen
