#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evorl/genop/prompt.hpp"

namespace evorl::genop {

struct ProviderConfig {
  std::string endpoint;  // full URL of the chat-completion route
  std::string model;
  std::string token_env = "EVORL_API_TOKEN";
  double temperature = 1.0;
  int max_tokens = 8192;
  int max_retries = 3;
  double backoff_s = 1.0;
  double timeout_s = 300.0;
  int max_concurrent = 4;

  /// Throws std::invalid_argument for an empty endpoint/model or a missing token.
  void validate() const;
  std::string token() const;
};

struct HttpResponse {
  int status = 0;  // 0 when the request never got a response
  std::string body;
  std::string error;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& url, const std::string& body, const Headers& headers) = 0;
};

std::unique_ptr<Transport> make_http_transport(double timeout_s);

struct LlmError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Chat-completion body: {model, messages, temperature, max_tokens}.
std::string completion_request_json(const std::vector<Message>& messages, const ProviderConfig& config);
/// choices[0].message.content. Throws LlmError when absent.
std::string completion_text(const std::string& response_body);

class LlmClient {
 public:
  using Sleep = std::function<void(std::chrono::duration<double>)>;

  LlmClient(ProviderConfig config, std::shared_ptr<Transport> transport, Sleep sleep = {});

  /// Sends the messages, retrying transient failures (no response, 429, 5xx)
  /// with exponential backoff. Every attempt is appended to `log_file` as
  /// JSON when the path is non-empty. Throws LlmError.
  std::string complete(const std::vector<Message>& messages, const std::filesystem::path& log_file = {});

  const ProviderConfig& config() const { return config_; }

 private:
  ProviderConfig config_;
  std::shared_ptr<Transport> transport_;
  Sleep sleep_;
};

}  // namespace evorl::genop
