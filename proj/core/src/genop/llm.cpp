#include "evorl/genop/llm.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace evorl::genop {

using nlohmann::json;

void ProviderConfig::validate() const {
  if (endpoint.empty()) throw std::invalid_argument("provider endpoint is not set");
  if (model.empty()) throw std::invalid_argument("provider model is not set");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (token().empty()) throw std::invalid_argument("provider token variable " + token_env + " is not set");
}

std::string ProviderConfig::token() const {
  const char* v = token_env.empty() ? nullptr : std::getenv(token_env.c_str());
  return v ? v : "";
}

namespace {

class HttplibTransport : public Transport {
 public:
  explicit HttplibTransport(double timeout_s) : timeout_s_(timeout_s) {}

  HttpResponse post(const std::string& url, const std::string& body, const Headers& headers) override {
    static const std::regex split(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, split)) return {0, "", "malformed endpoint URL: " + url};
    httplib::Client client(m[1].str());
    const auto secs = static_cast<time_t>(timeout_s_);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    const std::string path = m[2].matched ? m[2].str() : "/";
    auto res = client.Post(path, h, body, "application/json");
    if (!res) return {0, "", httplib::to_string(res.error())};
    return {res->status, res->body, ""};
  }

 private:
  double timeout_s_;
};

bool transient(const HttpResponse& r) { return r.status == 0 || r.status == 429 || r.status >= 500; }

}  // namespace

std::unique_ptr<Transport> make_http_transport(double timeout_s) {
  return std::make_unique<HttplibTransport>(timeout_s);
}

std::string completion_request_json(const std::vector<Message>& messages, const ProviderConfig& config) {
  json j;
  j["model"] = config.model;
  j["temperature"] = config.temperature;
  j["max_tokens"] = config.max_tokens;
  j["messages"] = json::array();
  for (const Message& m : messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
  return j.dump();
}

std::string completion_text(const std::string& response_body) {
  const json j = json::parse(response_body, nullptr, false);
  if (j.is_discarded()) throw LlmError("provider response is not JSON");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw LlmError("provider response has no choices[0].message.content");
  }
}

LlmClient::LlmClient(ProviderConfig config, std::shared_ptr<Transport> transport, Sleep sleep)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
  if (!transport_) throw std::invalid_argument("LlmClient needs a transport");
  if (!sleep_) sleep_ = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
}

std::string LlmClient::complete(const std::vector<Message>& messages, const std::filesystem::path& log_file) {
  const std::string body = completion_request_json(messages, config_);
  const Headers headers{{"Authorization", "Bearer " + config_.token()}};
  json log;
  log["request"] = json::parse(body);
  log["attempts"] = json::array();
  auto flush = [&] {
    if (log_file.empty()) return;
    std::filesystem::create_directories(log_file.parent_path());
    std::ofstream(log_file) << log.dump(2) << "\n";
  };
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) sleep_(std::chrono::duration<double>(config_.backoff_s * double(1 << (attempt - 1))));
    const HttpResponse r = transport_->post(config_.endpoint, body, headers);
    log["attempts"].push_back({{"attempt", attempt + 1}, {"status", r.status}, {"body", r.body}, {"error", r.error}});
    flush();
    if (r.status >= 200 && r.status < 300) {
      try {
        std::string text = completion_text(r.body);
        log["response"] = text;
        flush();
        return text;
      } catch (const LlmError& e) {
        log["error"] = e.what();
        flush();
        throw;
      }
    }
    last_error = r.status == 0 ? r.error : "HTTP " + std::to_string(r.status);
    if (!transient(r)) break;
  }
  const std::string msg = "LLM call failed after " + std::to_string(log["attempts"].size()) + " attempts: " + last_error;
  log["error"] = msg;
  flush();
  throw LlmError(msg);
}

}  // namespace evorl::genop
