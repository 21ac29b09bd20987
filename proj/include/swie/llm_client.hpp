#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "swie/common.hpp"

namespace swie {

// Failure taxonomy for the external text service. `timeout` and `transport`
// are retried with backoff; the rest abort the request.
struct ClientError : Error {
  enum class Kind { timeout, auth, quota, malformed, transport };
  Kind kind;
  ClientError(Kind k, const std::string& what) : Error(what), kind(k) {}
};

class ExternalTextClient {
 public:
  virtual ~ExternalTextClient() = default;
  // returns the completion text for one prompt; throws ClientError
  virtual std::string complete(const std::string& prompt) = 0;
};

struct ClientConfig {
  std::string endpoint;       // e.g. http://localhost:8080
  std::string model;          // model name sent with each request
  std::string api_key;        // resolved from the environment by the caller
  std::string api_path = "/v1/chat/completions";
  double timeout_seconds = 30;
  int max_retries = 3;
  double backoff_seconds = 0.25;  // doubles per retry
};

// Chat-completion HTTP client. Sends {"model", "messages":[{"role":"user",
// "content": prompt}]} and reads choices[0].message.content. Transient
// failures (transport errors, 5xx, timeouts) retry with exponential backoff;
// 401/403 map to auth, 429 to quota, an empty or unparseable body to
// malformed. Every request and response line goes to the log sink when set.
class HttpChatClient : public ExternalTextClient {
 public:
  explicit HttpChatClient(ClientConfig config);
  std::string complete(const std::string& prompt) override;
  void set_log_sink(std::function<void(const std::string&)> sink) { log_ = std::move(sink); }

 private:
  ClientConfig config_;
  std::function<void(const std::string&)> log_;
};

// Test double: replays canned completions (or a callback) in order.
class MockTextClient : public ExternalTextClient {
 public:
  explicit MockTextClient(std::vector<std::string> canned) : canned_(std::move(canned)) {}
  explicit MockTextClient(std::function<std::string(const std::string&)> fn)
      : fn_(std::move(fn)) {}
  std::string complete(const std::string& prompt) override;
  size_t calls() const { return calls_; }

 private:
  std::vector<std::string> canned_;
  std::function<std::string(const std::string&)> fn_;
  size_t calls_ = 0;
};

}  // namespace swie
