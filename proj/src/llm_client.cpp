#include "swie/llm_client.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace swie {

using nlohmann::json;

HttpChatClient::HttpChatClient(ClientConfig config) : config_(std::move(config)) {
  ensure(!config_.endpoint.empty(), "HttpChatClient: endpoint not configured");
  ensure(!config_.model.empty(), "HttpChatClient: model name not configured");
}

std::string HttpChatClient::complete(const std::string& prompt) {
  json body;
  body["model"] = config_.model;
  body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  const std::string payload = body.dump();

  double backoff = config_.backoff_seconds;
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2;
    }
    httplib::Client cli(config_.endpoint);
    cli.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    cli.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    if (log_) log_("request model=" + config_.model + " bytes=" + std::to_string(payload.size()));
    auto res = cli.Post(config_.api_path, headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      last_error = "transport error: " + httplib::to_string(err);
      if (log_) log_("response error: " + last_error);
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
          err == httplib::Error::Write) {
        if (attempt == config_.max_retries) {
          throw ClientError(ClientError::Kind::timeout, last_error);
        }
      } else if (attempt == config_.max_retries) {
        throw ClientError(ClientError::Kind::transport, last_error);
      }
      continue;
    }
    if (log_) log_("response status=" + std::to_string(res->status));
    if (res->status == 401 || res->status == 403) {
      throw ClientError(ClientError::Kind::auth,
                        "authentication rejected (status " + std::to_string(res->status) + ")");
    }
    if (res->status == 429) {
      throw ClientError(ClientError::Kind::quota, "quota exhausted (status 429)");
    }
    if (res->status >= 500) {
      last_error = "server error (status " + std::to_string(res->status) + ")";
      if (attempt == config_.max_retries) {
        throw ClientError(ClientError::Kind::transport, last_error);
      }
      continue;
    }
    if (res->status != 200) {
      throw ClientError(ClientError::Kind::transport,
                        "unexpected status " + std::to_string(res->status));
    }
    try {
      const json reply = json::parse(res->body);
      const std::string text =
          reply.at("choices").at(0).at("message").at("content").get<std::string>();
      if (text.empty()) {
        throw ClientError(ClientError::Kind::malformed, "empty completion");
      }
      return text;
    } catch (const json::exception& e) {
      throw ClientError(ClientError::Kind::malformed,
                        std::string("unparseable completion: ") + e.what());
    }
  }
  throw ClientError(ClientError::Kind::transport, last_error);
}

std::string MockTextClient::complete(const std::string& prompt) {
  const size_t n = calls_++;
  if (fn_) return fn_(prompt);
  ensure(!canned_.empty(), "MockTextClient: no canned completions");
  return canned_[n % canned_.size()];
}

}  // namespace swie
