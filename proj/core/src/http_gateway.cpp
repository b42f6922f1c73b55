#include <condition_variable>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "cogtools/errors.hpp"
#include "cogtools/gateway.hpp"

namespace cogtools {

struct HttpGateway::Impl {
  HttpGatewayOptions options;
  std::string scheme_host_port;
  std::string path_prefix;
  std::mutex mutex;
  std::condition_variable cv;
  int in_flight = 0;

  struct Slot {
    Impl* impl;

    explicit Slot(Impl* impl_in) : impl(impl_in) {
      std::unique_lock lock(impl->mutex);
      impl->cv.wait(
          lock, [&] { return impl->in_flight < impl->options.max_in_flight; });
      ++impl->in_flight;
    }

    ~Slot() {
      {
        std::lock_guard lock(impl->mutex);
        --impl->in_flight;
      }
      impl->cv.notify_one();
    }
  };
};

namespace {

std::string truncate_for_error(const std::string& body) {
  constexpr std::size_t kLimit = 512;
  if (body.size() <= kLimit) return body;
  return body.substr(0, kLimit) + "…";
}

}  // namespace

HttpGateway::HttpGateway(HttpGatewayOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  std::string url = impl_->options.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos) {
    throw ConfigError("base URL must look like http://host:port, got \"" +
                      impl_->options.base_url + "\"");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported URL scheme: " + scheme);
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") {
    throw ConfigError("this build lacks TLS support; use an http:// base URL");
  }
#endif
  const std::string rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  const std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
  if (authority.empty()) {
    throw ConfigError("base URL has no host: \"" + impl_->options.base_url + "\"");
  }
  impl_->scheme_host_port = scheme + "://" + authority;
  impl_->path_prefix = slash == std::string::npos ? "" : rest.substr(slash);
  if (impl_->options.max_in_flight < 1) impl_->options.max_in_flight = 1;
}

HttpGateway::~HttpGateway() = default;

ChatResponse HttpGateway::complete(const ChatRequest& request) {
  Impl::Slot slot(impl_.get());

  const std::string body = chat_request_to_wire_json(request);
  const std::string path = impl_->path_prefix + "/v1/chat/completions";
  const int max_attempts = std::max(1, impl_->options.retry.max_attempts);
  std::string last_error;

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(retry_backoff(impl_->options.retry, attempt - 1));
    }
    httplib::Client client(impl_->scheme_host_port);
    const auto timeout = impl_->options.request_timeout;
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!impl_->options.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + impl_->options.api_key);
    }
    auto result = client.Post(path, headers, body, "application/json");
    if (!result) {
      last_error = std::string{"transport: "} + httplib::to_string(result.error());
      continue;
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
      throw GatewayError(GatewayError::Kind::auth,
                         "authentication failed (HTTP " + std::to_string(status) + ")",
                         attempt + 1);
    }
    if (status == 429 || status >= 500) {
      last_error = "HTTP " + std::to_string(status);
      continue;
    }
    if (status < 200 || status >= 300) {
      throw GatewayError(GatewayError::Kind::malformed,
                         "HTTP " + std::to_string(status) + ": " +
                             truncate_for_error(result->body),
                         attempt + 1);
    }
    try {
      const auto json = nlohmann::json::parse(result->body);
      const auto& choice = json.at("choices").at(0);
      ChatResponse response;
      response.content = choice.at("message").at("content").get<std::string>();
      const auto finish = choice.value("finish_reason", std::string{"stop"});
      response.finish_reason =
          finish == "length" ? FinishReason::length : FinishReason::stop;
      if (json.contains("usage") && json.at("usage").is_object()) {
        const auto& usage = json.at("usage");
        if (usage.contains("prompt_tokens")) {
          response.prompt_tokens = usage.at("prompt_tokens").get<std::int64_t>();
        }
        if (usage.contains("completion_tokens")) {
          response.completion_tokens =
              usage.at("completion_tokens").get<std::int64_t>();
        }
      }
      response.attempts = attempt + 1;
      return response;
    } catch (const nlohmann::json::exception& e) {
      throw GatewayError(GatewayError::Kind::malformed,
                         std::string{"response schema: "} + e.what() + " in " +
                             truncate_for_error(result->body),
                         attempt + 1);
    }
  }
  throw GatewayError(GatewayError::Kind::transport,
                     "gave up after " + std::to_string(max_attempts) +
                         " attempts; last error: " + last_error,
                     max_attempts);
}

}  // namespace cogtools
