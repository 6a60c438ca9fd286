#include "til/http_backend.hpp"

#include <cstdlib>
#include <thread>

#include <fmt/core.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "til/encoding.hpp"
#include "til/error.hpp"

namespace til {
namespace {

using nlohmann::json;

class HttplibTransport : public HttpTransport {
 public:
  HttplibTransport(const std::string& base_url, std::chrono::seconds timeout) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorKind::Config, "base URL needs a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    const std::string origin = base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    client_ = std::make_unique<httplib::Client>(origin);
    if (!client_->is_valid()) throw Error(ErrorKind::Config, "unsupported base URL: " + base_url);
    client_->set_connection_timeout(timeout);
    client_->set_read_timeout(timeout);
    client_->set_write_timeout(timeout);
  }

  HttpResponse post(const std::string& path, const std::string& body,
                    const std::multimap<std::string, std::string>& headers) override {
    httplib::Headers h(headers.begin(), headers.end());
    auto result = client_->Post(prefix_ + path, h, body, "application/json");
    if (!result) throw TransportError("HTTP transport error: " + httplib::to_string(result.error()));
    return {result->status, result->body};
  }

 private:
  std::unique_ptr<httplib::Client> client_;
  std::string prefix_;
};

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& base_url, std::chrono::seconds timeout) {
  return std::make_unique<HttplibTransport>(base_url, timeout);
}

HttpBackendConfig HttpBackendConfig::from_environment() {
  HttpBackendConfig config;
  if (const char* key = std::getenv("TIL_VLM_API_KEY")) config.api_key = key;
  return config;
}

HttpBackend::HttpBackend(HttpBackendConfig config)
    : HttpBackend(config, make_httplib_transport(config.base_url, config.timeout)) {}

HttpBackend::HttpBackend(HttpBackendConfig config, std::unique_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (!transport_) throw Error(ErrorKind::Config, "HTTP backend needs a transport");
  if (config_.max_attempts < 1) throw Error(ErrorKind::Config, "max_attempts must be >= 1");
}

std::string HttpBackend::build_body(const VlmRequest& request) const {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.text}});
  for (const auto& image : request.images) {
    content.push_back({{"type", "image_url"},
                       {"image_url", {{"url", fmt::format("data:{};base64,{}", image.mime, base64_encode(image.bytes))}}}});
  }
  const json body = {
      {"model", config_.model},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
      {"messages", json::array({{{"role", "user"}, {"content", content}}})},
  };
  return body.dump();
}

std::string HttpBackend::extract_content(const std::string& body) {
  try {
    const json doc = json::parse(body);
    const json& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers return a list of content parts.
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BackendUnavailable, fmt::format("malformed completion response: {}", e.what()));
  }
}

std::string HttpBackend::complete(const VlmRequest& request, const CallContext&) {
  request.validate();
  const std::string body = build_body(request);
  std::multimap<std::string, std::string> headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  auto backoff = config_.initial_backoff;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    try {
      const HttpResponse response = transport_->post("/chat/completions", body, headers);
      if (response.status >= 200 && response.status < 300) return extract_content(response.body);
      last_error = fmt::format("HTTP {}: {}", response.status, response.body.substr(0, 200));
      if (!retryable(response.status)) break;
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw Error(ErrorKind::BackendUnavailable, "VLM backend failed: " + last_error);
}

}  // namespace til
