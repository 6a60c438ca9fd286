#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>

#include "til/vlm.hpp"

namespace til {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Thrown by transports on connection-level failures (no HTTP status).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body,
                            const std::multimap<std::string, std::string>& headers) = 0;
};

/// cpp-httplib transport for "http://host[:port][/prefix]" or "https://..." base URLs.
std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& base_url,
                                                      std::chrono::seconds timeout);

struct HttpBackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string api_key;  ///< usually from TIL_VLM_API_KEY
  std::chrono::seconds timeout{120};
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};

  /// Reads the bearer token from TIL_VLM_API_KEY when present.
  static HttpBackendConfig from_environment();
};

/// Chat-completions client: one user message with the prompt text followed by
/// base64 PNG image parts. Retries transport errors, 429 and 5xx with
/// exponential backoff; other 4xx fail immediately.
class HttpBackend : public VlmBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  HttpBackend(HttpBackendConfig config, std::unique_ptr<HttpTransport> transport);

  std::string complete(const VlmRequest& request, const CallContext& context) override;
  std::string name() const override { return "http"; }

  /// Request body for the wire protocol (exposed for tests).
  std::string build_body(const VlmRequest& request) const;
  /// Extracts choices[0].message.content; throws Error(BackendUnavailable).
  static std::string extract_content(const std::string& body);

 private:
  HttpBackendConfig config_;
  std::unique_ptr<HttpTransport> transport_;
};

}  // namespace til
