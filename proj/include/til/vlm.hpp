#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "til/types.hpp"

namespace til {

struct EncodedImage {
  std::string mime = "image/png";
  std::string bytes;  ///< raw encoded file contents (not base64)
};

/// PNG-encodes an image, first downscaling so the longest side is <= max_side.
EncodedImage encode_png(const cv::Mat& image, int max_side = 1024);

struct VlmRequest {
  std::vector<EncodedImage> images;
  std::string text;
  double temperature = 0.0;
  int max_tokens = 512;

  /// Throws Error(Config) unless there is at least one image and non-empty text.
  void validate() const;
};

/// Metadata describing why a request is made. Remote backends ignore it;
/// scripted backends key their replies on it.
struct CallContext {
  Role role = Role::Discriminator;
  int round = 1;
  std::optional<Attribute> attribute;
  int n_tiles = 0;
  std::vector<int> frames;  ///< frames shown, in image order
};

class VlmBackend {
 public:
  virtual ~VlmBackend() = default;
  virtual std::string complete(const VlmRequest& request, const CallContext& context) = 0;
  virtual std::string name() const = 0;
};

/// Replays fixed replies keyed by (role, per-role call count).
class ScriptedBackend : public VlmBackend {
 public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(std::map<Role, std::vector<std::string>> replies);

  /// {"discriminator": [...], "localizer": [...], "checker": [...]}
  static ScriptedBackend from_json(const std::string& json_text);

  ScriptedBackend& add(Role role, std::string reply);

  std::string complete(const VlmRequest& request, const CallContext& context) override;
  std::string name() const override { return "scripted"; }

  int calls(Role role) const;

 private:
  std::map<Role, std::vector<std::string>> replies_;
  std::map<Role, std::size_t> cursor_;
};

/// Backend driven by a user function; used for oracle-style tests.
class CallbackBackend : public VlmBackend {
 public:
  using Responder = std::function<std::string(const VlmRequest&, const CallContext&)>;
  explicit CallbackBackend(Responder responder) : responder_(std::move(responder)) {}

  std::string complete(const VlmRequest& request, const CallContext& context) override {
    return responder_(request, context);
  }
  std::string name() const override { return "callback"; }

 private:
  Responder responder_;
};

struct AuditRecord {
  std::string timestamp;  ///< ISO-8601 UTC
  std::uint64_t sequence = 0;
  Role role = Role::Discriminator;
  int round = 1;
  std::optional<Attribute> attribute;
  int n_tiles = 0;
  std::vector<int> frames;
  std::string request_digest;  ///< SHA-256 over text and image bytes
  std::string response;
  std::string error;  ///< non-empty when the backend failed
};

std::string audit_to_json_line(const AuditRecord& record);
AuditRecord audit_from_json_line(const std::string& line);
std::vector<AuditRecord> read_audit_log(const std::filesystem::path& path);

std::string request_digest(const VlmRequest& request);

struct GatewayConfig {
  int max_in_flight = 4;
  double requests_per_second = 0.0;  ///< 0 disables rate limiting
  double burst = 1.0;
  std::optional<std::filesystem::path> audit_path;
  std::optional<std::filesystem::path> dump_dir;  ///< per-call prompt text and images
};

/// Token bucket; `acquire` blocks until a token is available.
class TokenBucket {
 public:
  TokenBucket(double rate_per_second, double burst);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  std::mutex mutex_;
  double rate_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
};

/// Front door to a backend: concurrency cap, rate limit, audit log, prompt dumps.
/// Thread-safe.
class VlmGateway {
 public:
  explicit VlmGateway(std::shared_ptr<VlmBackend> backend, GatewayConfig config = {});
  VlmGateway(const VlmGateway&) = delete;
  VlmGateway& operator=(const VlmGateway&) = delete;

  /// Validates and forwards the request; errors from the backend propagate
  /// after being logged.
  std::string query(const VlmRequest& request, const CallContext& context);

  std::vector<AuditRecord> audit() const;
  std::uint64_t call_count() const;
  VlmBackend& backend() { return *backend_; }

 private:
  void record(AuditRecord record);
  void dump(const VlmRequest& request, const CallContext& context, std::uint64_t sequence);

  std::shared_ptr<VlmBackend> backend_;
  GatewayConfig config_;
  std::counting_semaphore<1024> slots_;
  std::unique_ptr<TokenBucket> bucket_;
  mutable std::mutex mutex_;
  std::vector<AuditRecord> audit_;
  std::ofstream audit_file_;
  std::uint64_t sequence_ = 0;
};

}  // namespace til
