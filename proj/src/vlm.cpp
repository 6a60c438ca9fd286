#include "til/vlm.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/core.h>
#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "til/encoding.hpp"
#include "til/error.hpp"

namespace til {

using nlohmann::json;

EncodedImage encode_png(const cv::Mat& image, int max_side) {
  if (image.empty()) throw Error(ErrorKind::Config, "cannot encode an empty image");
  cv::Mat scaled = image;
  const int longest = std::max(image.cols, image.rows);
  if (max_side > 0 && longest > max_side) {
    const double factor = static_cast<double>(max_side) / longest;
    cv::resize(image, scaled,
               cv::Size(std::max(1, static_cast<int>(std::lround(image.cols * factor))),
                        std::max(1, static_cast<int>(std::lround(image.rows * factor)))),
               0, 0, cv::INTER_AREA);
  }
  std::vector<uchar> buffer;
  if (!cv::imencode(".png", scaled, buffer)) throw Error(ErrorKind::Io, "PNG encoding failed");
  return {"image/png", std::string(buffer.begin(), buffer.end())};
}

void VlmRequest::validate() const {
  if (images.empty()) throw Error(ErrorKind::Config, "a VLM request needs at least one image");
  if (text.empty()) throw Error(ErrorKind::Config, "a VLM request needs prompt text");
  for (const auto& image : images) {
    if (image.bytes.empty()) throw Error(ErrorKind::Config, "a VLM request image is empty");
  }
}

ScriptedBackend::ScriptedBackend(std::map<Role, std::vector<std::string>> replies) : replies_(std::move(replies)) {}

ScriptedBackend ScriptedBackend::from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, fmt::format("invalid VLM script: {}", e.what()));
  }
  if (!doc.is_object()) throw Error(ErrorKind::Parse, "VLM script must be a JSON object");
  ScriptedBackend backend;
  for (const auto& [key, value] : doc.items()) {
    const Role role = role_from_string(key);
    if (!value.is_array()) throw Error(ErrorKind::Parse, fmt::format("script entry '{}' must be an array", key));
    for (const auto& reply : value) {
      if (!reply.is_string()) throw Error(ErrorKind::Parse, fmt::format("script entry '{}' must hold strings", key));
      backend.add(role, reply.get<std::string>());
    }
  }
  return backend;
}

ScriptedBackend& ScriptedBackend::add(Role role, std::string reply) {
  replies_[role].push_back(std::move(reply));
  return *this;
}

std::string ScriptedBackend::complete(const VlmRequest&, const CallContext& context) {
  const std::size_t index = cursor_[context.role]++;
  const auto it = replies_.find(context.role);
  if (it == replies_.end() || index >= it->second.size()) {
    throw Error(ErrorKind::TestScript,
                fmt::format("no scripted reply for ({}, call {})", to_string(context.role), index + 1));
  }
  return it->second[index];
}

int ScriptedBackend::calls(Role role) const {
  const auto it = cursor_.find(role);
  return it == cursor_.end() ? 0 : static_cast<int>(it->second);
}

std::string request_digest(const VlmRequest& request) {
  std::string material = request.text;
  for (const auto& image : request.images) {
    material += '\0';
    material += image.mime;
    material += '\0';
    material += image.bytes;
  }
  return sha256_hex(material);
}

std::string audit_to_json_line(const AuditRecord& record) {
  json j = {
      {"sequence", record.sequence},
      {"timestamp", record.timestamp},
      {"role", std::string(to_string(record.role))},
      {"round", record.round},
      {"attribute", record.attribute ? json(std::string(to_string(*record.attribute))) : json(nullptr)},
      {"n_tiles", record.n_tiles},
      {"frames", record.frames},
      {"request_digest", record.request_digest},
      {"response", record.response},
      {"error", record.error},
  };
  return j.dump();
}

AuditRecord audit_from_json_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    AuditRecord r;
    r.sequence = j.at("sequence").get<std::uint64_t>();
    r.timestamp = j.at("timestamp").get<std::string>();
    r.role = role_from_string(j.at("role").get<std::string>());
    r.round = j.at("round").get<int>();
    if (!j.at("attribute").is_null()) r.attribute = attribute_from_string(j.at("attribute").get<std::string>());
    r.n_tiles = j.at("n_tiles").get<int>();
    r.frames = j.at("frames").get<std::vector<int>>();
    r.request_digest = j.at("request_digest").get<std::string>();
    r.response = j.at("response").get<std::string>();
    r.error = j.value("error", std::string{});
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, fmt::format("bad audit record: {}", e.what()));
  }
}

std::vector<AuditRecord> read_audit_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open audit log " + path.string());
  std::vector<AuditRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) records.push_back(audit_from_json_line(line));
  }
  return records;
}

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second), capacity_(std::max(burst, 1.0)), tokens_(capacity_), last_(Clock::now()) {}

void TokenBucket::acquire() {
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mutex_);
      const auto now = Clock::now();
      tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

VlmGateway::VlmGateway(std::shared_ptr<VlmBackend> backend, GatewayConfig config)
    : backend_(std::move(backend)),
      config_(std::move(config)),
      slots_(std::clamp(config_.max_in_flight, 1, 1024)) {
  if (!backend_) throw Error(ErrorKind::Config, "gateway needs a backend");
  if (config_.requests_per_second > 0.0) {
    bucket_ = std::make_unique<TokenBucket>(config_.requests_per_second, config_.burst);
  }
  if (config_.audit_path) {
    if (config_.audit_path->has_parent_path()) std::filesystem::create_directories(config_.audit_path->parent_path());
    audit_file_.open(*config_.audit_path, std::ios::app);
    if (!audit_file_) throw Error(ErrorKind::Io, "cannot open audit log " + config_.audit_path->string());
  }
  if (config_.dump_dir) std::filesystem::create_directories(*config_.dump_dir);
}

std::string VlmGateway::query(const VlmRequest& request, const CallContext& context) {
  request.validate();

  struct SlotGuard {
    std::counting_semaphore<1024>& slots;
    explicit SlotGuard(std::counting_semaphore<1024>& s) : slots(s) { slots.acquire(); }
    ~SlotGuard() { slots.release(); }
  } guard(slots_);
  if (bucket_) bucket_->acquire();

  std::uint64_t sequence = 0;
  {
    std::lock_guard lock(mutex_);
    sequence = ++sequence_;
  }
  if (config_.dump_dir) dump(request, context, sequence);

  AuditRecord record;
  record.sequence = sequence;
  record.timestamp = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
  record.role = context.role;
  record.round = context.round;
  record.attribute = context.attribute;
  record.n_tiles = context.n_tiles;
  record.frames = context.frames;
  record.request_digest = request_digest(request);
  try {
    record.response = backend_->complete(request, context);
  } catch (const std::exception& e) {
    record.error = e.what();
    this->record(std::move(record));
    throw;
  }
  std::string response = record.response;
  this->record(std::move(record));
  return response;
}

void VlmGateway::record(AuditRecord record) {
  std::lock_guard lock(mutex_);
  if (audit_file_.is_open()) {
    audit_file_ << audit_to_json_line(record) << '\n';
    audit_file_.flush();
  }
  audit_.push_back(std::move(record));
}

void VlmGateway::dump(const VlmRequest& request, const CallContext& context, std::uint64_t sequence) {
  const std::string stem = fmt::format("call{:05d}_{}_r{}", sequence, to_string(context.role), context.round);
  const auto& dir = *config_.dump_dir;
  std::ofstream(dir / (stem + ".txt"), std::ios::binary) << request.text;
  for (std::size_t i = 0; i < request.images.size(); ++i) {
    std::ofstream(dir / fmt::format("{}_img{}.png", stem, i), std::ios::binary) << request.images[i].bytes;
  }
}

std::vector<AuditRecord> VlmGateway::audit() const {
  std::lock_guard lock(mutex_);
  return audit_;
}

std::uint64_t VlmGateway::call_count() const {
  std::lock_guard lock(mutex_);
  return sequence_;
}

}  // namespace til
