#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "til/error.hpp"
#include "til/hand_motion.hpp"
#include "til/metrics.hpp"
#include "til/pipeline.hpp"
#include "til/video.hpp"

namespace til {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr int kResultSchemaVersion = 1;

/// One problem found while validating a manifest.
struct ManifestIssue {
  std::string field;  ///< JSON path, e.g. "hand.wrist[3]"
  std::string message;
};

/// Error(Validation) carrying every issue found.
class ManifestError : public Error {
 public:
  ManifestError(std::filesystem::path path, std::vector<ManifestIssue> issues);
  const std::vector<ManifestIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ManifestIssue> issues_;
};

struct ManifestOptions {
  bool check_files = true;  ///< require every frame and depth file to exist
};

VideoRecord load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});
VideoRecord parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir,
                           const ManifestOptions& options = {});

/// Writes a manifest with paths relative to the manifest's directory when possible.
void write_manifest(const VideoRecord& video, const std::filesystem::path& path);

/// Maps an on-disk dataset layout to manifests.
class DatasetAdapter {
 public:
  virtual ~DatasetAdapter() = default;
  virtual std::vector<VideoRecord> load(const std::filesystem::path& root) const = 0;
};

/// A single manifest file, or every "*.json" manifest directly inside a directory
/// (sorted by file name).
class ManifestDirectoryAdapter : public DatasetAdapter {
 public:
  explicit ManifestDirectoryAdapter(ManifestOptions options = {}) : options_(options) {}
  std::vector<VideoRecord> load(const std::filesystem::path& root) const override;

 private:
  ManifestOptions options_;
};

/// Collected non-fatal notes from a tolerant read.
struct ReadWarnings {
  std::vector<std::string> messages;
};

std::string result_to_json(const TILResult& result);
TILResult result_from_json(const std::string& text, ReadWarnings* warnings = nullptr);

/// Atomic write (temp file + rename).
void write_result(const TILResult& result, const std::filesystem::path& path);
/// Throws Error(Parse) with line context on malformed input; unknown fields only warn.
TILResult read_result(const std::filesystem::path& path, ReadWarnings* warnings = nullptr);

std::string dynamics_to_json(const DynamicsProfile& profile, const std::string& video_id);

/// Renders speeds, smoothed speeds, spline, minima and transition lines to SVG text.
std::string render_dynamics_svg(const DynamicsProfile& profile, const TILResult* result,
                                const GroundTruth* gt);
void plot_dynamics(const DynamicsProfile& profile, const TILResult* result, const GroundTruth* gt,
                   const std::filesystem::path& out_path);

struct MetricsReport {
  std::vector<VideoScore> rows;
  MetricsSummary summary;
  std::vector<int> gammas;
};

/// Scores every result file in a directory that carries ground truth.
MetricsReport evaluate_directory(const std::filesystem::path& results_dir,
                                 std::span<const int> gammas);
std::string report_to_json(const MetricsReport& report);

/// Writes `text` to `path` atomically.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Rounds to 6 significant digits for stable serialized output.
double round6(double value);

}  // namespace til
