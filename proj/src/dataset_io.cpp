#include "til/dataset_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

namespace til {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string summarize(const fs::path& path, const std::vector<ManifestIssue>& issues) {
  std::string text = fmt::format("invalid manifest {} ({} issue{})", path.string(), issues.size(),
                                 issues.size() == 1 ? "" : "s");
  for (const auto& issue : issues) text += fmt::format("\n  {}: {}", issue.field, issue.message);
  return text;
}

/// Collects manifest issues while walking the document.
class Validator {
 public:
  void add(std::string field, std::string message) { issues.push_back({std::move(field), std::move(message)}); }

  const json* field(const json& parent, const std::string& path, const char* key, bool required) {
    const auto it = parent.find(key);
    if (it == parent.end() || it->is_null()) {
      if (required) add(path.empty() ? key : path + "." + key, "missing required field");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const json& parent, const std::string& path, const char* key, bool required) {
    const json* j = field(parent, path, key, required);
    if (!j) return std::nullopt;
    if (!j->is_number()) {
      add(join(path, key), "expected a number");
      return std::nullopt;
    }
    return j->get<double>();
  }

  std::optional<Pixel> pixel(const json& j, const std::string& path) {
    if (j.is_null()) return std::nullopt;
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
      add(path, "expected [u, v] or null");
      return std::nullopt;
    }
    return Pixel{j[0].get<double>(), j[1].get<double>()};
  }

  std::vector<int> frame_list(const json& j, const std::string& path, int n_obs) {
    std::vector<int> out;
    if (!j.is_array()) {
      add(path, "expected an array of frame indices");
      return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string item = fmt::format("{}[{}]", path, i);
      if (!j[i].is_number_integer()) {
        add(item, "expected an integer frame index");
        continue;
      }
      const int f = j[i].get<int>();
      if (f < 1 || f > n_obs) {
        add(item, fmt::format("frame {} outside [1, {}] (indices are 1-based)", f, n_obs));
        continue;
      }
      out.push_back(f);
    }
    if (!std::is_sorted(out.begin(), out.end())) add(path, "frame indices must be ascending");
    return out;
  }

  static std::string join(const std::string& path, const char* key) {
    return path.empty() ? std::string(key) : path + "." + key;
  }

  std::vector<ManifestIssue> issues;
};

HandObservation parse_hand(const json& j, const std::string& path, Validator& v) {
  HandObservation h;
  if (!j.is_object()) {
    v.add(path, "expected an object");
    return h;
  }
  if (const auto it = j.find("wrist"); it != j.end()) h.wrist = v.pixel(*it, path + ".wrist");
  if (const auto it = j.find("index_tip"); it != j.end()) h.index_tip = v.pixel(*it, path + ".index_tip");
  if (const auto it = j.find("thumb_tip"); it != j.end()) h.thumb_tip = v.pixel(*it, path + ".thumb_tip");
  if (const auto it = j.find("box"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 4 ||
        !std::all_of(it->begin(), it->end(), [](const json& x) { return x.is_number(); })) {
      v.add(path + ".box", "expected [x0, y0, x1, y1] or null");
    } else {
      const auto c = [&](std::size_t i) { return static_cast<int>(std::lround((*it)[i].get<double>())); };
      h.box = Box{c(0), c(1), c(2), c(3)};
      if (h.box->x1 < h.box->x0 || h.box->y1 < h.box->y0) v.add(path + ".box", "box corners are inverted");
    }
  }
  if (const auto it = j.find("keypoints"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) {
      v.add(path + ".keypoints", "expected an array of [u, v]");
    } else {
      for (std::size_t i = 0; i < it->size(); ++i) {
        if (auto p = v.pixel((*it)[i], fmt::format("{}.keypoints[{}]", path, i))) h.keypoints.push_back(*p);
      }
    }
  }
  return h;
}

json pixel_json(const std::optional<Pixel>& p) {
  return p ? json::array({round6(p->u), round6(p->v)}) : json(nullptr);
}

std::string relative_to(const fs::path& file, const fs::path& dir) {
  const fs::path rel = file.lexically_relative(dir);
  return rel.empty() ? file.generic_string() : rel.generic_string();
}

json event_json(const EventRecord& e) {
  json j = {
      {"anchor_plan_id", e.anchor_plan_id},
      {"anchor", e.anchor},
      {"attribute", std::string(to_string(e.attribute))},
      {"window", e.window.frames},
      {"anchor_position", e.window.anchor_position},
      {"round1_time", e.round1_time},
      {"checker_verdict", e.checker_accepted ? json(*e.checker_accepted ? "accept" : "reject") : json(nullptr)},
      {"round2_time", e.round2_time ? json(*e.round2_time) : json(nullptr)},
      {"final_time", e.final_time},
      {"resample_count", e.resample_count},
      {"low_confidence", e.low_confidence},
  };
  return j;
}

void warn_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where,
                  ReadWarnings* warnings) {
  if (!warnings || !j.is_object()) return;
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      warnings->messages.push_back(fmt::format("{}: unknown field '{}' ignored", where, key));
    }
  }
}

EventRecord event_from_json(const json& j, const std::string& where, ReadWarnings* warnings) {
  warn_unknown(j,
               {"anchor_plan_id", "anchor", "attribute", "window", "anchor_position", "round1_time",
                "checker_verdict", "round2_time", "final_time", "resample_count", "low_confidence"},
               where, warnings);
  EventRecord e;
  e.anchor_plan_id = j.at("anchor_plan_id").get<int>();
  e.anchor = j.at("anchor").get<int>();
  e.attribute = attribute_from_string(j.at("attribute").get<std::string>());
  e.window.frames = j.at("window").get<std::vector<int>>();
  e.window.anchor_position = j.at("anchor_position").get<int>();
  e.round1_time = j.at("round1_time").get<int>();
  const json& verdict = j.at("checker_verdict");
  if (!verdict.is_null()) {
    const auto text = verdict.get<std::string>();
    if (text != "accept" && text != "reject") throw Error(ErrorKind::Parse, where + ": bad checker_verdict " + text);
    e.checker_accepted = text == "accept";
  }
  if (!j.at("round2_time").is_null()) e.round2_time = j.at("round2_time").get<int>();
  e.final_time = j.at("final_time").get<int>();
  e.resample_count = j.at("resample_count").get<int>();
  e.low_confidence = j.value("low_confidence", false);
  return e;
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorKind::Parse, fmt::format("{}: line {}, column {}: {}", what, line, column, e.what()));
  }
}

}  // namespace

ManifestError::ManifestError(fs::path path, std::vector<ManifestIssue> issues)
    : Error(ErrorKind::Validation, summarize(path, issues)), issues_(std::move(issues)) {}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += fmt::format(".tmp{}", counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::Io, fmt::format("cannot move {} into place: {}", path.string(), ec.message()));
  }
}

double round6(double value) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  return std::stod(fmt::format("{:.6g}", value));
}

VideoRecord parse_manifest(const std::string& json_text, const fs::path& base_dir, const ManifestOptions& options) {
  const fs::path source = base_dir / "<manifest>";
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(json_text, e.byte == 0 ? 0 : e.byte - 1);
    throw ManifestError(source, {{"", fmt::format("line {}, column {}: not valid JSON", line, column)}});
  }
  if (!doc.is_object()) throw ManifestError(source, {{"", "manifest must be a JSON object"}});

  Validator v;
  VideoRecord video;
  if (const json* version = v.field(doc, "", "schema_version", true)) {
    if (!version->is_number_integer() || version->get<int>() != kManifestSchemaVersion) {
      v.add("schema_version", fmt::format("unsupported schema version (expected {})", kManifestSchemaVersion));
    }
  }
  if (const json* id = v.field(doc, "", "id", true)) {
    if (id->is_string() && !id->get<std::string>().empty()) video.id = id->get<std::string>();
    else v.add("id", "expected a non-empty string");
  }
  if (auto fps = v.number(doc, "", "fps", true)) {
    if (*fps > 0.0 && std::isfinite(*fps)) video.fps = *fps;
    else v.add("fps", "must be positive");
  }
  if (auto scale = v.number(doc, "", "depth_scale", false)) {
    if (*scale > 0.0) video.depth_scale = *scale;
    else v.add("depth_scale", "must be positive");
  }

  const auto paths = [&](const char* key, bool required) {
    std::vector<fs::path> out;
    const json* list = v.field(doc, "", key, required);
    if (!list) return out;
    if (!list->is_array()) {
      v.add(key, "expected an array of paths");
      return out;
    }
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string item = fmt::format("{}[{}]", key, i);
      if (!(*list)[i].is_string()) {
        v.add(item, "expected a path string");
        continue;
      }
      fs::path p = (*list)[i].get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      p = p.lexically_normal();
      if (options.check_files && !fs::exists(p)) v.add(item, "file not found: " + p.string());
      out.push_back(std::move(p));
    }
    return out;
  };
  video.frames = paths("frames", true);
  video.depth = paths("depth", false);
  const int n_obs = video.n_obs();
  if (n_obs == 0 && doc.contains("frames")) v.add("frames", "at least one frame is required");
  if (video.has_depth() && video.depth.size() != video.frames.size()) {
    v.add("depth", fmt::format("length mismatch: depth has {} entries but frames has {}", video.depth.size(),
                               video.frames.size()));
  }

  const json* intrinsics = v.field(doc, "", "intrinsics", video.has_depth());
  if (intrinsics) {
    if (!intrinsics->is_object()) {
      v.add("intrinsics", "expected an object");
    } else {
      CameraIntrinsics& k = video.intrinsics;
      k.fx = v.number(*intrinsics, "intrinsics", "fx", true).value_or(0.0);
      k.fy = v.number(*intrinsics, "intrinsics", "fy", true).value_or(0.0);
      k.cx = v.number(*intrinsics, "intrinsics", "cx", true).value_or(0.0);
      k.cy = v.number(*intrinsics, "intrinsics", "cy", true).value_or(0.0);
      k.width = static_cast<int>(v.number(*intrinsics, "intrinsics", "width", true).value_or(0.0));
      k.height = static_cast<int>(v.number(*intrinsics, "intrinsics", "height", true).value_or(0.0));
      try {
        k.validate();
      } catch (const Error& e) {
        v.add("intrinsics", e.what());
      }
    }
  }

  if (const json* hand = v.field(doc, "", "hand", true)) {
    if (!hand->is_array()) {
      v.add("hand", "expected an array with one entry per frame");
    } else {
      if (hand->size() != video.frames.size()) {
        v.add("hand", fmt::format("length mismatch: hand has {} entries but frames has {}", hand->size(),
                                  video.frames.size()));
      }
      for (std::size_t i = 0; i < hand->size(); ++i) {
        video.hand.push_back(parse_hand((*hand)[i], fmt::format("hand[{}]", i), v));
      }
    }
  }

  if (const json* gt = v.field(doc, "", "ground_truth", false)) {
    if (!gt->is_object()) {
      v.add("ground_truth", "expected an object");
    } else {
      GroundTruth truth;
      if (const json* c = v.field(*gt, "ground_truth", "contacts", true)) {
        truth.contacts = v.frame_list(*c, "ground_truth.contacts", n_obs);
      }
      if (const json* s = v.field(*gt, "ground_truth", "separations", true)) {
        truth.separations = v.frame_list(*s, "ground_truth.separations", n_obs);
      }
      video.ground_truth = std::move(truth);
    }
  }

  if (!v.issues.empty()) throw ManifestError(source, std::move(v.issues));
  return video;
}

VideoRecord load_manifest(const fs::path& path, const ManifestOptions& options) {
  const fs::path absolute = fs::absolute(path);
  const std::string text = read_text(absolute);
  try {
    VideoRecord video = parse_manifest(text, absolute.parent_path(), options);
    video.source = absolute;
    return video;
  } catch (const ManifestError& e) {
    throw ManifestError(absolute, e.issues());
  }
}

void write_manifest(const VideoRecord& video, const fs::path& path) {
  const fs::path dir = fs::absolute(path).parent_path();
  json doc;
  doc["schema_version"] = kManifestSchemaVersion;
  doc["id"] = video.id;
  doc["fps"] = video.fps;
  doc["depth_scale"] = video.depth_scale;
  json frames = json::array(), depth = json::array();
  for (const auto& f : video.frames) frames.push_back(relative_to(fs::absolute(f), dir));
  for (const auto& d : video.depth) depth.push_back(relative_to(fs::absolute(d), dir));
  doc["frames"] = frames;
  if (video.has_depth()) doc["depth"] = depth;
  const CameraIntrinsics& k = video.intrinsics;
  if (k.fx > 0.0) {
    doc["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
  }
  json hand = json::array();
  for (const auto& h : video.hand) {
    json entry = {{"wrist", pixel_json(h.wrist)},
                  {"index_tip", pixel_json(h.index_tip)},
                  {"thumb_tip", pixel_json(h.thumb_tip)},
                  {"box", h.box ? json::array({h.box->x0, h.box->y0, h.box->x1, h.box->y1}) : json(nullptr)}};
    if (!h.keypoints.empty()) {
      json kps = json::array();
      for (const auto& p : h.keypoints) kps.push_back(pixel_json(p));
      entry["keypoints"] = kps;
    }
    hand.push_back(entry);
  }
  doc["hand"] = hand;
  if (video.ground_truth) {
    doc["ground_truth"] = {{"contacts", video.ground_truth->contacts},
                           {"separations", video.ground_truth->separations}};
  }
  write_text_atomic(path, doc.dump(2) + "\n");
}

std::vector<VideoRecord> ManifestDirectoryAdapter::load(const fs::path& root) const {
  if (fs::is_regular_file(root)) return {load_manifest(root, options_)};
  if (!fs::is_directory(root)) throw Error(ErrorKind::Io, "no manifest or directory at " + root.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<VideoRecord> videos;
  for (const auto& f : files) videos.push_back(load_manifest(f, options_));
  return videos;
}

std::string result_to_json(const TILResult& r) {
  json events = json::array(), diagnostics = json::array();
  for (const auto& e : r.events) events.push_back(event_json(e));
  for (const auto& d : r.diagnostics) {
    diagnostics.push_back({{"code", d.code}, {"plan_id", d.plan_id}, {"frame", d.frame}, {"message", d.message}});
  }
  json doc = {
      {"schema_version", kResultSchemaVersion},
      {"video_id", r.info.video_id},
      {"n_obs", r.info.n_obs},
      {"mode", r.info.mode},
      {"seed", r.info.seed},
      {"trial", r.info.trial},
      {"config_digest", r.info.config_digest},
      {"contacts", r.contacts},
      {"separations", r.separations},
      {"events", events},
      {"diagnostics", diagnostics},
      {"partial", r.partial},
  };
  if (r.ground_truth) {
    doc["ground_truth"] = {{"contacts", r.ground_truth->contacts}, {"separations", r.ground_truth->separations}};
  }
  return doc.dump(2) + "\n";
}

TILResult result_from_json(const std::string& text, ReadWarnings* warnings) {
  const json doc = parse_json_text(text, "result");
  try {
    warn_unknown(doc,
                 {"schema_version", "video_id", "n_obs", "mode", "seed", "trial", "config_digest", "contacts",
                  "separations", "events", "diagnostics", "partial", "ground_truth"},
                 "result", warnings);
    const int version = doc.at("schema_version").get<int>();
    if (version > kResultSchemaVersion && warnings) {
      warnings->messages.push_back(fmt::format("result schema version {} is newer than {}", version,
                                               kResultSchemaVersion));
    }
    TILResult r;
    r.info.video_id = doc.at("video_id").get<std::string>();
    r.info.n_obs = doc.at("n_obs").get<int>();
    r.info.mode = doc.at("mode").get<std::string>();
    r.info.seed = doc.at("seed").get<std::uint64_t>();
    r.info.trial = doc.at("trial").get<int>();
    r.info.config_digest = doc.at("config_digest").get<std::string>();
    r.contacts = doc.at("contacts").get<std::vector<int>>();
    r.separations = doc.at("separations").get<std::vector<int>>();
    const json& events = doc.at("events");
    for (std::size_t i = 0; i < events.size(); ++i) {
      r.events.push_back(event_from_json(events[i], fmt::format("events[{}]", i), warnings));
    }
    const json& diagnostics = doc.at("diagnostics");
    for (std::size_t i = 0; i < diagnostics.size(); ++i) {
      const json& d = diagnostics[i];
      warn_unknown(d, {"code", "plan_id", "frame", "message"}, fmt::format("diagnostics[{}]", i), warnings);
      r.diagnostics.push_back({d.at("code").get<std::string>(), d.at("plan_id").get<int>(), d.at("frame").get<int>(),
                               d.at("message").get<std::string>()});
    }
    r.partial = doc.at("partial").get<bool>();
    if (const auto it = doc.find("ground_truth"); it != doc.end() && !it->is_null()) {
      r.ground_truth = GroundTruth{it->at("contacts").get<std::vector<int>>(),
                                   it->at("separations").get<std::vector<int>>()};
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, fmt::format("result: {}", e.what()));
  }
}

void write_result(const TILResult& result, const fs::path& path) { write_text_atomic(path, result_to_json(result)); }

TILResult read_result(const fs::path& path, ReadWarnings* warnings) {
  try {
    return result_from_json(read_text(path), warnings);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Parse) throw;
    throw Error(ErrorKind::Parse, fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string dynamics_to_json(const DynamicsProfile& profile, const std::string& video_id) {
  const auto rounded = [](const std::vector<double>& values) {
    json out = json::array();
    for (double x : values) out.push_back(round6(x));
    return out;
  };
  json pieces = json::array();
  for (const auto& p : profile.spline.pieces()) {
    pieces.push_back({round6(p.a), round6(p.b), round6(p.c), round6(p.d)});
  }
  const json doc = {
      {"video_id", video_id},
      {"dt", round6(profile.dt)},
      {"savgol_window", profile.window_used},
      {"savgol_order", profile.order_used},
      {"speeds", rounded(profile.speeds)},
      {"smoothed", rounded(profile.smoothed)},
      {"spline_pieces", pieces},
      {"spline_degraded", profile.spline.degraded()},
      {"zero_accel_times", rounded(profile.zero_accel_times)},
      {"notes", profile.notes},
  };
  return doc.dump(2) + "\n";
}

std::string render_dynamics_svg(const DynamicsProfile& profile, const TILResult* result, const GroundTruth* gt) {
  constexpr double kWidth = 960, kHeight = 360, kLeft = 60, kRight = 20, kTop = 30, kBottom = 40;
  const double n = static_cast<double>(std::max<std::size_t>(profile.speeds.size(), 2));
  double y_max = 0.0;
  for (double s : profile.speeds) y_max = std::max(y_max, s);
  for (double s : profile.smoothed) y_max = std::max(y_max, s);
  const bool has_spline = !profile.spline.pieces().empty();
  std::vector<std::pair<double, double>> spline_points;
  if (has_spline) {
    for (double t = profile.spline.t_min(); t <= profile.spline.t_max() + 1e-9; t += 0.1) {
      const double tt = std::min(t, profile.spline.t_max());
      spline_points.emplace_back(tt, profile.spline(tt));
      y_max = std::max(y_max, spline_points.back().second);
    }
  }
  if (!(y_max > 0.0)) y_max = 1.0;
  y_max *= 1.05;
  const auto x = [&](double t) { return kLeft + (t - 1.0) / (n - 1.0) * (kWidth - kLeft - kRight); };
  const auto y = [&](double v) { return kHeight - kBottom - std::max(v, 0.0) / y_max * (kHeight - kTop - kBottom); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<line x1=\"{2}\" y1=\"{3}\" x2=\"{4}\" y2=\"{3}\" stroke=\"black\"/>\n"
      "<line x1=\"{2}\" y1=\"{5}\" x2=\"{2}\" y2=\"{3}\" stroke=\"black\"/>\n"
      "<text x=\"{6}\" y=\"{7}\" font-size=\"12\" text-anchor=\"middle\">frame</text>\n"
      "<text x=\"14\" y=\"{8}\" font-size=\"12\" transform=\"rotate(-90 14 {8})\" text-anchor=\"middle\">speed</text>\n",
      kWidth, kHeight, kLeft, kHeight - kBottom, kWidth - kRight, kTop, (kWidth + kLeft) / 2, kHeight - 8,
      kHeight / 2);

  const auto polyline = [&](const std::vector<std::pair<double, double>>& points, const char* cls,
                            const char* color, double width) {
    if (points.empty()) return;
    svg += fmt::format("<polyline class=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" points=\"", cls, color,
                       width);
    for (const auto& [t, v] : points) svg += fmt::format("{:.2f},{:.2f} ", x(t), y(v));
    svg += "\"/>\n";
  };
  const auto series = [](const std::vector<double>& values) {
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < values.size(); ++i) out.emplace_back(static_cast<double>(i + 1), values[i]);
    return out;
  };
  polyline(series(profile.speeds), "raw-speed", "#999999", 1.0);
  polyline(series(profile.smoothed), "smoothed-speed", "#1f77b4", 1.5);
  polyline(spline_points, "spline", "#ff7f0e", 1.5);

  for (double t : profile.zero_accel_times) {
    svg += fmt::format("<circle class=\"zero-accel\" data-t=\"{:.6f}\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" "
                       "fill=\"#d62728\"/>\n",
                       t, x(t), y(profile.spline(t)));
  }

  const auto vline = [&](int frame, const char* cls, const char* color, const char* dash, const std::string& label) {
    const double px = x(frame);
    svg += fmt::format("<line class=\"{}\" data-frame=\"{}\" x1=\"{:.2f}\" y1=\"{}\" x2=\"{:.2f}\" y2=\"{}\" "
                       "stroke=\"{}\" stroke-dasharray=\"{}\"/>\n",
                       cls, frame, px, kTop, px, kHeight - kBottom, color, dash);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" font-size=\"10\" fill=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       px, kTop - 6, color, label);
  };
  if (result) {
    for (int f : result->contacts) vline(f, "pred-contact", "#2ca02c", "none", fmt::format("c {}", f));
    for (int f : result->separations) vline(f, "pred-separation", "#9467bd", "none", fmt::format("s {}", f));
  }
  if (gt) {
    for (int f : gt->contacts) vline(f, "gt-contact", "#2ca02c", "4 3", fmt::format("gt c {}", f));
    for (int f : gt->separations) vline(f, "gt-separation", "#9467bd", "4 3", fmt::format("gt s {}", f));
  }
  svg += "</svg>\n";
  return svg;
}

void plot_dynamics(const DynamicsProfile& profile, const TILResult* result, const GroundTruth* gt,
                   const fs::path& out_path) {
  write_text_atomic(out_path, render_dynamics_svg(profile, result, gt));
}

MetricsReport evaluate_directory(const fs::path& results_dir, std::span<const int> gammas) {
  if (!fs::is_directory(results_dir)) throw Error(ErrorKind::Io, "not a directory: " + results_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(results_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  MetricsReport report;
  report.gammas.assign(gammas.begin(), gammas.end());
  for (const auto& file : files) {
    TILResult r;
    try {
      r = read_result(file);
    } catch (const Error&) {
      continue;  // not a result file (e.g. a previous report)
    }
    if (!r.ground_truth) continue;
    VideoScore score = score_video(r.contacts, r.separations, r.ground_truth->contacts, r.ground_truth->separations,
                                   r.info.n_obs, gammas);
    score.video_id = r.info.video_id;
    score.trial = r.info.trial;
    report.rows.push_back(std::move(score));
  }
  report.summary = aggregate(report.rows);
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  const auto sr_json = [](const std::vector<std::pair<int, double>>& sr) {
    json out = json::object();
    for (const auto& [gamma, value] : sr) out[std::to_string(gamma)] = round6(value);
    return out;
  };
  json rows = json::array();
  for (const auto& s : report.rows) {
    rows.push_back({{"video_id", s.video_id},
                    {"trial", s.trial},
                    {"n_obs", s.n_obs},
                    {"mof", round6(s.mof)},
                    {"iou", round6(s.iou)},
                    {"mae", round6(s.mae)},
                    {"mae_fallback", s.mae_fallback},
                    {"gt_events", s.gt_events},
                    {"matched", s.matched},
                    {"unmatched_gt", s.unmatched_gt},
                    {"unmatched_pred", s.unmatched_pred},
                    {"sr", sr_json(s.sr)}});
  }
  const json doc = {
      {"convention",
       "MAE averages |pred - gt| over matched pairs only (n_obs when a video has no match); unmatched events are "
       "counted separately and are SR failures. MoF, IoU and MAE are means over videos; SR is pooled over events."},
      {"gammas", report.gammas},
      {"rows", rows},
      {"summary",
       {{"videos", report.summary.videos},
        {"mof", round6(report.summary.mof)},
        {"iou", round6(report.summary.iou)},
        {"mae", round6(report.summary.mae)},
        {"sr", sr_json(report.summary.sr)}}},
  };
  return doc.dump(2) + "\n";
}

}  // namespace til
