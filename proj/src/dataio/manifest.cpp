#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#include "json.hpp"
#include "mvc/dataio.hpp"
#include "mvc/errors.hpp"
#include "mvc/rng.hpp"

namespace mvc::data {

using nlohmann::json;

namespace {

constexpr std::pair<VideoKind, const char*> kKindNames[] = {
    {VideoKind::rot_x_pos, "rotation_x+"}, {VideoKind::rot_y_pos, "rotation_y+"},
    {VideoKind::rot_z_pos, "rotation_z+"}, {VideoKind::rot_x_neg, "rotation_x-"},
    {VideoKind::rot_y_neg, "rotation_y-"}, {VideoKind::rot_z_neg, "rotation_z-"},
    {VideoKind::hodgepodge, "hodgepodge"},
};

const std::vector<std::size_t>& lookup(const auto& map, const auto& key, const char* what) {
  auto it = map.find(key);
  if (it == map.end()) throw IndexError(std::string("no frames for ") + what);
  return it->second;
}

double infer_fps(const std::vector<FrameRecord>& records) {
  std::map<int, std::vector<double>> times;
  for (const auto& r : records) times[r.video_id].push_back(r.t);
  double min_dt = 0.0;
  for (auto& [id, ts] : times) {
    std::sort(ts.begin(), ts.end());
    for (std::size_t i = 1; i < ts.size(); ++i) {
      const double dt = ts[i] - ts[i - 1];
      if (dt > 0 && (min_dt == 0.0 || dt < min_dt)) min_dt = dt;
    }
  }
  if (min_dt == 0.0) return 1.0;
  const double fps = 1.0 / min_dt;
  const double rounded = std::round(fps);
  return std::abs(fps - rounded) < 1e-6 * rounded ? rounded : fps;
}

}  // namespace

std::string to_string(VideoKind kind) {
  for (const auto& [k, n] : kKindNames)
    if (k == kind) return n;
  return "unknown";
}

VideoKind parse_video_kind(const std::string& s) {
  for (const auto& [k, n] : kKindNames)
    if (s == n) return k;
  throw ParseError("unknown video_kind \"" + s + "\"");
}

Manifest::Manifest(std::vector<FrameRecord> records, double fps, std::filesystem::path base_dir)
    : records_(std::move(records)), base_dir_(std::move(base_dir)) {
  fps_ = fps > 0.0 ? fps : infer_fps(records_);
  std::set<std::tuple<int, int, int, double>> seen;
  std::map<int, std::tuple<int, int, VideoKind>> video_owner;
  frame_index_.resize(records_.size());
  long max_frame = -1;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!(r.bbox.w > 0 && r.bbox.h > 0))
      throw ConfigError("frame " + std::to_string(i) + ": bounding box must have positive size");
    if (!(r.t >= 0.0)) throw ConfigError("frame " + std::to_string(i) + ": timestamp must be ≥ 0");
    if (!seen.insert({r.class_id, r.object_id, r.video_id, r.t}).second)
      throw ConfigError("duplicate frame (class " + std::to_string(r.class_id) + ", object " +
                        std::to_string(r.object_id) + ", video " + std::to_string(r.video_id) + ", t " +
                        std::to_string(r.t) + ")");
    auto [it, inserted] = video_owner.try_emplace(r.video_id, r.class_id, r.object_id, r.kind);
    if (!inserted && it->second != std::make_tuple(r.class_id, r.object_id, r.kind))
      throw ConfigError("video " + std::to_string(r.video_id) + " is assigned to more than one object or kind");
    frame_index_[i] = std::lround(r.t * fps_);
    max_frame = std::max(max_frame, frame_index_[i]);
    by_video_[r.video_id].push_back(i);
    by_object_[{r.class_id, r.object_id}].push_back(i);
    by_class_[r.class_id].push_back(i);
  }
  for (auto& [id, frames] : by_video_)
    std::stable_sort(frames.begin(), frames.end(),
                     [this](std::size_t a, std::size_t b) { return frame_index_[a] < frame_index_[b]; });
  duration_ = records_.empty() ? 0.0 : static_cast<double>(max_frame + 1) / fps_;
}

const std::vector<std::size_t>& Manifest::video_frames(int video_id) const {
  return lookup(by_video_, video_id, "video");
}
const std::vector<std::size_t>& Manifest::object_frames(ObjectKey key) const {
  return lookup(by_object_, key, "object");
}
const std::vector<std::size_t>& Manifest::class_frames(int class_id) const {
  return lookup(by_class_, class_id, "class");
}

std::vector<int> Manifest::class_ids() const {
  std::vector<int> out;
  for (const auto& [id, _] : by_class_) out.push_back(id);
  return out;
}

std::vector<int> Manifest::video_ids() const {
  std::vector<int> out;
  for (const auto& [id, _] : by_video_) out.push_back(id);
  return out;
}

std::vector<ObjectKey> Manifest::objects() const {
  std::vector<ObjectKey> out;
  for (const auto& [k, _] : by_object_) out.push_back(k);
  return out;
}

std::vector<int> Manifest::objects_of_class(int class_id) const {
  std::vector<int> out;
  for (const auto& [k, _] : by_object_)
    if (k.class_id == class_id) out.push_back(k.object_id);
  return out;
}

std::filesystem::path Manifest::image_path(std::size_t i) const {
  std::filesystem::path p(records_[i].image);
  return p.is_absolute() ? p : base_dir_ / p;
}

Manifest Manifest::rotation_only() const {
  return filter([](const FrameRecord& r) { return is_rotation(r.kind); });
}

// ---- JSON Lines ----------------------------------------------------------------

std::string to_json_line(const FrameRecord& r) {
  json j;
  j["class_id"] = r.class_id;
  j["object_id"] = r.object_id;
  j["video_id"] = r.video_id;
  j["video_kind"] = to_string(r.kind);
  j["t"] = r.t;
  j["image"] = r.image;
  j["bbox"] = {r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h};
  return j.dump();
}

FrameRecord parse_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("expected a JSON object");
  static const std::set<std::string> kFields = {"class_id", "object_id", "video_id", "video_kind",
                                                "t",        "image",     "bbox"};
  for (const auto& [k, _] : j.items())
    if (!kFields.count(k)) throw ParseError("unknown field \"" + k + "\"");
  try {
    FrameRecord r;
    r.class_id = j.at("class_id").get<int>();
    r.object_id = j.at("object_id").get<int>();
    r.video_id = j.at("video_id").get<int>();
    r.kind = parse_video_kind(j.at("video_kind").get<std::string>());
    r.t = j.at("t").get<double>();
    r.image = j.at("image").get<std::string>();
    const auto& b = j.at("bbox");
    if (!b.is_array() || b.size() != 4) throw ParseError("bbox must be [x, y, w, h]");
    r.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad field: ") + e.what());
  }
}

Manifest load_manifest(const std::filesystem::path& path, bool check_images) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest " + path.string());
  std::vector<FrameRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(parse_json_line(line));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (records.empty()) throw ParseError("manifest " + path.string() + " is empty");
  Manifest m;
  try {
    m = Manifest(std::move(records), 0.0, path.parent_path());
  } catch (const ConfigError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (check_images)
    for (std::size_t i = 0; i < m.size(); ++i)
      if (!std::filesystem::exists(m.image_path(i)))
        throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": missing image file " +
                         m.image_path(i).string());
  return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  for (const auto& r : manifest.records()) out << to_json_line(r) << '\n';
  if (!out) throw std::runtime_error("failed writing manifest " + path.string());
}

// ---- splits ------------------------------------------------------------------

std::pair<Manifest, Manifest> split_objects(const Manifest& manifest, const SplitSpec& split) {
  std::set<ObjectKey> test_objects;
  for (int c : manifest.class_ids()) {
    std::vector<int> objs = manifest.objects_of_class(c);
    if (split.holdout_objects_per_class <= 0 ||
        static_cast<std::size_t>(split.holdout_objects_per_class) >= objs.size())
      throw ConfigError("class " + std::to_string(c) + " has " + std::to_string(objs.size()) +
                        " objects; cannot hold out " + std::to_string(split.holdout_objects_per_class));
    Rng rng(derive_seed(split.seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(objs);
    for (int i = 0; i < split.holdout_objects_per_class; ++i) test_objects.insert({c, objs[static_cast<std::size_t>(i)]});
  }
  auto in_test = [&](const FrameRecord& r) { return test_objects.count({r.class_id, r.object_id}) != 0; };
  return {manifest.filter([&](const FrameRecord& r) { return !in_test(r); }), manifest.filter(in_test)};
}

Manifest sample_eval_subset(const Manifest& manifest, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("eval fraction must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(manifest.size())));
  std::vector<std::size_t> idx(manifest.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<FrameRecord> kept;
  kept.reserve(n);
  for (auto i : idx) kept.push_back(manifest[i]);
  return Manifest(std::move(kept), manifest.fps(), manifest.base_dir());
}

}  // namespace mvc::data
