#pragma once

// Frame manifests (JSON Lines), bounding-box geometry, object-level splits,
// and the two image file formats.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mvc::data {

enum class VideoKind { rot_x_pos, rot_y_pos, rot_z_pos, rot_x_neg, rot_y_neg, rot_z_neg, hodgepodge };

std::string to_string(VideoKind kind);
// Accepts the manifest spellings "rotation_x+", …, "hodgepodge".
VideoKind parse_video_kind(const std::string& s);
constexpr bool is_rotation(VideoKind k) { return k != VideoKind::hodgepodge; }

struct BBox {
  double x = 0, y = 0, w = 0, h = 0;
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct FrameRecord {
  int class_id = 0;
  int object_id = 0;  // unique within its class
  int video_id = 0;   // unique within the manifest
  VideoKind kind = VideoKind::rot_x_pos;
  double t = 0.0;     // seconds from video start
  std::string image;  // relative to the manifest directory, or absolute
  BBox bbox;
  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct ObjectKey {
  int class_id = 0;
  int object_id = 0;
  auto operator<=>(const ObjectKey&) const = default;
};

/// Immutable, validated collection of frames with lookup indices. Frames of
/// one video are indexed in timestamp order.
class Manifest {
 public:
  Manifest() = default;
  // Validates invariants; fps ≤ 0 means "infer from timestamp spacing".
  Manifest(std::vector<FrameRecord> records, double fps = 0.0, std::filesystem::path base_dir = {});

  const std::vector<FrameRecord>& records() const { return records_; }
  const FrameRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  double fps() const { return fps_; }
  // Longest video span, end-exclusive: (max frame index + 1) / fps.
  double duration() const { return duration_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }

  // Integer frame position of record i: round(t · fps).
  long frame_index(std::size_t i) const { return frame_index_[i]; }

  const std::vector<std::size_t>& video_frames(int video_id) const;
  const std::vector<std::size_t>& object_frames(ObjectKey key) const;
  const std::vector<std::size_t>& class_frames(int class_id) const;

  std::vector<int> class_ids() const;
  std::vector<int> video_ids() const;
  std::vector<ObjectKey> objects() const;
  // Objects of one class in ascending object_id order.
  std::vector<int> objects_of_class(int class_id) const;

  std::filesystem::path image_path(std::size_t i) const;

  // Records satisfying pred, re-indexed (fps and base dir kept).
  template <typename Pred>
  Manifest filter(Pred&& pred) const {
    std::vector<FrameRecord> kept;
    for (const auto& r : records_)
      if (pred(r)) kept.push_back(r);
    return Manifest(std::move(kept), fps_, base_dir_);
  }
  Manifest rotation_only() const;

  friend bool operator==(const Manifest& a, const Manifest& b) {
    return a.records_ == b.records_ && a.fps_ == b.fps_;
  }

 private:
  std::vector<FrameRecord> records_;
  double fps_ = 1.0;
  double duration_ = 0.0;
  std::filesystem::path base_dir_;
  std::vector<long> frame_index_;
  std::map<int, std::vector<std::size_t>> by_video_;
  std::map<ObjectKey, std::vector<std::size_t>> by_object_;
  std::map<int, std::vector<std::size_t>> by_class_;
};

// ---- manifest files --------------------------------------------------------

std::string to_json_line(const FrameRecord& r);
FrameRecord parse_json_line(const std::string& line);

// Throws ParseError (with 1-based line number) on malformed lines, on an
// empty file, on duplicate frames, and when check_images is set and a
// referenced image is missing.
Manifest load_manifest(const std::filesystem::path& path, bool check_images = true);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

// ---- geometry ----------------------------------------------------------------

struct SquareCrop {
  BBox box;
  bool degraded = false;  // side had to be clamped to the image
};

// Extends the shorter side to max(w, h) around the box center, then shifts
// the square (never shrinks it) to lie inside the image. When the side
// exceeds min(image_w, image_h) it is clamped and `degraded` is set.
SquareCrop square_crop(const BBox& box, double image_w, double image_h);

// Componentwise linear interpolation; t must lie in (t1, t2].
BBox interpolate_bbox(const BBox& b1, double t1, const BBox& b2, double t2, double t);

struct TimedBox {
  double t;
  BBox box;
};
// Boxes for each query time from sparse, time-sorted annotations. Times
// before the first or after the last annotation yield nullopt (dropped).
std::vector<std::optional<BBox>> interpolate_track(std::span<const TimedBox> annotations,
                                                   std::span<const double> times);

// ---- splits ------------------------------------------------------------------

struct SplitSpec {
  int holdout_objects_per_class = 3;
  std::uint64_t seed = 0;
};

// Per class, exactly holdout objects (seeded choice) go to the test side.
std::pair<Manifest, Manifest> split_objects(const Manifest& manifest, const SplitSpec& split);

// round(fraction · size) frames drawn uniformly without replacement; the
// result keeps manifest order.
Manifest sample_eval_subset(const Manifest& manifest, double fraction, std::uint64_t seed);

// ---- images ------------------------------------------------------------------

/// 3-channel planar (CHW) image with values in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, float fill = 0.f) : height(h), width(w), data(static_cast<std::size_t>(3 * h * w), fill) {}
  float& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  friend bool operator==(const Image&, const Image&) = default;
};

// Binary PPM (P6, maxval 255). Values are quantized with round-half-up.
void write_ppm(const Image& img, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

// "MVIM" | u32 dtype (1 = f32, 2 = f64) | u32 H | u32 W | 3·H·W values CHW.
// All fields little-endian.
enum class TensorDtype : std::uint32_t { f32 = 1, f64 = 2 };
void write_tensor_image(const Image& img, const std::filesystem::path& path, TensorDtype dtype = TensorDtype::f32);
Image read_tensor_image(const std::filesystem::path& path);

// Dispatches on the file's magic bytes.
Image read_image(const std::filesystem::path& path);

// Pixels of a box, rounded to the integer grid and clipped to the image.
Image extract_region(const Image& img, const BBox& box);

}  // namespace mvc::data
