#pragma once

// Procedural multi-view dataset: per-class part-based archetypes, per-object
// instance variation, and rotation / hodgepodge sequences rendered to disk in
// the manifest format.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvc/dataio.hpp"

namespace mvc::synth {

struct SynthConfig {
  int num_classes = 8;
  int objects_per_class = 8;
  int rotation_videos = 2;  // plus one hodgepodge video per object
  double fps = 3.0;
  double duration = 10.0;   // seconds per video
  double revolutions = 2.0;
  int image_size = 32;
  bool occluder = true;
  std::uint64_t seed = 1;

  // Degrees per second for rotation videos.
  double angular_velocity() const { return revolutions * 360.0 / duration; }
  int frames_per_video() const;
  int total_videos() const { return num_classes * objects_per_class * (rotation_videos + 1); }
  void validate() const;

  // C=8, M=8, R=2, 3 fps, 10 s.
  static SynthConfig desk();
  // 12 classes × 30 objects × (6 rotations + hodgepodge).
  static SynthConfig paper_shaped();
};

inline constexpr int kMaxClasses = 12;
inline constexpr int kMaxRotationVideos = 6;

enum class PartShape { ellipse, rect, triangle, ring };

struct Part {
  PartShape shape = PartShape::ellipse;
  double cx = 0, cy = 0;  // object units; the object fits in the unit disc
  double sx = 0, sy = 0;  // half extents
  double angle = 0;       // degrees
  int slot = 0;           // palette index
};

struct Rgb {
  double r = 0, g = 0, b = 0;
};

struct ObjectRecipe {
  int class_id = 0;
  int object_id = 0;
  std::vector<Part> parts;  // drawn in order, later parts on top
  std::array<Rgb, 3> palette{};
  double scale = 0.9;  // fraction of the half frame covered by one unit
  double aspect = 1.0;
};

enum class TransferStyle { recolor, background, blur };
std::string to_string(TransferStyle s);
TransferStyle parse_transfer_style(const std::string& s);

struct StyleShift {
  TransferStyle style = TransferStyle::recolor;
  double strength = 1.0;  // 0 leaves the rendering distribution unchanged
};

// Deterministic in (class_id, object_id, seed). Each palette slot takes a
// class-specific hue plus a small per-object jitter; a recolor shift rotates
// every hue by strength·180°.
ObjectRecipe make_recipe(int class_id, int object_id, std::uint64_t seed, const StyleShift* shift = nullptr);

// Pose of the object: in-plane rotation plus foreshortening about x and y.
struct View {
  double angle_z = 0;  // degrees
  double angle_x = 0;
  double angle_y = 0;
};

struct RenderSettings {
  int image_size = 32;
  double center_dx = 0, center_dy = 0;  // pixels
  std::optional<double> occluder_phase;  // in [0, 1); none = no hand
  double background = 0.7;
  double hue_cast = 0;  // degrees, rotates object colors about the gray axis
  std::uint64_t noise_seed = 0;
  double noise_amplitude = 0.03;
  std::optional<StyleShift> style;  // background texture / blur
};

struct RenderedFrame {
  data::Image image;
  data::BBox bbox;                 // tight box of object pixels
  std::vector<std::uint8_t> mask;  // H×W, 1 where the object is drawn
  double occluded_fraction = 0;    // of object pixels hidden by the hand
};

RenderedFrame render_frame(const ObjectRecipe& recipe, const View& view, const RenderSettings& settings);

// Video kinds for the R rotation videos of an object, in generation order.
std::vector<data::VideoKind> rotation_kinds(int rotation_videos);

// View of rotation video `kind` at time t with starting phase (degrees).
View rotation_view(data::VideoKind kind, double phase, double angular_velocity, double t);

// Rotation in degrees between rotation frames `gap_seconds` apart, with the
// gap rounded to whole frames as the sampler does.
double gap_angle(const SynthConfig& config, double gap_seconds);

// Renders every sequence into out_dir/images, writes out_dir/manifest.jsonl
// and echoes the configuration to out_dir/synth_config.json.
data::Manifest generate(const SynthConfig& config, const std::filesystem::path& out_dir);

// Same classes with fresh object instances (object ids start at
// objects_per_class) rendered with a shifted style.
data::Manifest generate_transfer(const SynthConfig& config, const StyleShift& shift,
                                 const std::filesystem::path& out_dir);

std::string config_to_json(const SynthConfig& config);
SynthConfig config_from_json(const std::string& text);

}  // namespace mvc::synth
