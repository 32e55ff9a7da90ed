#include "mvc/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "json.hpp"
#include "mvc/errors.hpp"
#include "mvc/rng.hpp"

namespace mvc::synth {

using data::BBox;
using data::Image;
using data::VideoKind;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMinForeshortening = 0.4;
constexpr double kMaxOcclusion = 0.30;
constexpr Rgb kSkin{0.86, 0.66, 0.53};
constexpr double kClassHueStep = 30.0;
constexpr double kHueJitter = 18.0;
constexpr double kSlotHueOffset[] = {0.0, 120.0, 240.0};
constexpr double kHueCast = 30.0;

// Class archetypes. Coordinates are object units with y pointing down; the
// triangle apex points to −y.
const std::vector<std::vector<Part>>& archetypes() {
  using S = PartShape;
  static const std::vector<std::vector<Part>> kArchetypes = {
      // car
      {{S::rect, 0, 0.1, 0.8, 0.25, 0, 0},
       {S::rect, 0.05, -0.28, 0.4, 0.18, 0, 1},
       {S::ellipse, -0.5, 0.4, 0.2, 0.2, 0, 2},
       {S::ellipse, 0.5, 0.4, 0.2, 0.2, 0, 2}},
      // spoon
      {{S::rect, 0, 0.3, 0.08, 0.62, 0, 0}, {S::ellipse, 0, -0.55, 0.28, 0.38, 0, 1}},
      // duck
      {{S::ellipse, 0.15, 0.3, 0.68, 0.38, 0, 0},
       {S::ellipse, -0.4, -0.35, 0.3, 0.3, 0, 0},
       {S::triangle, -0.8, -0.3, 0.13, 0.17, -90, 1},
       {S::ellipse, 0.25, 0.22, 0.34, 0.17, -15, 2}},
      // mug
      {{S::rect, -0.18, 0, 0.48, 0.62, 0, 0}, {S::ring, 0.45, 0, 0.32, 0.36, 0, 1}, {S::rect, -0.18, -0.55, 0.48, 0.08, 0, 2}},
      // airplane
      {{S::ellipse, 0, 0, 0.88, 0.16, 0, 0},
       {S::rect, -0.05, 0, 0.17, 0.8, 12, 1},
       {S::triangle, 0.72, -0.25, 0.14, 0.22, 0, 1},
       {S::rect, 0.72, 0.02, 0.06, 0.25, 0, 2}},
      // cat
      {{S::ellipse, 0, 0.15, 0.58, 0.5, 0, 0},
       {S::triangle, -0.36, -0.48, 0.2, 0.3, -10, 0},
       {S::triangle, 0.36, -0.48, 0.2, 0.3, 10, 0},
       {S::ellipse, -0.2, 0.05, 0.09, 0.12, 0, 2},
       {S::ellipse, 0.2, 0.05, 0.09, 0.12, 0, 2},
       {S::triangle, 0, 0.3, 0.07, 0.06, 180, 1}},
      // giraffe
      {{S::ellipse, 0.25, 0.15, 0.42, 0.22, 0, 0},
       {S::rect, -0.2, -0.32, 0.09, 0.45, 25, 0},
       {S::ellipse, -0.42, -0.78, 0.2, 0.12, 0, 0},
       {S::rect, 0.0, 0.6, 0.05, 0.32, 0, 1},
       {S::rect, 0.5, 0.6, 0.05, 0.32, 0, 1},
       {S::ellipse, 0.2, 0.1, 0.09, 0.07, 0, 2},
       {S::ellipse, 0.42, 0.2, 0.08, 0.06, 0, 2}},
      // ball
      {{S::ellipse, 0, 0, 0.78, 0.78, 0, 0}, {S::rect, 0, 0, 0.76, 0.14, 0, 1}, {S::ellipse, 0, 0, 0.16, 0.16, 0, 2}},
      // cup
      {{S::triangle, 0, 0.05, 0.5, 0.65, 180, 0}, {S::ellipse, 0, -0.58, 0.52, 0.12, 0, 1}, {S::rect, 0, 0.72, 0.22, 0.06, 0, 2}},
      // helicopter
      {{S::ellipse, -0.2, 0.1, 0.45, 0.32, 0, 0},
       {S::rect, 0.5, 0.0, 0.4, 0.06, 0, 0},
       {S::rect, -0.2, -0.36, 0.8, 0.04, 0, 1},
       {S::rect, -0.2, -0.28, 0.04, 0.08, 0, 1},
       {S::rect, -0.2, 0.52, 0.45, 0.035, 0, 2},
       {S::rect, 0.85, -0.08, 0.04, 0.14, 0, 2}},
      // truck
      {{S::rect, 0.2, -0.05, 0.55, 0.4, 0, 0},
       {S::rect, -0.58, 0.05, 0.2, 0.3, 0, 1},
       {S::ellipse, -0.55, 0.45, 0.15, 0.15, 0, 2},
       {S::ellipse, 0.1, 0.45, 0.15, 0.15, 0, 2},
       {S::ellipse, 0.55, 0.45, 0.15, 0.15, 0, 2}},
      // horse
      {{S::ellipse, 0, 0, 0.58, 0.27, 0, 0},
       {S::ellipse, -0.68, -0.38, 0.26, 0.13, -35, 0},
       {S::rect, -0.38, 0.42, 0.055, 0.3, 0, 1},
       {S::rect, -0.18, 0.42, 0.055, 0.3, 0, 1},
       {S::rect, 0.22, 0.42, 0.055, 0.3, 0, 1},
       {S::rect, 0.42, 0.42, 0.055, 0.3, 0, 1},
       {S::rect, 0.68, 0.08, 0.04, 0.24, -30, 2}},
  };
  return kArchetypes;
}

Rgb hsv(double h_deg, double s, double v) {
  h_deg = std::fmod(std::fmod(h_deg, 360.0) + 360.0, 360.0);
  const double c = v * s;
  const double hp = h_deg / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = v - c;
  return {r + m, g + m, b + m};
}

// Rotation about the (1,1,1) axis of RGB space.
Rgb rotate_hue(const Rgb& c, double deg) {
  if (deg == 0.0) return c;
  const double a = deg * kDeg, k = 1.0 / 3.0, q = std::sqrt(k);
  const double cs = std::cos(a), sn = std::sin(a);
  const double d = cs + k * (1 - cs), o1 = k * (1 - cs) - q * sn, o2 = k * (1 - cs) + q * sn;
  auto cl = [](double v) { return std::clamp(v, 0.0, 1.0); };
  return {cl(d * c.r + o1 * c.g + o2 * c.b), cl(o2 * c.r + d * c.g + o1 * c.b), cl(o1 * c.r + o2 * c.g + d * c.b)};
}

double normalize_angle(double deg) {
  double a = std::fmod(deg, 360.0);
  return a < 0 ? a + 360.0 : a;
}

double foreshorten(double deg) {
  const double c = std::cos(normalize_angle(deg) * kDeg);
  const double m = std::max(std::abs(c), kMinForeshortening);
  return c < 0 ? -m : m;
}

bool inside(const Part& p, double qx, double qy, double& uy_out) {
  const double vx = qx - p.cx, vy = qy - p.cy;
  const double ca = std::cos(-p.angle * kDeg), sa = std::sin(-p.angle * kDeg);
  const double ux = (ca * vx - sa * vy) / p.sx;
  const double uy = (sa * vx + ca * vy) / p.sy;
  uy_out = uy;
  switch (p.shape) {
    case PartShape::ellipse: return ux * ux + uy * uy <= 1.0;
    case PartShape::rect: return std::abs(ux) <= 1.0 && std::abs(uy) <= 1.0;
    case PartShape::triangle: return uy >= -1.0 && uy <= 1.0 && std::abs(ux) <= (uy + 1.0) / 2.0;
    case PartShape::ring: {
      const double r2 = ux * ux + uy * uy;
      return r2 <= 1.0 && r2 >= 0.36;
    }
  }
  return false;
}

void gaussian_blur(Image& img, double sigma) {
  if (sigma <= 0.0) return;
  const int radius = std::max(1, static_cast<int>(std::ceil(2.5 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0;
  for (int i = -radius; i <= radius; ++i) total += k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= total;
  Image tmp = img;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double s = 0;
        for (int i = -radius; i <= radius; ++i)
          s += k[static_cast<std::size_t>(i + radius)] * img.at(c, y, std::clamp(x + i, 0, img.width - 1));
        tmp.at(c, y, x) = static_cast<float>(s);
      }
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double s = 0;
        for (int i = -radius; i <= radius; ++i)
          s += k[static_cast<std::size_t>(i + radius)] * tmp.at(c, std::clamp(y + i, 0, img.height - 1), x);
        img.at(c, y, x) = static_cast<float>(s);
      }
}

std::uint64_t object_stream(int class_id, int object_id) {
  return (static_cast<std::uint64_t>(class_id) << 32) ^ static_cast<std::uint64_t>(object_id);
}

struct VideoPlan {
  VideoKind kind;
  double phase;
  double background;
  double drift_phase_x, drift_phase_y;
  double hand_phase;
  double cast_phase;
};

data::Manifest render_dataset(const SynthConfig& config, const std::filesystem::path& out_dir, int object_id_offset,
                              std::uint64_t instance_seed, const StyleShift* shift) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images");
  std::vector<data::FrameRecord> records;
  const int frames = config.frames_per_video();
  const double omega = config.angular_velocity();
  auto kinds = rotation_kinds(config.rotation_videos);
  kinds.push_back(VideoKind::hodgepodge);
  int video_id = 0;
  for (int c = 0; c < config.num_classes; ++c) {
    fs::create_directories(out_dir / "images" / ("c" + std::to_string(c)));
    for (int m = 0; m < config.objects_per_class; ++m) {
      const int object_id = m + object_id_offset;
      const ObjectRecipe recipe = make_recipe(c, object_id, instance_seed, shift);
      Rng plan_rng(derive_seed(instance_seed ^ 0x5EED5EEDull, object_stream(c, object_id)));
      for (std::size_t v = 0; v < kinds.size(); ++v, ++video_id) {
        VideoPlan plan{kinds[v], plan_rng.uniform(0.0, 360.0), plan_rng.uniform(0.55, 0.85),
                       plan_rng.uniform(0.0, 1.0), plan_rng.uniform(0.0, 1.0), plan_rng.uniform(0.0, 1.0),
                       plan_rng.uniform(0.0, 1.0)};
        Rng pose_rng(derive_seed(instance_seed ^ 0x4D0D6Eull, static_cast<std::uint64_t>(video_id)));
        for (int k = 0; k < frames; ++k) {
          const double t = k / config.fps;
          View view;
          if (plan.kind == VideoKind::hodgepodge) {
            view = {pose_rng.uniform(0.0, 360.0), pose_rng.uniform(0.0, 360.0), pose_rng.uniform(0.0, 360.0)};
          } else {
            view = rotation_view(plan.kind, plan.phase, omega, t);
          }
          RenderSettings rs;
          rs.image_size = config.image_size;
          const double drift = 0.06 * config.image_size;
          rs.center_dx = drift * std::sin(2 * std::numbers::pi * (0.05 * t + plan.drift_phase_x));
          rs.center_dy = drift * std::sin(2 * std::numbers::pi * (0.04 * t + plan.drift_phase_y));
          if (config.occluder) rs.occluder_phase = std::fmod(plan.hand_phase + 0.02 * t, 1.0);
          rs.background = plan.background;
          rs.hue_cast = kHueCast * std::sin(2 * std::numbers::pi * (t / config.duration + plan.cast_phase));
          rs.noise_seed = derive_seed(derive_seed(instance_seed, static_cast<std::uint64_t>(video_id)),
                                      static_cast<std::uint64_t>(k));
          if (shift) rs.style = *shift;
          RenderedFrame f = render_frame(recipe, view, rs);
          const std::string rel = "images/c" + std::to_string(c) + "/o" + std::to_string(object_id) + "_v" +
                                  std::to_string(v) + "_f" + std::to_string(k) + ".ppm";
          data::write_ppm(f.image, out_dir / rel);
          records.push_back({c, object_id, video_id, plan.kind, t, rel, f.bbox});
        }
      }
    }
  }
  data::Manifest manifest(std::move(records), config.fps, out_dir);
  data::write_manifest(manifest, out_dir / "manifest.jsonl");
  std::ofstream(out_dir / "synth_config.json") << config_to_json(config) << '\n';
  return manifest;
}

}  // namespace

int SynthConfig::frames_per_video() const { return static_cast<int>(std::llround(duration * fps)); }

void SynthConfig::validate() const {
  if (num_classes < 2 || num_classes > kMaxClasses)
    throw ConfigError("num_classes must lie in [2, " + std::to_string(kMaxClasses) + "]");
  if (objects_per_class < 2) throw ConfigError("objects_per_class must be ≥ 2");
  if (rotation_videos < 1 || rotation_videos > kMaxRotationVideos)
    throw ConfigError("rotation_videos must lie in [1, " + std::to_string(kMaxRotationVideos) + "]");
  if (!(fps > 0) || !(duration > 0) || frames_per_video() < 1) throw ConfigError("fps and duration must give ≥ 1 frame");
  if (!(revolutions >= 0)) throw ConfigError("revolutions must be ≥ 0");
  if (image_size < 8) throw ConfigError("image_size must be ≥ 8");
}

SynthConfig SynthConfig::desk() { return {}; }

SynthConfig SynthConfig::paper_shaped() {
  SynthConfig c;
  c.num_classes = 12;
  c.objects_per_class = 30;
  c.rotation_videos = 6;
  c.fps = 1.0;
  c.duration = 20.0;
  return c;
}

std::string to_string(TransferStyle s) {
  switch (s) {
    case TransferStyle::recolor: return "recolor";
    case TransferStyle::background: return "background";
    case TransferStyle::blur: return "blur";
  }
  return "unknown";
}

TransferStyle parse_transfer_style(const std::string& s) {
  if (s == "recolor") return TransferStyle::recolor;
  if (s == "background") return TransferStyle::background;
  if (s == "blur") return TransferStyle::blur;
  throw ConfigError("unknown transfer style \"" + s + "\" (expected recolor, background, or blur)");
}

ObjectRecipe make_recipe(int class_id, int object_id, std::uint64_t seed, const StyleShift* shift) {
  if (class_id < 0 || class_id >= kMaxClasses) throw IndexError("class_id outside the archetype table");
  Rng rng(derive_seed(seed, object_stream(class_id, object_id)));
  ObjectRecipe r;
  r.class_id = class_id;
  r.object_id = object_id;
  r.scale = rng.uniform(0.85, 1.0);
  r.aspect = rng.uniform(0.85, 1.15);
  for (Part p : archetypes()[static_cast<std::size_t>(class_id)]) {
    p.sx *= rng.uniform(0.85, 1.15);
    p.sy *= rng.uniform(0.85, 1.15);
    p.cx += rng.uniform(-0.04, 0.04);
    p.cy += rng.uniform(-0.04, 0.04);
    r.parts.push_back(p);
  }
  const double hue_shift =
      (shift && shift->style == TransferStyle::recolor) ? 180.0 * std::clamp(shift->strength, 0.0, 1.0) : 0.0;
  const double base = kClassHueStep * class_id + rng.uniform(-kHueJitter, kHueJitter);
  for (std::size_t slot = 0; slot < r.palette.size(); ++slot) {
    const double hue = base + kSlotHueOffset[slot % 3] + rng.uniform(-kHueJitter, kHueJitter);
    r.palette[slot] = hsv(hue + hue_shift, rng.uniform(0.6, 0.8), rng.uniform(0.6, 0.85));
  }
  return r;
}

RenderedFrame render_frame(const ObjectRecipe& recipe, const View& view, const RenderSettings& s) {
  const int n = s.image_size;
  RenderedFrame out;
  out.image = Image(n, n);
  out.mask.assign(static_cast<std::size_t>(n * n), 0);

  // Background with per-pixel noise and optional texture.
  Rng noise(s.noise_seed);
  const double tex = (s.style && s.style->style == TransferStyle::background) ? 0.25 * s.style->strength : 0.0;
  const double tex_angle = noise.uniform(0.0, std::numbers::pi);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double stripe = tex * std::sin(2 * std::numbers::pi * (x * std::cos(tex_angle) + y * std::sin(tex_angle)) / 6.0);
      for (int c = 0; c < 3; ++c)
        out.image.at(c, y, x) = static_cast<float>(
            std::clamp(s.background + stripe + noise.uniform(-s.noise_amplitude, s.noise_amplitude), 0.0, 1.0));
    }

  const double unit = recipe.scale * n * 0.33;
  const double cx = n / 2.0 + s.center_dx, cy = n / 2.0 + s.center_dy;
  const double az = normalize_angle(view.angle_z) * kDeg;
  const double ca = std::cos(az), sa = std::sin(az);
  const double fx = foreshorten(view.angle_y) * recipe.aspect;  // rotation about y squeezes x
  const double fy = foreshorten(view.angle_x);                  // rotation about x squeezes y
  const bool back_face = (fx < 0) != (fy < 0);

  std::array<Rgb, 3> palette = recipe.palette;
  for (auto& col : palette) col = rotate_hue(col, s.hue_cast);

  constexpr int kSub = 2;
  std::vector<double> acc(3);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      int hits = 0;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int sy = 0; sy < kSub; ++sy)
        for (int sx = 0; sx < kSub; ++sx) {
          const double px = x + (sx + 0.5) / kSub - cx;
          const double py = y + (sy + 0.5) / kSub - cy;
          // Undo in-plane rotation, then foreshortening, then scale.
          const double rx = (ca * px + sa * py) / unit;
          const double ry = (-sa * px + ca * py) / unit;
          const double qx = rx / fx, qy = ry / fy;
          if (qx * qx + qy * qy > 4.0) continue;
          for (std::size_t i = recipe.parts.size(); i-- > 0;) {
            double uy = 0;
            if (!inside(recipe.parts[i], qx, qy, uy)) continue;
            const Rgb& col = palette[static_cast<std::size_t>(recipe.parts[i].slot)];
            const double shade = (1.0 - 0.12 * std::clamp(uy, -1.0, 1.0)) * (back_face ? 0.7 : 1.0);
            acc[0] += col.r * shade;
            acc[1] += col.g * shade;
            acc[2] += col.b * shade;
            ++hits;
            break;
          }
        }
      if (hits == 0) continue;
      out.mask[static_cast<std::size_t>(y * n + x)] = 1;
      const double cover = static_cast<double>(hits) / (kSub * kSub);
      for (int c = 0; c < 3; ++c) {
        const double obj = acc[static_cast<std::size_t>(c)] / hits;
        const double v = cover * obj + (1.0 - cover) * out.image.at(c, y, x);
        out.image.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }

  int x0 = n, y0 = n, x1 = -1, y1 = -1;
  std::size_t object_pixels = 0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if (out.mask[static_cast<std::size_t>(y * n + x)]) {
        x0 = std::min(x0, x), x1 = std::max(x1, x);
        y0 = std::min(y0, y), y1 = std::max(y1, y);
        ++object_pixels;
      }
  if (object_pixels == 0) {
    out.bbox = {0, 0, static_cast<double>(n), static_cast<double>(n)};
  } else {
    out.bbox = {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1 - x0 + 1),
                static_cast<double>(y1 - y0 + 1)};
  }

  // Hand: a finger-like band entering from direction φ toward the object,
  // stopped early enough to hide at most kMaxOcclusion of the object.
  if (s.occluder_phase && object_pixels > 0) {
    const double phi = 2 * std::numbers::pi * *s.occluder_phase;
    const double dx = std::cos(phi), dy = std::sin(phi);
    const double half_width = 0.28 * unit;
    const double ocx = x0 + (x1 - x0 + 1) / 2.0, ocy = y0 + (y1 - y0 + 1) / 2.0;
    auto covered = [&](int x, int y, double reach) {
      const double px = x + 0.5 - ocx, py = y + 0.5 - ocy;
      return px * dx + py * dy >= reach && std::abs(-px * dy + py * dx) <= half_width;
    };
    double reach = 0.35 * unit;
    std::size_t hidden = 0;
    for (int iter = 0; iter < 4 * n; ++iter, reach += 1.0) {
      hidden = 0;
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          if (out.mask[static_cast<std::size_t>(y * n + x)] && covered(x, y, reach)) ++hidden;
      if (static_cast<double>(hidden) <= kMaxOcclusion * static_cast<double>(object_pixels)) break;
    }
    out.occluded_fraction = static_cast<double>(hidden) / static_cast<double>(object_pixels);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        if (!covered(x, y, reach)) continue;
        const double along = (x + 0.5 - ocx) * dx + (y + 0.5 - ocy) * dy;
        const double shade = 0.92 + 0.08 * std::cos(along * 0.5);
        out.image.at(0, y, x) = static_cast<float>(kSkin.r * shade);
        out.image.at(1, y, x) = static_cast<float>(kSkin.g * shade);
        out.image.at(2, y, x) = static_cast<float>(kSkin.b * shade);
      }
  }

  if (s.style && s.style->style == TransferStyle::blur) gaussian_blur(out.image, 1.2 * s.style->strength);
  return out;
}

std::vector<VideoKind> rotation_kinds(int rotation_videos) {
  static const VideoKind kOrder[] = {VideoKind::rot_z_pos, VideoKind::rot_x_pos, VideoKind::rot_y_pos,
                                     VideoKind::rot_z_neg, VideoKind::rot_x_neg, VideoKind::rot_y_neg};
  if (rotation_videos < 0 || rotation_videos > kMaxRotationVideos) throw ConfigError("rotation_videos out of range");
  return {kOrder, kOrder + rotation_videos};
}

View rotation_view(VideoKind kind, double phase, double angular_velocity, double t) {
  const double fwd = normalize_angle(phase + angular_velocity * t);
  const double back = normalize_angle(phase - angular_velocity * t);
  switch (kind) {
    case VideoKind::rot_z_pos: return {fwd, 0, 0};
    case VideoKind::rot_z_neg: return {back, 0, 0};
    case VideoKind::rot_x_pos: return {0, fwd, 0};
    case VideoKind::rot_x_neg: return {0, back, 0};
    case VideoKind::rot_y_pos: return {0, 0, fwd};
    case VideoKind::rot_y_neg: return {0, 0, back};
    case VideoKind::hodgepodge: break;
  }
  throw ConfigError("rotation_view: hodgepodge has no rotation schedule");
}

double gap_angle(const SynthConfig& config, double gap_seconds) {
  return static_cast<double>(std::lround(gap_seconds * config.fps)) / config.fps * config.angular_velocity();
}

data::Manifest generate(const SynthConfig& config, const std::filesystem::path& out_dir) {
  return render_dataset(config, out_dir, 0, config.seed, nullptr);
}

data::Manifest generate_transfer(const SynthConfig& config, const StyleShift& shift,
                                 const std::filesystem::path& out_dir) {
  if (!(shift.strength >= 0.0 && shift.strength <= 1.0)) throw ConfigError("style strength must lie in [0, 1]");
  return render_dataset(config, out_dir, config.objects_per_class, derive_seed(config.seed, 0x7A4E5FE4ull), &shift);
}

std::string config_to_json(const SynthConfig& c) {
  nlohmann::json j = {{"num_classes", c.num_classes}, {"objects_per_class", c.objects_per_class},
                      {"rotation_videos", c.rotation_videos}, {"fps", c.fps}, {"duration", c.duration},
                      {"revolutions", c.revolutions}, {"image_size", c.image_size}, {"occluder", c.occluder},
                      {"seed", c.seed}};
  return j.dump(2);
}

namespace {

void read_synth_fields(const nlohmann::json& j, SynthConfig& c) {
  if (!j.is_object()) throw ConfigError("synth config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k == "num_classes") c.num_classes = v.get<int>();
    else if (k == "objects_per_class") c.objects_per_class = v.get<int>();
    else if (k == "rotation_videos") c.rotation_videos = v.get<int>();
    else if (k == "fps") c.fps = v.get<double>();
    else if (k == "duration") c.duration = v.get<double>();
    else if (k == "revolutions") c.revolutions = v.get<double>();
    else if (k == "image_size") c.image_size = v.get<int>();
    else if (k == "occluder") c.occluder = v.get<bool>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else throw ConfigError("synth config: unknown key \"" + k + "\"");
  }
}

}  // namespace

SynthConfig config_from_json(const std::string& text) {
  SynthConfig c;
  try {
    read_synth_fields(nlohmann::json::parse(text), c);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace mvc::synth
