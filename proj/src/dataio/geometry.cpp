#include <algorithm>
#include <cmath>

#include "mvc/dataio.hpp"
#include "mvc/errors.hpp"

namespace mvc::data {

SquareCrop square_crop(const BBox& box, double image_w, double image_h) {
  if (!(box.w > 0 && box.h > 0)) throw ConfigError("square_crop: box must have positive size");
  if (box.x >= image_w || box.y >= image_h || box.x + box.w <= 0 || box.y + box.h <= 0)
    throw ConfigError("square_crop: box does not intersect the image");
  SquareCrop out;
  double side = std::max(box.w, box.h);
  const double limit = std::min(image_w, image_h);
  if (side > limit) {
    side = limit;
    out.degraded = true;
  }
  // Only the shorter axis is recentered; the longer one keeps its origin
  // unless the side was clamped.
  double x = box.w == side ? box.x : box.x + box.w / 2.0 - side / 2.0;
  double y = box.h == side ? box.y : box.y + box.h / 2.0 - side / 2.0;
  x = std::clamp(x, 0.0, image_w - side);
  y = std::clamp(y, 0.0, image_h - side);
  out.box = {x, y, side, side};
  return out;
}

BBox interpolate_bbox(const BBox& b1, double t1, const BBox& b2, double t2, double t) {
  if (!(t1 < t2)) throw ConfigError("interpolate_bbox: requires t1 < t2");
  if (!(t > t1 && t <= t2)) throw IndexError("interpolate_bbox: t outside (t1, t2]");
  if (t == t2) return b2;
  const double a = (t - t1) / (t2 - t1);
  auto lerp = [a](double u, double v) { return u + a * (v - u); };
  return {lerp(b1.x, b2.x), lerp(b1.y, b2.y), lerp(b1.w, b2.w), lerp(b1.h, b2.h)};
}

std::vector<std::optional<BBox>> interpolate_track(std::span<const TimedBox> annotations,
                                                   std::span<const double> times) {
  for (std::size_t i = 1; i < annotations.size(); ++i)
    if (!(annotations[i - 1].t < annotations[i].t)) throw ConfigError("interpolate_track: annotations not sorted");
  std::vector<std::optional<BBox>> out;
  out.reserve(times.size());
  for (double t : times) {
    if (annotations.empty() || t < annotations.front().t || t > annotations.back().t) {
      out.emplace_back();
      continue;
    }
    if (t == annotations.front().t) {
      out.emplace_back(annotations.front().box);
      continue;
    }
    auto hi = std::lower_bound(annotations.begin(), annotations.end(), t,
                               [](const TimedBox& a, double v) { return a.t < v; });
    const auto& b = *hi;
    const auto& a = *(hi - 1);
    out.emplace_back(interpolate_bbox(a.box, a.t, b.box, b.t, t));
  }
  return out;
}

}  // namespace mvc::data
