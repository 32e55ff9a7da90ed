#include "mvc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvc/errors.hpp"

namespace mvc::sampler {

using data::Manifest;

long GapSpec::frame_offset() const { return unbounded() ? -1 : std::lround(gap_seconds * fps); }

bool GapSpec::unbounded() const { return std::isinf(gap_seconds); }

GapSpec GapSpec::any(double fps) { return {Mode::range, std::numeric_limits<double>::infinity(), fps}; }

void GapSpec::validate() const {
  if (!(fps > 0.0)) throw ConfigError("gap fps must be > 0");
  if (!(gap_seconds >= 0.0)) throw ConfigError("gap must be ≥ 0 seconds");
  if (unbounded()) {
    if (mode != Mode::range) throw ConfigError("an unbounded gap requires range mode");
    return;
  }
  const double frames = gap_seconds * fps;
  // Grid values are reported rounded to 0.01 s, so allow that slack.
  if (std::abs(frames - std::round(frames)) > 0.05)
    throw ConfigError("gap " + std::to_string(gap_seconds) + " s is not a multiple of 1/fps");
}

std::string to_string(GapSpec::Mode mode) { return mode == GapSpec::Mode::fixed ? "fixed" : "range"; }

GapSpec::Mode parse_gap_mode(const std::string& s) {
  if (s == "fixed") return GapSpec::Mode::fixed;
  if (s == "range") return GapSpec::Mode::range;
  throw ConfigError("unknown gap mode \"" + s + "\" (expected fixed or range)");
}

std::string to_string(Setting s) {
  switch (s) {
    case Setting::self: return "self";
    case Setting::transform: return "transform";
    case Setting::object: return "object";
    case Setting::class_level: return "class";
  }
  return "unknown";
}

Setting parse_setting(const std::string& s) {
  if (s == "self") return Setting::self;
  if (s == "transform") return Setting::transform;
  if (s == "object") return Setting::object;
  if (s == "class") return Setting::class_level;
  throw ConfigError("unknown pairing setting \"" + s + "\"");
}

void PairingPolicy::validate() const {
  if (setting == Setting::transform && !gap) throw ConfigError("transform pairing requires a gap specification");
  if (gap) gap->validate();
}

std::vector<std::size_t> valid_partners(std::size_t anchor, const Manifest& manifest, const PairingPolicy& policy) {
  policy.validate();
  if (anchor >= manifest.size()) throw IndexError("anchor outside manifest");
  const auto& a = manifest[anchor];
  if (policy.rotation_only && !data::is_rotation(a.kind)) return {};
  auto admissible = [&](std::size_t i) {
    return i != anchor && (!policy.rotation_only || data::is_rotation(manifest[i].kind));
  };
  std::vector<std::size_t> out;
  switch (policy.setting) {
    case Setting::self:
      out.push_back(anchor);
      break;
    case Setting::transform: {
      const GapSpec& gap = *policy.gap;
      if (gap.is_zero()) {
        out.push_back(anchor);
        break;
      }
      const long fa = manifest.frame_index(anchor);
      const long off = gap.frame_offset();
      for (std::size_t i : manifest.video_frames(a.video_id)) {
        if (!admissible(i)) continue;
        const long d = std::labs(manifest.frame_index(i) - fa);
        const bool ok = gap.unbounded() ? d > 0
                        : gap.mode == GapSpec::Mode::fixed ? d == off
                                                           : (d > 0 && d <= off);
        if (ok) out.push_back(i);
      }
      break;
    }
    case Setting::object:
      for (std::size_t i : manifest.object_frames({a.class_id, a.object_id}))
        if (admissible(i)) out.push_back(i);
      break;
    case Setting::class_level:
      for (std::size_t i : manifest.class_frames(a.class_id))
        if (admissible(i)) out.push_back(i);
      break;
  }
  return out;
}

std::optional<std::size_t> sample_partner(std::size_t anchor, const Manifest& manifest, const PairingPolicy& policy,
                                          Rng& rng) {
  const auto candidates = valid_partners(anchor, manifest, policy);
  if (candidates.empty()) return std::nullopt;
  return candidates[static_cast<std::size_t>(rng.below(candidates.size()))];
}

std::vector<double> gap_grid(double fps) {
  if (fps == 1.0) return {0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
  if (fps == 3.0) {
    std::vector<double> out;
    for (int k = 0; k <= 5; ++k) out.push_back(std::round(200.0 * k / 3.0) / 100.0);
    return out;
  }
  throw ConfigError("gap grids exist only for fps 1 and 3");
}

const data::Image& FrameSource::crop(std::size_t i) {
  if (i >= cache_.size()) throw IndexError("frame index outside manifest");
  if (!cache_[i]) {
    const data::Image full = data::read_image(manifest_->image_path(i));
    const auto sq = data::square_crop((*manifest_)[i].bbox, full.width, full.height);
    cache_[i] = data::extract_region(full, sq.box);
  }
  return *cache_[i];
}

num::Array stack_images(std::span<const data::Image> images) {
  if (images.empty()) throw DimensionError("stack_images: no images");
  const auto h = static_cast<std::size_t>(images[0].height), w = static_cast<std::size_t>(images[0].width);
  num::Array out({images.size(), 3, h, w});
  double* dst = out.data();
  for (const auto& img : images) {
    if (static_cast<std::size_t>(img.height) != h || static_cast<std::size_t>(img.width) != w)
      throw DimensionError("stack_images: images differ in size");
    for (float v : img.data) *dst++ = v;
  }
  return out;
}

PairBatch build_batch_from_anchors(FrameSource& frames, std::span<const std::size_t> anchors,
                                   const PairingPolicy& policy, std::size_t pairs, Rng& rng,
                                   const augment::AugmentConfig& augment) {
  const Manifest& m = frames.manifest();
  PairBatch batch;
  for (std::size_t a : anchors) {
    if (batch.provenance.size() / 2 == pairs) break;
    const auto p = sample_partner(a, m, policy, rng);
    if (!p) continue;
    batch.provenance.push_back(a);
    batch.provenance.push_back(*p);
  }
  if (batch.provenance.empty()) throw ConfigError("build_batch: no anchor has a valid partner");
  std::vector<data::Image> imgs;
  imgs.reserve(batch.provenance.size());
  for (std::size_t i : batch.provenance) imgs.push_back(augment::apply(frames.crop(i), augment, rng));
  batch.images = stack_images(imgs);
  return batch;
}

PairBatch build_batch(FrameSource& frames, const PairingPolicy& policy, std::size_t n_pairs, Rng& rng,
                      const augment::AugmentConfig& augment) {
  const Manifest& m = frames.manifest();
  if (n_pairs == 0) throw ConfigError("build_batch: need at least one pair");
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!policy.rotation_only || data::is_rotation(m[i].kind)) pool.push_back(i);
  if (pool.size() < n_pairs)
    throw ConfigError("build_batch: manifest has " + std::to_string(pool.size()) + " eligible frames, fewer than " +
                      std::to_string(n_pairs) + " anchors");
  rng.shuffle(pool);
  PairBatch b = build_batch_from_anchors(frames, pool, policy, n_pairs, rng, augment);
  if (b.pairs() < n_pairs) throw ConfigError("build_batch: too few anchors with valid partners");
  return b;
}

}  // namespace mvc::sampler
