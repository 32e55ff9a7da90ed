#pragma once

// Positive-pair selection: which frame is paired with an anchor, and how a
// batch of pairs is assembled into network input.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvc/augment.hpp"
#include "mvc/dataio.hpp"
#include "mvc/numcore.hpp"
#include "mvc/rng.hpp"

namespace mvc::sampler {

struct GapSpec {
  enum class Mode { fixed, range };
  Mode mode = Mode::range;
  double gap_seconds = 0.0;  // +inf: any other frame of the video
  double fps = 1.0;

  // round(gap · fps); meaningless for an unbounded gap.
  long frame_offset() const;
  bool unbounded() const;
  bool is_zero() const { return frame_offset() == 0 && !unbounded(); }
  void validate() const;

  static GapSpec fixed(double gap_seconds, double fps) { return {Mode::fixed, gap_seconds, fps}; }
  static GapSpec range(double gap_seconds, double fps) { return {Mode::range, gap_seconds, fps}; }
  // Any other frame of the same video.
  static GapSpec any(double fps);
};

std::string to_string(GapSpec::Mode mode);
GapSpec::Mode parse_gap_mode(const std::string& s);

enum class Setting { self, transform, object, class_level };

std::string to_string(Setting s);
Setting parse_setting(const std::string& s);

struct PairingPolicy {
  Setting setting = Setting::self;
  std::optional<GapSpec> gap;  // required for transform
  bool rotation_only = false;
  void validate() const;
};

// Record indices of every frame the policy allows as the anchor's partner.
std::vector<std::size_t> valid_partners(std::size_t anchor, const data::Manifest& manifest,
                                        const PairingPolicy& policy);

// Uniform draw from valid_partners(); nullopt signals that the anchor has no
// partner and should be resampled.
std::optional<std::size_t> sample_partner(std::size_t anchor, const data::Manifest& manifest,
                                          const PairingPolicy& policy, Rng& rng);

// Fixed gap grids: fps 1 → 0..10 s in 2 s steps; fps 3 → 0..3.33 s in
// two-frame steps, rounded to two decimals.
std::vector<double> gap_grid(double fps);

/// Decoded square crops for manifest frames, loaded lazily and cached.
class FrameSource {
 public:
  explicit FrameSource(const data::Manifest& manifest) : manifest_(&manifest), cache_(manifest.size()) {}
  // Square-cropped region of frame i (square_crop of its bbox).
  const data::Image& crop(std::size_t i);
  const data::Manifest& manifest() const { return *manifest_; }

 private:
  const data::Manifest* manifest_;
  std::vector<std::optional<data::Image>> cache_;
};

struct PairBatch {
  num::Array images;                    // [2N×3×H×W], rows (2k, 2k+1) positive
  std::vector<std::size_t> provenance;  // manifest record index per row
  std::size_t pairs() const { return provenance.size() / 2; }
};

// Pairs each anchor in order (anchors without a partner are skipped) until
// `pairs` pairs exist or the list is exhausted; then augments all images.
PairBatch build_batch_from_anchors(FrameSource& frames, std::span<const std::size_t> anchors,
                                   const PairingPolicy& policy, std::size_t pairs, Rng& rng,
                                   const augment::AugmentConfig& augment);

// N anchors drawn without replacement from the (policy-filtered) manifest.
PairBatch build_batch(FrameSource& frames, const PairingPolicy& policy, std::size_t n_pairs, Rng& rng,
                      const augment::AugmentConfig& augment);

// Copies images into rows of a [B×3×H×W] array.
num::Array stack_images(std::span<const data::Image> images);

}  // namespace mvc::sampler
