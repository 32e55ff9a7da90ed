#pragma once

// Straight-from-the-formula reference implementations.

#include <cmath>
#include <cstddef>
#include <vector>

#include "mvc/dataio.hpp"
#include "mvc/numcore.hpp"
#include "mvc/sampler.hpp"
#include "mvc/rng.hpp"

namespace mvc::testing {

// −log( exp(z_i·z_j/τ) / Σ_{k≠i} exp(z_i·z_k/τ) ), no stabilization.
inline double ntxent_pair_oracle(const num::Array& z, std::size_t i, std::size_t j, double tau) {
  const std::size_t n = z.dim(0), d = z.dim(1);
  auto dot = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t t = 0; t < d; ++t) s += z.at(a, t) * z.at(b, t);
    return s;
  };
  double denom = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (k != i) denom += std::exp(dot(i, k) / tau);
  return -std::log(std::exp(dot(i, j) / tau) / denom);
}

inline double ntxent_batch_oracle(const num::Array& z, double tau) {
  const std::size_t pairs = z.dim(0) / 2;
  double total = 0;
  for (std::size_t k = 0; k < pairs; ++k)
    total += ntxent_pair_oracle(z, 2 * k, 2 * k + 1, tau) + ntxent_pair_oracle(z, 2 * k + 1, 2 * k, tau);
  return total / (2.0 * static_cast<double>(pairs));
}

// Rows drawn from a Gaussian (Box–Muller) and normalized.
inline num::Array random_unit_rows(std::size_t rows, std::size_t dim, Rng& rng) {
  num::Array z({rows, dim});
  for (std::size_t r = 0; r < rows; ++r) {
    double n = 0;
    for (std::size_t t = 0; t < dim; ++t) {
      z.at(r, t) = std::sqrt(-2.0 * std::log(1.0 - rng.uniform())) * std::cos(2.0 * M_PI * rng.uniform());
      n += z.at(r, t) * z.at(r, t);
    }
    n = std::sqrt(n);
    for (std::size_t t = 0; t < dim; ++t) z.at(r, t) /= n;
  }
  return z;
}

// Pearson statistic against equal expected counts.
inline double chi_square_uniform(const std::vector<std::size_t>& counts) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  const double expect = total / static_cast<double>(counts.size());
  double chi = 0;
  for (auto c : counts) chi += (static_cast<double>(c) - expect) * (static_cast<double>(c) - expect) / expect;
  return chi;
}

// Upper α = 0.01 critical value of χ² with k degrees of freedom
// (Wilson–Hilferty approximation).
inline double chi_square_critical_01(std::size_t k) {
  const double z = 2.3263478740408408;  // Φ⁻¹(0.99)
  const double kk = static_cast<double>(k);
  const double t = 1.0 - 2.0 / (9.0 * kk) + z * std::sqrt(2.0 / (9.0 * kk));
  return kk * t * t * t;
}

// The pairing constraint restated from record fields alone.
inline bool pair_allowed(const data::FrameRecord& a, const data::FrameRecord& b, const sampler::PairingPolicy& p,
                         double fps) {
  using sampler::Setting;
  if (p.rotation_only && (!data::is_rotation(a.kind) || !data::is_rotation(b.kind))) return false;
  const bool same_frame = a.video_id == b.video_id && a.t == b.t;
  switch (p.setting) {
    case Setting::self:
      return same_frame;
    case Setting::transform: {
      const long offset = std::lround(p.gap->gap_seconds * fps);
      if (offset == 0) return same_frame;
      if (a.video_id != b.video_id) return false;
      const long d = std::labs(std::lround(a.t * fps) - std::lround(b.t * fps));
      if (std::isinf(p.gap->gap_seconds)) return d > 0;
      return p.gap->mode == sampler::GapSpec::Mode::fixed ? d == offset : (d > 0 && d <= offset);
    }
    case Setting::object:
      return !same_frame && a.class_id == b.class_id && a.object_id == b.object_id;
    case Setting::class_level:
      return !same_frame && a.class_id == b.class_id;
  }
  return false;
}

}  // namespace mvc::testing
