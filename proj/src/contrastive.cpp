#include "mvc/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mvc/errors.hpp"

namespace mvc::contrastive {

using num::Array;

void EmbeddingBatch::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (z.rank() != 2 || z.dim(0) < 2 || z.dim(0) % 2 != 0)
    throw DimensionError("embedding batch must be [2N×d] with N ≥ 1, got " + num::shape_string(z.shape()));
  const std::size_t d = z.dim(1);
  for (std::size_t r = 0; r < z.dim(0); ++r) {
    double ss = 0.0;
    for (std::size_t c = 0; c < d; ++c) ss += z.at(r, c) * z.at(r, c);
    if (std::abs(std::sqrt(ss) - 1.0) > 1e-8)
      throw ConfigError("embedding row " + std::to_string(r) + " is not unit-norm");
  }
}

Array pairwise_sim(const EmbeddingBatch& batch) {
  batch.validate();
  num::Tape t;
  const auto z = t.constant(batch.z);
  Array s = num::matmul(z, num::transpose(z)).value();
  for (std::size_t i = 0; i < s.dim(0); ++i)
    for (std::size_t j = 0; j < i; ++j) s.at(i, j) = s.at(j, i);
  return s;
}

double ntxent_pair_loss(const EmbeddingBatch& batch, std::size_t i, std::size_t j) {
  const Array s = pairwise_sim(batch);
  const std::size_t n = s.dim(0);
  if (i >= n || j >= n) throw IndexError("pair index outside [0, 2N)");
  if (i == j) throw IndexError("invalid pair: i == j == " + std::to_string(i));
  const double inv_tau = 1.0 / batch.temperature;
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k)
    if (k != i) mx = std::max(mx, s.at(i, k) * inv_tau);
  double z = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (k != i) z += std::exp(s.at(i, k) * inv_tau - mx);
  return mx + std::log(z) - s.at(i, j) * inv_tau;
}

double ntxent_batch_loss(const EmbeddingBatch& batch) {
  batch.validate();
  num::Tape t;
  return ntxent_loss(t.constant(batch.z), batch.temperature).value().item();
}

num::Var ntxent_loss(const num::Var& z, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  const auto& shape = z.shape();
  if (shape.size() != 2 || shape[0] < 2 || shape[0] % 2 != 0)
    throw DimensionError("ntxent_loss: expected [2N×d], got " + num::shape_string(shape));
  std::vector<int> labels(shape[0]);
  for (std::size_t r = 0; r < labels.size(); ++r) labels[r] = static_cast<int>(partner(r));
  const auto sim = num::matmul(z, num::transpose(z));
  return num::cross_entropy_rows(num::scale(sim, 1.0 / temperature), labels, /*exclude_diagonal=*/true);
}

}  // namespace mvc::contrastive
