#pragma once

// NT-Xent loss over a batch of 2N embeddings laid out as consecutive
// positive pairs (2k, 2k+1).

#include <cstddef>

#include "mvc/numcore.hpp"

namespace mvc::contrastive {

struct EmbeddingBatch {
  num::Array z;  // [2N×d], unit-norm rows
  double temperature = 0.5;

  std::size_t pairs() const { return z.rank() == 2 ? z.dim(0) / 2 : 0; }
  // Throws ConfigError / DimensionError when the invariants do not hold.
  void validate() const;
};

inline constexpr double kDefaultTemperature = 0.5;

// Index of the positive partner of row i.
constexpr std::size_t partner(std::size_t i) { return i ^ 1u; }

// S[i][j] = z_i · z_j.
num::Array pairwise_sim(const EmbeddingBatch& batch);

// l(i, j) = −log( exp(S_ij/τ) / Σ_{k≠i} exp(S_ik/τ) ).
double ntxent_pair_loss(const EmbeddingBatch& batch, std::size_t i, std::size_t j);

// (1/2N) Σ_k [ l(2k, 2k+1) + l(2k+1, 2k) ].
double ntxent_batch_loss(const EmbeddingBatch& batch);

// Taped batch loss; z[2N×d] is expected to be unit-norm (e.g. model::project).
num::Var ntxent_loss(const num::Var& z, double temperature);

}  // namespace mvc::contrastive
