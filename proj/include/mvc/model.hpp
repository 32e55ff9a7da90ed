#pragma once

// Convolutional backbone, two-layer projection head, and linear classifier.

#include <cstdint>
#include <string>
#include <vector>

#include "mvc/numcore.hpp"

namespace mvc::model {

struct ConvStage {
  int out_channels = 16;
  int kernel = 3;
  int stride = 1;
};

struct BackboneSpec {
  std::vector<ConvStage> stages;
  int input_size = 32;
  int in_channels = 3;
  // Per-channel normalization with batch statistics after each conv. Makes
  // embeddings depend on batch composition, hence off by default.
  bool batch_norm = false;

  int feature_dim() const { return stages.empty() ? 0 : stages.back().out_channels; }
  // Output side length of each stage for the configured input size.
  std::vector<int> spatial_sizes() const;
  void validate() const;

  // 3 stride-2 stages, 32×32 input, 64 features.
  static BackboneSpec desk();
};

struct ProjectionSpec {
  int hidden_dim = 64;
  int out_dim = 32;
  void validate() const;
};

struct ClassifierSpec {
  int num_classes = 2;
};

inline constexpr double kInputCenter = 0.5;

inline const std::string kBackbonePrefix = "backbone.";
inline const std::string kProjectionPrefix = "projection.";
inline const std::string kClassifierPrefix = "classifier.";

// He-style uniform weights U(±√(6/fan_in)), zero biases. Deterministic in seed.
num::ParamStore init_model(const BackboneSpec& backbone, const ProjectionSpec& proj, std::uint64_t seed);

// Adds (or replaces) a zero-initialized linear classifier feature_dim → C.
void attach_classifier(num::ParamStore& store, int feature_dim, const ClassifierSpec& spec);

// images[B×C×H×W] → features[B×feature_dim]. Taped versions bind parameters
// from the store so backward() writes their gradients.
num::Var embed(num::Tape& tape, num::ParamStore& store, const BackboneSpec& spec, const num::Var& images);
// features[B×F] → unit-norm rows [B×d].
num::Var project(num::Tape& tape, num::ParamStore& store, const num::Var& features);
// features[B×F] → logits[B×C].
num::Var classify(num::Tape& tape, num::ParamStore& store, const num::Var& features);

// Gradient-free versions for evaluation.
num::Array embed(const num::ParamStore& store, const BackboneSpec& spec, const num::Array& images);
num::Array project(const num::ParamStore& store, const num::Array& features);
num::Array classify(const num::ParamStore& store, const num::Array& features);

// Checks that a store holds backbone/projection parameters shaped for spec.
void check_compatible(const num::ParamStore& store, const BackboneSpec& backbone, const ProjectionSpec& proj);

}  // namespace mvc::model
