#include "mvc/model.hpp"

#include <cmath>

#include "mvc/errors.hpp"
#include "mvc/rng.hpp"

namespace mvc::model {

using num::Array;
using num::ParamStore;
using num::Tape;
using num::Var;

namespace {

std::string stage_name(std::size_t i) { return kBackbonePrefix + "conv" + std::to_string(i); }

Array he_uniform(num::Shape shape, std::size_t fan_in, std::uint64_t seed) {
  Array a(std::move(shape));
  Rng rng(seed);
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : a.values()) v = rng.uniform(-bound, bound);
  return a;
}

// Shared forward definition; `param` yields a Var for a parameter name.
template <typename ParamFn>
Var backbone_forward(const BackboneSpec& spec, Var x, ParamFn&& param) {
  // Pixels in [0, 1] are centered before the first conv.
  x = num::add_channel_bias(x, x.tape().constant(Array({static_cast<std::size_t>(spec.in_channels)}, -kInputCenter)));
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const auto& st = spec.stages[i];
    x = num::conv2d(x, param(stage_name(i) + ".weight"), st.stride, st.kernel / 2);
    if (spec.batch_norm)
      x = num::channel_normalize(x, param(stage_name(i) + ".gamma"), param(stage_name(i) + ".beta"));
    else
      x = num::add_channel_bias(x, param(stage_name(i) + ".bias"));
    x = num::relu(x);
  }
  return num::global_mean_pool(x);
}

template <typename ParamFn>
Var projection_forward(Var f, ParamFn&& param) {
  Var h = num::relu(num::add_row_bias(num::matmul(f, param(kProjectionPrefix + "fc1.weight")),
                                      param(kProjectionPrefix + "fc1.bias")));
  Var z = num::add_row_bias(num::matmul(h, param(kProjectionPrefix + "fc2.weight")),
                            param(kProjectionPrefix + "fc2.bias"));
  return num::l2_normalize(z);
}

template <typename ParamFn>
Var classifier_forward(Var f, ParamFn&& param) {
  return num::add_row_bias(num::matmul(f, param(kClassifierPrefix + "weight")), param(kClassifierPrefix + "bias"));
}

void check_images(const BackboneSpec& spec, const Array& images) {
  const auto s = static_cast<std::size_t>(spec.input_size);
  if (images.rank() != 4 || images.dim(1) != static_cast<std::size_t>(spec.in_channels) || images.dim(2) != s ||
      images.dim(3) != s)
    throw DimensionError("embed: expected B×" + std::to_string(spec.in_channels) + "×" + std::to_string(s) + "×" +
                         std::to_string(s) + " images, got " + num::shape_string(images.shape()));
}

void check_features(const ParamStore& store, const std::string& weight, const Array& features) {
  const auto& w = store.at(weight).value;
  if (features.rank() != 2 || features.dim(1) != w.dim(0))
    throw DimensionError("features " + num::shape_string(features.shape()) + " do not match " + weight + " " +
                         num::shape_string(w.shape()));
}

}  // namespace

std::vector<int> BackboneSpec::spatial_sizes() const {
  std::vector<int> out;
  int s = input_size;
  for (const auto& st : stages) {
    const int pad = st.kernel / 2;
    s = (s + 2 * pad - st.kernel) / st.stride + 1;
    out.push_back(s);
  }
  return out;
}

void BackboneSpec::validate() const {
  if (stages.size() < 2) throw ConfigError("backbone needs at least 2 conv stages");
  if (feature_dim() < 8) throw ConfigError("backbone feature_dim must be ≥ 8");
  if (input_size < 1 || in_channels < 1) throw ConfigError("backbone input size and channels must be positive");
  int s = input_size;
  for (const auto& st : stages) {
    if (st.out_channels < 1 || st.kernel < 1 || st.stride < 1)
      throw ConfigError("conv stage fields must be positive");
    const int pad = st.kernel / 2;
    if (st.kernel > s + 2 * pad) throw ConfigError("conv stage kernel exceeds its padded input");
    s = (s + 2 * pad - st.kernel) / st.stride + 1;
  }
}

BackboneSpec BackboneSpec::desk() {
  BackboneSpec b;
  b.stages = {{16, 3, 2}, {32, 3, 2}, {64, 3, 2}};
  b.input_size = 32;
  return b;
}

void ProjectionSpec::validate() const {
  if (hidden_dim < 1 || out_dim < 1) throw ConfigError("projection dimensions must be positive");
}

ParamStore init_model(const BackboneSpec& backbone, const ProjectionSpec& proj, std::uint64_t seed) {
  backbone.validate();
  proj.validate();
  ParamStore store;
  std::uint64_t stream = 0;
  auto sz = [](int v) { return static_cast<std::size_t>(v); };
  int cin = backbone.in_channels;
  for (std::size_t i = 0; i < backbone.stages.size(); ++i) {
    const auto& st = backbone.stages[i];
    const std::size_t fan_in = sz(cin * st.kernel * st.kernel);
    store.add(stage_name(i) + ".weight",
              he_uniform({sz(st.out_channels), sz(cin), sz(st.kernel), sz(st.kernel)}, fan_in, derive_seed(seed, stream++)));
    if (backbone.batch_norm) {
      store.add(stage_name(i) + ".gamma", Array({sz(st.out_channels)}, 1.0));
      store.add(stage_name(i) + ".beta", Array({sz(st.out_channels)}, 0.0));
    } else {
      store.add(stage_name(i) + ".bias", Array({sz(st.out_channels)}, 0.0));
    }
    cin = st.out_channels;
  }
  const int f = backbone.feature_dim();
  store.add(kProjectionPrefix + "fc1.weight", he_uniform({sz(f), sz(proj.hidden_dim)}, sz(f), derive_seed(seed, stream++)));
  store.add(kProjectionPrefix + "fc1.bias", Array({sz(proj.hidden_dim)}, 0.0));
  store.add(kProjectionPrefix + "fc2.weight",
            he_uniform({sz(proj.hidden_dim), sz(proj.out_dim)}, sz(proj.hidden_dim), derive_seed(seed, stream++)));
  store.add(kProjectionPrefix + "fc2.bias", Array({sz(proj.out_dim)}, 0.0));
  return store;
}

void attach_classifier(ParamStore& store, int feature_dim, const ClassifierSpec& spec) {
  if (spec.num_classes < 1) throw ConfigError("classifier needs at least one class");
  store.erase_prefix(kClassifierPrefix);
  const auto f = static_cast<std::size_t>(feature_dim);
  const auto c = static_cast<std::size_t>(spec.num_classes);
  store.add(kClassifierPrefix + "weight", Array({f, c}, 0.0));
  store.add(kClassifierPrefix + "bias", Array({c}, 0.0));
}

Var embed(Tape& tape, ParamStore& store, const BackboneSpec& spec, const Var& images) {
  check_images(spec, images.value());
  return backbone_forward(spec, images, [&](const std::string& n) { return tape.parameter(store, n); });
}

Var project(Tape& tape, ParamStore& store, const Var& features) {
  check_features(store, kProjectionPrefix + "fc1.weight", features.value());
  return projection_forward(features, [&](const std::string& n) { return tape.parameter(store, n); });
}

Var classify(Tape& tape, ParamStore& store, const Var& features) {
  check_features(store, kClassifierPrefix + "weight", features.value());
  return classifier_forward(features, [&](const std::string& n) { return tape.parameter(store, n); });
}

Array embed(const ParamStore& store, const BackboneSpec& spec, const Array& images) {
  check_images(spec, images);
  Tape tape;
  return backbone_forward(spec, tape.constant(images), [&](const std::string& n) {
           return tape.constant(store.at(n).value);
         }).value();
}

Array project(const ParamStore& store, const Array& features) {
  check_features(store, kProjectionPrefix + "fc1.weight", features);
  Tape tape;
  return projection_forward(tape.constant(features), [&](const std::string& n) {
           return tape.constant(store.at(n).value);
         }).value();
}

Array classify(const ParamStore& store, const Array& features) {
  check_features(store, kClassifierPrefix + "weight", features);
  Tape tape;
  return classifier_forward(tape.constant(features), [&](const std::string& n) {
           return tape.constant(store.at(n).value);
         }).value();
}

void check_compatible(const ParamStore& store, const BackboneSpec& backbone, const ProjectionSpec& proj) {
  const ParamStore expected = init_model(backbone, proj, 0);
  for (const auto& e : expected.entries()) {
    if (!store.contains(e.name)) throw DimensionError("checkpoint is missing parameter " + e.name);
    if (store.at(e.name).value.shape() != e.value.shape())
      throw DimensionError("checkpoint parameter " + e.name + " has shape " +
                           num::shape_string(store.at(e.name).value.shape()) + ", model expects " +
                           num::shape_string(e.value.shape()));
  }
}

}  // namespace mvc::model
