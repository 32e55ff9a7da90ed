#include "mvc/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>

#include "mvc/contrastive.hpp"
#include "mvc/errors.hpp"
#include "mvc/rng.hpp"

namespace mvc::trainer {

using data::Manifest;
using nlohmann::json;
using num::Array;
using num::ParamStore;

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kEvalChunk = 128;

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json gap_to_json(double g) { return std::isinf(g) ? json("any") : json(g); }

double gap_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "any") return std::numeric_limits<double>::infinity();
    throw ConfigError("gap_seconds must be a number or \"any\"");
  }
  return j.get<double>();
}

// Section reader that rejects keys it was not asked about.
class Section {
 public:
  Section(const json& root, const std::string& name) : name_(name) {
    if (root.contains(name)) {
      obj_ = root.at(name);
      if (!obj_.is_object()) throw ConfigError("config section \"" + name + "\" must be an object");
    } else {
      obj_ = json::object();
    }
  }
  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.push_back(key);
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }
  void read_with(const std::string& key, const std::function<void(const json&)>& fn) {
    seen_.push_back(key);
    if (!obj_.contains(key)) return;
    try {
      fn(obj_.at(key));
    } catch (const json::exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }
  void finish() const {
    for (const auto& [k, v] : obj_.items())
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
        throw ConfigError("unknown config key \"" + name_ + "." + k + "\"");
  }

 private:
  std::string name_;
  json obj_;
  std::vector<std::string> seen_;
};

std::vector<int> labels_of(const Manifest& m, const std::vector<int>& class_ids) {
  std::vector<int> out;
  out.reserve(m.size());
  for (const auto& r : m.records()) {
    const auto it = std::lower_bound(class_ids.begin(), class_ids.end(), r.class_id);
    if (it == class_ids.end() || *it != r.class_id) throw ConfigError("frame of a class absent from the train split");
    out.push_back(static_cast<int>(it - class_ids.begin()));
  }
  return out;
}

// Backbone features of every frame (square crop, resized, no augmentation).
Array frame_features(const ParamStore& store, const model::BackboneSpec& spec, const Manifest& m) {
  sampler::FrameSource frames(m);
  const auto f = static_cast<std::size_t>(spec.feature_dim());
  Array out({m.size(), f});
  std::vector<data::Image> chunk;
  for (std::size_t start = 0; start < m.size(); start += kEvalChunk) {
    const std::size_t end = std::min(m.size(), start + kEvalChunk);
    chunk.clear();
    for (std::size_t i = start; i < end; ++i)
      chunk.push_back(augment::eval_transform(frames.crop(i), spec.input_size, spec.input_size));
    const Array feats = model::embed(store, spec, sampler::stack_images(chunk));
    std::copy(feats.data(), feats.data() + feats.size(), out.data() + start * f);
  }
  return out;
}

Array gather_rows(const Array& x, std::span<const std::size_t> rows) {
  const std::size_t f = x.shape()[1];
  Array out({rows.size(), f});
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy_n(x.data() + rows[r] * f, f, out.data() + r * f);
  return out;
}

std::vector<int> predict(const ParamStore& store, const Array& features) {
  const Array logits = model::classify(store, features);
  const std::size_t n = logits.shape()[0], c = logits.shape()[1];
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.data() + i * c;
    out[i] = static_cast<int>(std::max_element(row, row + c) - row);
  }
  return out;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += pred[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

std::map<int, double> per_class(const std::vector<int>& pred, const std::vector<int>& labels,
                                const std::vector<int>& class_ids) {
  std::vector<std::size_t> hit(class_ids.size()), total(class_ids.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = static_cast<std::size_t>(labels[i]);
    ++total[l];
    hit[l] += pred[i] == labels[i];
  }
  std::map<int, double> out;
  for (std::size_t c = 0; c < class_ids.size(); ++c)
    out[class_ids[c]] = total[c] ? static_cast<double>(hit[c]) / static_cast<double>(total[c]) : 0.0;
  return out;
}

std::vector<std::vector<std::size_t>> chunks(const std::vector<std::size_t>& order, std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < order.size(); s += size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), s + size)));
  return out;
}

void sgd_or_throw(ParamStore& store, const ExperimentConfig& c, int epoch, std::size_t batch, double lr) {
  try {
    num::sgd_step(store, lr, c.momentum);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                          std::to_string(batch) + ")");
  }
}

void check_loss(double loss, int epoch, std::size_t batch) {
  if (!std::isfinite(loss))
    throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch));
}

MetricsReport fresh_report(const ExperimentConfig& c) {
  MetricsReport r;
  r.run_id = run_name(c);
  r.fingerprint = fingerprint(c);
  r.mode = c.mode;
  if (c.mode == Mode::simclr_transform) r.gap = c.gap_seconds;
  r.seed = c.seed;
  const SeedPlan p = SeedPlan::from(c.seed);
  r.seeds = {{"init", p.init}, {"split", p.split}, {"pretrain", p.pretrain}, {"subset", p.subset}, {"probe", p.probe}};
  return r;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

std::string gap_text(double g) {
  if (std::isinf(g)) return "any";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, g);
  return {buf, res.ptr};
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::simclr_self: return "simclr_self";
    case Mode::simclr_transform: return "simclr_transform";
    case Mode::simclr_object: return "simclr_object";
    case Mode::simclr_class: return "simclr_class";
    case Mode::supervised: return "supervised";
  }
  return "unknown";
}

Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::simclr_self, Mode::simclr_transform, Mode::simclr_object, Mode::simclr_class, Mode::supervised})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown mode \"" + s +
                    "\" (expected simclr_self, simclr_transform, simclr_object, simclr_class, or supervised)");
}

sampler::Setting setting_of(Mode m) {
  switch (m) {
    case Mode::simclr_self: return sampler::Setting::self;
    case Mode::simclr_transform: return sampler::Setting::transform;
    case Mode::simclr_object: return sampler::Setting::object;
    case Mode::simclr_class: return sampler::Setting::class_level;
    case Mode::supervised: break;
  }
  throw ConfigError("supervised mode has no pairing setting");
}

void ExperimentConfig::validate() const {
  if (!(eval_fraction > 0.0 && eval_fraction <= 1.0)) throw ConfigError("eval_fraction must lie in (0, 1]");
  if (holdout_objects_per_class < 1) throw ConfigError("holdout_objects_per_class must be ≥ 1");
  backbone.validate();
  projection.validate();
  augment.validate();
  if (augment.out_h != backbone.input_size || augment.out_w != backbone.input_size)
    throw ConfigError("augment output size must equal the backbone input size");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (!(gap_seconds >= 0.0)) throw ConfigError("gap_seconds must be ≥ 0");
  if (std::isinf(gap_seconds) && gap_mode != sampler::GapSpec::Mode::range)
    throw ConfigError("gap \"any\" requires range mode");
  if (batch_pairs < 1 || eval_batch < 1) throw ConfigError("batch sizes must be ≥ 1");
  if (pretrain_epochs < 0 || eval_epochs < 0) throw ConfigError("epoch counts must be ≥ 0");
  if (!(lr > 0.0) || !(eval_lr > 0.0)) throw ConfigError("learning rates must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
}

sampler::PairingPolicy ExperimentConfig::policy(double fps) const {
  sampler::PairingPolicy p;
  p.setting = setting_of(mode);
  if (mode == Mode::simclr_transform) p.gap = gap(fps);
  p.rotation_only = rotation_only;
  p.validate();
  return p;
}

json to_json(const ExperimentConfig& c) {
  json stages = json::array();
  for (const auto& s : c.backbone.stages) stages.push_back({s.out_channels, s.kernel, s.stride});
  return {
      {"data",
       {{"manifest", c.manifest.string()},
        {"transfer_manifest", c.transfer_manifest.string()},
        {"holdout_objects_per_class", c.holdout_objects_per_class},
        {"eval_fraction", c.eval_fraction}}},
      {"model",
       {{"stages", stages},
        {"input_size", c.backbone.input_size},
        {"batch_norm", c.backbone.batch_norm},
        {"projection_hidden", c.projection.hidden_dim},
        {"projection_out", c.projection.out_dim}}},
      {"loss", {{"temperature", c.temperature}}},
      {"sampler",
       {{"gap_mode", sampler::to_string(c.gap_mode)},
        {"gap_seconds", gap_to_json(c.gap_seconds)},
        {"rotation_only", c.rotation_only}}},
      {"augment",
       {{"brightness", c.augment.brightness},
        {"contrast", c.augment.contrast},
        {"saturation", c.augment.saturation},
        {"grayscale_prob", c.augment.grayscale_prob},
        {"flip_prob", c.augment.flip_prob},
        {"crop_min_frac", c.augment.crop_min_frac},
        {"crop_max_frac", c.augment.crop_max_frac}}},
      {"train",
       {{"mode", to_string(c.mode)},
        {"batch_pairs", c.batch_pairs},
        {"pretrain_epochs", c.pretrain_epochs},
        {"lr", c.lr},
        {"momentum", c.momentum},
        {"eval_epochs", c.eval_epochs},
        {"eval_batch", c.eval_batch},
        {"eval_lr", c.eval_lr},
        {"seed", c.seed}}},
      {"report", {{"out_dir", c.out_dir.string()}}},
  };
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> kSections = {"data", "model", "loss", "sampler", "augment", "train", "report"};
  for (const auto& [k, v] : j.items())
    if (std::find(kSections.begin(), kSections.end(), k) == kSections.end())
      throw ConfigError("unknown config section \"" + k + "\"");

  ExperimentConfig c;
  std::string s;

  Section data(j, "data");
  s = c.manifest.string();
  data.read("manifest", s);
  c.manifest = s;
  s = c.transfer_manifest.string();
  data.read("transfer_manifest", s);
  c.transfer_manifest = s;
  data.read("holdout_objects_per_class", c.holdout_objects_per_class);
  data.read("eval_fraction", c.eval_fraction);
  data.finish();

  Section mdl(j, "model");
  mdl.read_with("stages", [&](const json& v) {
    c.backbone.stages.clear();
    for (const auto& st : v) {
      if (!st.is_array() || st.size() != 3) throw ConfigError("model.stages entries are [channels, kernel, stride]");
      c.backbone.stages.push_back({st[0].get<int>(), st[1].get<int>(), st[2].get<int>()});
    }
  });
  mdl.read("input_size", c.backbone.input_size);
  mdl.read("batch_norm", c.backbone.batch_norm);
  mdl.read("projection_hidden", c.projection.hidden_dim);
  mdl.read("projection_out", c.projection.out_dim);
  mdl.finish();
  c.augment.out_h = c.augment.out_w = c.backbone.input_size;

  Section loss(j, "loss");
  loss.read("temperature", c.temperature);
  loss.finish();

  Section smp(j, "sampler");
  smp.read_with("gap_mode", [&](const json& v) { c.gap_mode = sampler::parse_gap_mode(v.get<std::string>()); });
  smp.read_with("gap_seconds", [&](const json& v) { c.gap_seconds = gap_from_json(v); });
  smp.read("rotation_only", c.rotation_only);
  smp.finish();

  Section aug(j, "augment");
  aug.read("brightness", c.augment.brightness);
  aug.read("contrast", c.augment.contrast);
  aug.read("saturation", c.augment.saturation);
  aug.read("grayscale_prob", c.augment.grayscale_prob);
  aug.read("flip_prob", c.augment.flip_prob);
  aug.read("crop_min_frac", c.augment.crop_min_frac);
  aug.read("crop_max_frac", c.augment.crop_max_frac);
  aug.finish();

  Section tr(j, "train");
  tr.read_with("mode", [&](const json& v) { c.mode = parse_mode(v.get<std::string>()); });
  tr.read("batch_pairs", c.batch_pairs);
  tr.read("pretrain_epochs", c.pretrain_epochs);
  tr.read("lr", c.lr);
  tr.read("momentum", c.momentum);
  tr.read("eval_epochs", c.eval_epochs);
  tr.read("eval_batch", c.eval_batch);
  tr.read("eval_lr", c.eval_lr);
  tr.read("seed", c.seed);
  tr.finish();

  Section rep(j, "report");
  s = c.out_dir.string();
  rep.read("out_dir", s);
  c.out_dir = s;
  rep.finish();

  c.validate();
  return c;
}

std::string fingerprint(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.seed = 0;
  c.out_dir.clear();
  const std::string text = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string run_name(const ExperimentConfig& config) {
  return fingerprint(config) + "_s" + std::to_string(config.seed);
}

SeedPlan SeedPlan::from(std::uint64_t master) {
  return {derive_seed(master, 1), derive_seed(master, 2), derive_seed(master, 3), derive_seed(master, 4),
          derive_seed(master, 5)};
}

void MetricsReport::write_csv(std::ostream& os, bool header) const {
  if (header) os << kCsvHeader << '\n';
  const std::string prefix =
      run_id + ',' + to_string(mode) + ',' + (gap ? gap_text(*gap) : "") + ',' +
      std::to_string(seed) + ',';
  const bool sup = mode == Mode::supervised;
  for (std::size_t e = 0; e < train_loss.size(); ++e)
    os << prefix << e + 1 << ",train," << (sup ? "ce_loss" : "ntxent_loss") << ',' << fmt(train_loss[e]) << '\n';
  for (std::size_t e = 0; e < eval_loss.size(); ++e)
    os << prefix << e + 1 << ",eval,ce_loss," << fmt(eval_loss[e]) << '\n';
  os << prefix << "final,train,accuracy," << fmt(train_accuracy) << '\n';
  os << prefix << "final,test,accuracy," << fmt(test_accuracy) << '\n';
  for (const auto& [c, a] : per_class_accuracy)
    os << prefix << "final,test,accuracy_class_" << c << ',' << fmt(a) << '\n';
}

json MetricsReport::summary() const {
  json pc = json::object();
  for (const auto& [c, a] : per_class_accuracy) pc[std::to_string(c)] = a;
  return {{"run_id", run_id},
          {"fingerprint", fingerprint},
          {"mode", to_string(mode)},
          {"gap", gap ? gap_to_json(*gap) : json(nullptr)},
          {"self_equivalent", self_equivalent},
          {"seed", seed},
          {"seeds", seeds},
          {"train_loss", train_loss},
          {"eval_loss", eval_loss},
          {"train_accuracy", train_accuracy},
          {"test_accuracy", test_accuracy},
          {"per_class_accuracy", pc},
          {"train_frames", train_frames},
          {"eval_frames", eval_frames},
          {"test_frames", test_frames},
          {"wall_seconds", wall_seconds},
          {"error", error}};
}

MetricsReport MetricsReport::from_summary(const json& j) {
  MetricsReport r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.mode = parse_mode(j.at("mode").get<std::string>());
    if (!j.at("gap").is_null()) r.gap = gap_from_json(j.at("gap"));
    r.self_equivalent = j.at("self_equivalent").get<bool>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    r.train_loss = j.at("train_loss").get<std::vector<double>>();
    r.eval_loss = j.at("eval_loss").get<std::vector<double>>();
    r.train_accuracy = j.at("train_accuracy").get<double>();
    r.test_accuracy = j.at("test_accuracy").get<double>();
    for (const auto& [k, v] : j.at("per_class_accuracy").items()) r.per_class_accuracy[std::stoi(k)] = v.get<double>();
    r.train_frames = j.at("train_frames").get<std::size_t>();
    r.eval_frames = j.at("eval_frames").get<std::size_t>();
    r.test_frames = j.at("test_frames").get<std::size_t>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.error = j.at("error").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("run summary: ") + e.what());
  }
  return r;
}

std::pair<Manifest, Manifest> train_test_split(const Manifest& manifest, const ExperimentConfig& config) {
  return data::split_objects(manifest, {config.holdout_objects_per_class, SeedPlan::from(config.seed).split});
}

TrainedModel pretrain(const ExperimentConfig& config) {
  return pretrain(config, data::load_manifest(config.manifest));
}

TrainedModel pretrain(const ExperimentConfig& config, const Manifest& manifest) {
  config.validate();
  if (config.mode == Mode::supervised) throw ConfigError("pretrain: supervised mode has no contrastive phase");
  const auto t0 = Clock::now();
  const SeedPlan plan = SeedPlan::from(config.seed);
  auto [train, test] = train_test_split(manifest, config);
  if (config.rotation_only) train = train.rotation_only();
  if (train.empty()) throw ConfigError("pretrain: no training frames");
  const auto policy = config.policy(manifest.fps());

  TrainedModel out{model::init_model(config.backbone, config.projection, plan.init), fresh_report(config)};
  out.report.train_frames = train.size();
  sampler::FrameSource frames(train);
  std::vector<std::size_t> anchors(train.size());
  std::iota(anchors.begin(), anchors.end(), 0);

  for (int epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    const std::uint64_t epoch_seed = derive_seed(plan.pretrain, static_cast<std::uint64_t>(epoch));
    Rng order_rng(epoch_seed);
    std::vector<std::size_t> order = anchors;
    order_rng.shuffle(order);
    double total = 0.0;
    std::size_t batches = 0;
    const auto groups = chunks(order, config.batch_pairs);
    for (std::size_t b = 0; b < groups.size(); ++b) {
      Rng batch_rng(derive_seed(epoch_seed, b + 1));
      bool any = false;
      for (std::size_t a : groups[b])
        if (!sampler::valid_partners(a, train, policy).empty()) {
          any = true;
          break;
        }
      if (!any) continue;
      const auto batch =
          sampler::build_batch_from_anchors(frames, groups[b], policy, config.batch_pairs, batch_rng, config.augment);
      num::Tape tape;
      const auto x = tape.constant(batch.images);
      const auto h = model::embed(tape, out.store, config.backbone, x);
      const auto z = model::project(tape, out.store, h);
      const auto loss = contrastive::ntxent_loss(z, config.temperature);
      const double value = loss.value().item();
      check_loss(value, epoch, b);
      tape.backward(loss);
      sgd_or_throw(out.store, config, epoch, b, config.lr);
      total += value;
      ++batches;
    }
    if (batches == 0) throw ConfigError("pretrain: no anchor has a valid partner under this policy");
    out.report.train_loss.push_back(total / static_cast<double>(batches));
  }
  out.report.wall_seconds = seconds_since(t0);
  return out;
}

MetricsReport linear_eval(ParamStore& store, const ExperimentConfig& config) {
  return linear_eval(store, config, data::load_manifest(config.manifest), fresh_report(config));
}

MetricsReport linear_eval(ParamStore& store, const ExperimentConfig& config, const Manifest& manifest,
                          MetricsReport report) {
  config.validate();
  model::check_compatible(store, config.backbone, config.projection);
  const auto t0 = Clock::now();
  const SeedPlan plan = SeedPlan::from(config.seed);
  const std::uint64_t backbone_before = store.fingerprint(model::kBackbonePrefix);
  const std::uint64_t projection_before = store.fingerprint(model::kProjectionPrefix);

  const auto [train, test] = train_test_split(manifest, config);
  const Manifest subset = data::sample_eval_subset(train, config.eval_fraction, plan.subset);
  if (subset.empty()) throw ConfigError("linear_eval: evaluation subset is empty");
  const std::vector<int> class_ids = train.class_ids();
  const auto y_train = labels_of(subset, class_ids);
  const auto y_test = labels_of(test, class_ids);
  const Array x_train = frame_features(store, config.backbone, subset);
  const Array x_test = frame_features(store, config.backbone, test);

  model::attach_classifier(store, config.backbone.feature_dim(), {static_cast<int>(class_ids.size())});
  store.set_trainable("", false);
  store.set_trainable(model::kClassifierPrefix, true);

  Rng rng(plan.probe);
  std::vector<std::size_t> order(subset.size());
  std::iota(order.begin(), order.end(), 0);
  report.eval_loss.clear();
  for (int epoch = 1; epoch <= config.eval_epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    const auto groups = chunks(order, config.eval_batch);
    for (std::size_t b = 0; b < groups.size(); ++b) {
      std::vector<int> y;
      for (std::size_t i : groups[b]) y.push_back(y_train[i]);
      num::Tape tape;
      const auto f = tape.constant(gather_rows(x_train, groups[b]));
      const auto loss = num::cross_entropy_rows(model::classify(tape, store, f), y);
      const double value = loss.value().item();
      check_loss(value, epoch, b);
      tape.backward(loss);
      sgd_or_throw(store, config, epoch, b, config.eval_lr);
      total += value * static_cast<double>(groups[b].size());
    }
    report.eval_loss.push_back(total / static_cast<double>(order.size()));
  }
  store.set_trainable("", true);

  const auto p_train = predict(store, x_train);
  const auto p_test = predict(store, x_test);
  report.train_accuracy = accuracy(p_train, y_train);
  report.test_accuracy = accuracy(p_test, y_test);
  report.per_class_accuracy = per_class(p_test, y_test, class_ids);
  report.eval_frames = subset.size();
  report.test_frames = test.size();
  if (report.train_frames == 0) report.train_frames = train.size();

  if (store.fingerprint(model::kBackbonePrefix) != backbone_before ||
      store.fingerprint(model::kProjectionPrefix) != projection_before)
    throw std::logic_error("linear_eval modified frozen parameters");
  report.wall_seconds += seconds_since(t0);
  return report;
}

TrainedModel supervised_baseline(const ExperimentConfig& config) {
  return supervised_baseline(config, data::load_manifest(config.manifest));
}

TrainedModel supervised_baseline(const ExperimentConfig& config, const Manifest& manifest) {
  config.validate();
  if (config.mode != Mode::supervised) throw ConfigError("supervised_baseline requires mode supervised");
  const auto t0 = Clock::now();
  const SeedPlan plan = SeedPlan::from(config.seed);
  auto [train, test] = train_test_split(manifest, config);
  if (config.rotation_only) train = train.rotation_only();
  if (train.empty()) throw ConfigError("supervised_baseline: no training frames");
  const std::vector<int> class_ids = train.class_ids();
  const auto y_train = labels_of(train, class_ids);
  const auto y_test = labels_of(test, class_ids);

  TrainedModel out{model::init_model(config.backbone, config.projection, plan.init), fresh_report(config)};
  model::attach_classifier(out.store, config.backbone.feature_dim(), {static_cast<int>(class_ids.size())});
  out.store.set_trainable(model::kProjectionPrefix, false);
  out.report.train_frames = train.size();

  sampler::FrameSource frames(train);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch_images = 2 * config.batch_pairs;
  for (int epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    const std::uint64_t epoch_seed = derive_seed(plan.pretrain, static_cast<std::uint64_t>(epoch));
    Rng order_rng(epoch_seed);
    order_rng.shuffle(order);
    double total = 0.0;
    const auto groups = chunks(order, batch_images);
    for (std::size_t b = 0; b < groups.size(); ++b) {
      Rng batch_rng(derive_seed(epoch_seed, b + 1));
      std::vector<data::Image> imgs;
      std::vector<int> y;
      for (std::size_t i : groups[b]) {
        imgs.push_back(augment::apply(frames.crop(i), config.augment, batch_rng));
        y.push_back(y_train[i]);
      }
      num::Tape tape;
      const auto x = tape.constant(sampler::stack_images(imgs));
      const auto logits = model::classify(tape, out.store, model::embed(tape, out.store, config.backbone, x));
      const auto loss = num::cross_entropy_rows(logits, y);
      const double value = loss.value().item();
      check_loss(value, epoch, b);
      tape.backward(loss);
      sgd_or_throw(out.store, config, epoch, b, config.lr);
      total += value * static_cast<double>(groups[b].size());
    }
    out.report.train_loss.push_back(total / static_cast<double>(order.size()));
  }
  out.store.set_trainable("", true);

  const Array x_train = frame_features(out.store, config.backbone, train);
  const Array x_test = frame_features(out.store, config.backbone, test);
  const auto p_train = predict(out.store, x_train);
  const auto p_test = predict(out.store, x_test);
  out.report.train_accuracy = accuracy(p_train, y_train);
  out.report.test_accuracy = accuracy(p_test, y_test);
  out.report.per_class_accuracy = per_class(p_test, y_test, class_ids);
  out.report.eval_frames = train.size();
  out.report.test_frames = test.size();
  out.report.wall_seconds = seconds_since(t0);
  return out;
}

MetricsReport transfer_eval(ParamStore& store, const Manifest& transfer, const ExperimentConfig& config) {
  return linear_eval(store, config, transfer, fresh_report(config));
}

TrainedModel run_experiment(const ExperimentConfig& config, const Manifest& manifest) {
  if (config.mode == Mode::supervised) return supervised_baseline(config, manifest);
  TrainedModel run = pretrain(config, manifest);
  run.report = linear_eval(run.store, config, manifest, std::move(run.report));
  return run;
}

std::vector<ExperimentConfig> gap_sweep_configs(const ExperimentConfig& config, sampler::GapSpec::Mode mode,
                                                double fps) {
  std::vector<ExperimentConfig> out;
  for (double g : sampler::gap_grid(fps)) {
    ExperimentConfig c = config;
    c.mode = Mode::simclr_transform;
    c.gap_mode = mode;
    c.gap_seconds = g;
    if (fps == 3.0) c.rotation_only = true;
    out.push_back(std::move(c));
  }
  return out;
}

MetricsReport failed_report(const ExperimentConfig& config, const std::string& error) {
  MetricsReport r = fresh_report(config);
  r.error = error;
  return r;
}

std::vector<MetricsReport> run_gap_sweep(const ExperimentConfig& config, sampler::GapSpec::Mode mode,
                                         const Manifest& manifest) {
  std::vector<MetricsReport> out;
  for (const auto& c : gap_sweep_configs(config, mode, manifest.fps())) {
    MetricsReport r;
    try {
      r = run_experiment(c, manifest).report;
    } catch (const std::exception& e) {
      r = failed_report(c, e.what());
    }
    r.self_equivalent = c.gap_seconds == 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

void write_run(const std::filesystem::path& dir, const ExperimentConfig& config, const TrainedModel& run) {
  std::filesystem::create_directories(dir);
  num::save_checkpoint(run.store, dir / "checkpoint.bin");
  {
    std::ofstream csv(dir / "metrics.csv", std::ios::binary);
    run.report.write_csv(csv);
    if (!csv) throw std::runtime_error("cannot write " + (dir / "metrics.csv").string());
  }
  std::ofstream(dir / "summary.json") << run.report.summary().dump(2) << '\n';
  std::ofstream(dir / "config.json") << to_json(config).dump(2) << '\n';
}

}  // namespace mvc::trainer
