#pragma once

// Two-phase protocol: contrastive pretraining of backbone + projection, then
// a linear classifier on frozen backbone features. Also the supervised
// baseline, gap sweeps and transfer evaluation.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvc/augment.hpp"
#include "mvc/dataio.hpp"
#include "mvc/model.hpp"
#include "mvc/numcore.hpp"
#include "mvc/sampler.hpp"

namespace mvc::trainer {

enum class Mode { simclr_self, simclr_transform, simclr_object, simclr_class, supervised };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);
// Pairing setting used by a contrastive mode.
sampler::Setting setting_of(Mode m);

struct ExperimentConfig {
  // data
  std::filesystem::path manifest;
  std::filesystem::path transfer_manifest;  // empty: none
  int holdout_objects_per_class = 3;
  double eval_fraction = 0.10;

  Mode mode = Mode::simclr_self;

  // model
  model::BackboneSpec backbone = model::BackboneSpec::desk();
  model::ProjectionSpec projection;

  // loss
  double temperature = 0.5;

  // sampler; gap_seconds = +inf pairs any two frames of a video
  sampler::GapSpec::Mode gap_mode = sampler::GapSpec::Mode::range;
  double gap_seconds = std::numeric_limits<double>::infinity();
  bool rotation_only = false;

  augment::AugmentConfig augment;

  // train
  std::size_t batch_pairs = 32;
  int pretrain_epochs = 30;
  double lr = 0.05;
  double momentum = 0.9;
  int eval_epochs = 100;
  std::size_t eval_batch = 32;
  double eval_lr = 0.1;
  std::uint64_t seed = 0;

  // report
  std::filesystem::path out_dir = "runs";

  void validate() const;
  sampler::GapSpec gap(double fps) const { return {gap_mode, gap_seconds, fps}; }
  sampler::PairingPolicy policy(double fps) const;
};

// Canonical sectioned JSON (data, model, loss, sampler, augment, train,
// report). Parsing rejects unknown keys and fills missing ones with defaults.
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

// Hex FNV-1a of the serialized config with the seed and output directory
// blanked, so runs of one experiment under different seeds share it.
std::string fingerprint(const ExperimentConfig& config);
std::string run_name(const ExperimentConfig& config);

// Seeds handed to each randomized stage, derived from the master seed.
struct SeedPlan {
  std::uint64_t init, split, pretrain, subset, probe;
  static SeedPlan from(std::uint64_t master);
};

struct MetricsReport {
  std::string run_id;
  std::string fingerprint;
  Mode mode = Mode::simclr_self;
  std::optional<double> gap;  // transform runs
  bool self_equivalent = false;
  std::uint64_t seed = 0;
  std::map<std::string, std::uint64_t> seeds;

  std::vector<double> train_loss;  // per epoch: NT-Xent, or cross-entropy when supervised
  std::vector<double> eval_loss;   // per linear-probe epoch
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::map<int, double> per_class_accuracy;  // test frames, by class id
  std::size_t train_frames = 0, eval_frames = 0, test_frames = 0;

  double wall_seconds = 0.0;  // summary only; the CSV stays reproducible
  std::string error;          // set when a sweep entry failed

  // Rows: run_id,mode,gap,seed,epoch,split,metric,value.
  void write_csv(std::ostream& os, bool header = true) const;
  nlohmann::json summary() const;
  static MetricsReport from_summary(const nlohmann::json& j);
};

// "any" for an unbounded gap, else the shortest round-trip decimal.
std::string gap_text(double gap_seconds);

inline constexpr const char* kCsvHeader = "run_id,mode,gap,seed,epoch,split,metric,value";

struct TrainedModel {
  num::ParamStore store;
  MetricsReport report;
};

// Train/test object split of a manifest under the config's seed plan.
std::pair<data::Manifest, data::Manifest> train_test_split(const data::Manifest& manifest,
                                                           const ExperimentConfig& config);

// Contrastive phase on the train split. One epoch pairs every train frame (in
// a seeded shuffled order) as an anchor once.
TrainedModel pretrain(const ExperimentConfig& config);
TrainedModel pretrain(const ExperimentConfig& config, const data::Manifest& manifest);

// Frozen-backbone linear probe. Fills accuracy fields of `report` (a fresh
// report when omitted). The checkpoint's backbone and projection are checked
// bitwise unchanged; a classifier head is attached to `store`.
MetricsReport linear_eval(num::ParamStore& store, const ExperimentConfig& config, const data::Manifest& manifest,
                          MetricsReport report);
MetricsReport linear_eval(num::ParamStore& store, const ExperimentConfig& config);

// End-to-end backbone + classifier with softmax cross-entropy.
TrainedModel supervised_baseline(const ExperimentConfig& config);
TrainedModel supervised_baseline(const ExperimentConfig& config, const data::Manifest& manifest);

// Linear probe trained and tested on the transfer manifest's own split.
MetricsReport transfer_eval(num::ParamStore& store, const data::Manifest& transfer, const ExperimentConfig& config);

// pretrain + linear_eval, or supervised_baseline, per config.mode.
TrainedModel run_experiment(const ExperimentConfig& config, const data::Manifest& manifest);

// Transform configs for every gap in gap_grid(fps), rotation-only at fps 3.
// Entries keep the master seed, so the gap-0 entry reproduces the Self run.
std::vector<ExperimentConfig> gap_sweep_configs(const ExperimentConfig& config, sampler::GapSpec::Mode mode,
                                                double fps);

// Runs every gap_sweep_configs() entry. A failing entry is reported with
// `error` set and the sweep continues; the gap-0 entry is flagged
// self_equivalent.
std::vector<MetricsReport> run_gap_sweep(const ExperimentConfig& config, sampler::GapSpec::Mode mode,
                                         const data::Manifest& manifest);

// Report for a run that failed before producing metrics.
MetricsReport failed_report(const ExperimentConfig& config, const std::string& error);

// Writes checkpoint.bin, metrics.csv, summary.json and config.json into dir.
void write_run(const std::filesystem::path& dir, const ExperimentConfig& config, const TrainedModel& run);

}  // namespace mvc::trainer
