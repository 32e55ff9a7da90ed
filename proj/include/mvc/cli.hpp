#pragma once

// Command-line front end: gen-data, run, sweep, report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mvc/trainer.hpp"

namespace mvc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Parses argv and dispatches; never throws. Returns one of the exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// MVC_SEED, if set. Throws ConfigError when it is not an unsigned integer.
std::optional<std::uint64_t> env_seed();

// Reads a run config file (sections data, model, loss, sampler, augment,
// train, report).
trainer::ExperimentConfig load_run_config(const std::filesystem::path& path);

struct AggregateRow {
  std::string mode;
  std::string gap;  // empty for non-transform runs
  std::size_t runs = 0;
  double mean_test = 0, std_test = 0;
  double mean_train = 0, std_train = 0;
};

// Mean and sample standard deviation (0 for a single run) per (mode, gap).
// Rows follow mode order, then ascending gap.
std::vector<AggregateRow> aggregate(const std::vector<trainer::MetricsReport>& reports);
void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows);

// Standalone SVG documents: mean test accuracy per row with ±std whiskers,
// and transform accuracy against gap (empty string when no numeric gaps).
std::string bar_chart_svg(const std::vector<AggregateRow>& rows);
std::string gap_chart_svg(const std::vector<AggregateRow>& rows);

}  // namespace mvc::cli
