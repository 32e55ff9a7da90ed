#include "mvc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "mvc/errors.hpp"
#include "mvc/synthdata.hpp"

namespace mvc::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using trainer::ExperimentConfig;
using trainer::MetricsReport;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config_seed) {
  if (flag) return *flag;
  if (auto s = env_seed()) return *s;
  return config_seed;
}

int mode_rank(const std::string& mode) {
  try {
    return static_cast<int>(trainer::parse_mode(mode));
  } catch (const ConfigError&) {
    return 99;
  }
}

double gap_value(const std::string& gap) {
  if (gap.empty()) return -1.0;
  if (gap == "any") return std::numeric_limits<double>::infinity();
  return std::stod(gap);
}

std::string row_label(const AggregateRow& r) { return r.gap.empty() ? r.mode : r.mode + " gap " + r.gap; }

std::string num(double v, int precision = 4) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << v;
  return ss.str();
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

// Shared frame of both charts: y axis is accuracy in [0, 1].
struct Plot {
  double width = 720, height = 400, left = 60, right = 20, top = 40, bottom = 110;
  double plot_w() const { return width - left - right; }
  double plot_h() const { return height - top - bottom; }
  double y_of(double acc) const { return top + plot_h() * (1.0 - std::clamp(acc, 0.0, 1.0)); }

  std::string open(const std::string& title) const {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
      << "</text>\n";
    for (int k = 0; k <= 5; ++k) {
      const double acc = k / 5.0, y = y_of(acc);
      s << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << width - right << "\" y2=\"" << y
        << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << num(acc, 2) << "</text>\n";
    }
    s << "<text transform=\"translate(16," << top + plot_h() / 2
      << ") rotate(-90)\" text-anchor=\"middle\">test accuracy</text>\n";
    return s.str();
  }
};

// ---- subcommands -------------------------------------------------------------

struct GenArgs {
  std::string config, out, transfer, preset = "desk";
  double strength = 1.0;
};

int cmd_gen_data(const GenArgs& a, std::ostream& out) {
  synth::SynthConfig c = a.preset == "paper" ? synth::SynthConfig::paper_shaped() : synth::SynthConfig::desk();
  if (!a.config.empty()) c = synth::config_from_json(read_file(a.config));
  if (auto s = env_seed()) c.seed = *s;
  data::Manifest m;
  if (a.transfer.empty()) {
    m = synth::generate(c, a.out);
  } else {
    m = synth::generate_transfer(c, {synth::parse_transfer_style(a.transfer), a.strength}, a.out);
  }
  out << "wrote " << m.size() << " frames in " << m.video_ids().size() << " videos to " << a.out << '\n';
  out << "rotation " << num(c.angular_velocity(), 6) << " deg/s";
  if (c.fps == 1.0 || c.fps == 3.0) {
    out << "; angular distance per gap:";
    for (double g : sampler::gap_grid(c.fps)) out << ' ' << trainer::gap_text(g) << "s=" << num(synth::gap_angle(c, g), 6);
  }
  out << '\n';
  return kExitOk;
}

struct RunArgs {
  std::string config, mode, out;
  std::optional<std::uint64_t> seed;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  ExperimentConfig c = load_run_config(a.config);
  if (!a.mode.empty()) c.mode = trainer::parse_mode(a.mode);
  c.seed = resolve_seed(a.seed, c.seed);
  if (!a.out.empty()) c.out_dir = a.out;
  c.validate();
  const data::Manifest manifest = data::load_manifest(c.manifest);
  trainer::TrainedModel run = trainer::run_experiment(c, manifest);
  const fs::path dir = c.out_dir / trainer::run_name(c);
  trainer::write_run(dir, c, run);
  out << run.report.run_id << ' ' << trainer::to_string(c.mode) << " test_accuracy " << run.report.test_accuracy
      << " -> " << dir.string() << '\n';
  if (!c.transfer_manifest.empty() && c.mode != trainer::Mode::supervised) {
    const data::Manifest transfer = data::load_manifest(c.transfer_manifest);
    const MetricsReport t = trainer::transfer_eval(run.store, transfer, c);
    std::ofstream csv(dir / "transfer_metrics.csv", std::ios::binary);
    t.write_csv(csv);
    std::ofstream(dir / "transfer_summary.json") << t.summary().dump(2) << '\n';
    out << "transfer test_accuracy " << t.test_accuracy << '\n';
  }
  return kExitOk;
}

struct SweepArgs {
  std::string config, gap_mode, out;
  std::optional<double> fps;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentConfig base = load_run_config(a.config);
  if (!a.out.empty()) base.out_dir = a.out;
  const auto gap_mode = sampler::parse_gap_mode(a.gap_mode);
  const data::Manifest manifest = data::load_manifest(base.manifest);
  if (a.fps && std::abs(*a.fps - manifest.fps()) > 1e-9)
    throw ConfigError("--fps " + num(*a.fps) + " does not match the manifest's " + num(manifest.fps()) + " fps");
  if (a.jobs < 1) throw ConfigError("--jobs must be ≥ 1");

  std::vector<std::uint64_t> seeds = a.seeds;
  if (seeds.empty()) seeds.push_back(resolve_seed(std::nullopt, base.seed));
  std::vector<ExperimentConfig> tasks;
  for (std::uint64_t s : seeds) {
    ExperimentConfig c = base;
    c.seed = s;
    for (auto& t : trainer::gap_sweep_configs(c, gap_mode, manifest.fps())) tasks.push_back(std::move(t));
  }

  std::vector<MetricsReport> reports(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const ExperimentConfig& c = tasks[i];
      const fs::path dir = c.out_dir / trainer::run_name(c);
      MetricsReport r;
      try {
        const trainer::TrainedModel run = trainer::run_experiment(c, manifest);
        trainer::write_run(dir, c, run);
        r = run.report;
      } catch (const std::exception& e) {
        r = trainer::failed_report(c, e.what());
        fs::create_directories(dir);
        std::ofstream(dir / "summary.json") << r.summary().dump(2) << '\n';
      }
      r.self_equivalent = c.gap_seconds == 0.0;
      std::lock_guard lock(io);
      if (r.error.empty())
        out << "gap " << trainer::gap_text(c.gap_seconds) << " seed " << c.seed << " test_accuracy "
            << r.test_accuracy << (r.self_equivalent ? " (self-equivalent)" : "") << '\n';
      else
        err << "gap " << trainer::gap_text(c.gap_seconds) << " seed " << c.seed << " failed: " << r.error << '\n';
      reports[i] = std::move(r);
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<int>(a.jobs, static_cast<int>(tasks.size()));
  for (int j = 1; j < n; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  fs::create_directories(base.out_dir);
  const fs::path csv_path =
      base.out_dir / ("sweep_" + a.gap_mode + "_fps" + trainer::gap_text(manifest.fps()) + ".csv");
  std::ofstream csv(csv_path, std::ios::binary);
  csv << trainer::kCsvHeader << '\n';
  bool failed = false;
  for (const auto& r : reports) {
    failed |= !r.error.empty();
    if (r.error.empty()) r.write_csv(csv, false);
  }
  out << "combined metrics -> " << csv_path.string() << '\n';
  return failed ? kExitFailure : kExitOk;
}

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out = "report.csv";
  bool plot = false;
};

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> summaries;
  for (const auto& r : a.runs) {
    const fs::path p(r);
    if (fs::is_regular_file(p / "summary.json")) {
      summaries.push_back(p / "summary.json");
    } else if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (fs::is_regular_file(e.path() / "summary.json")) found.push_back(e.path() / "summary.json");
      std::sort(found.begin(), found.end());
      if (found.empty()) err << "skipped " << r << ": no summary.json\n";
      summaries.insert(summaries.end(), found.begin(), found.end());
    } else {
      err << "skipped " << r << ": not found\n";
    }
  }
  std::vector<MetricsReport> reports;
  for (const auto& s : summaries) {
    try {
      MetricsReport m = MetricsReport::from_summary(json::parse(read_file(s)));
      if (!m.error.empty()) {
        err << "skipped " << s.string() << ": run failed: " << m.error << '\n';
        continue;
      }
      reports.push_back(std::move(m));
    } catch (const std::exception& e) {
      err << "skipped " << s.string() << ": " << e.what() << '\n';
    }
  }
  if (reports.empty()) {
    err << "report: no usable run summaries\n";
    return kExitFailure;
  }
  const auto rows = aggregate(reports);
  {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + a.out);
    write_aggregate_csv(f, rows);
  }
  write_aggregate_csv(out, rows);
  if (a.plot) {
    const fs::path base = fs::path(a.out).replace_extension();
    std::ofstream(base.string() + "_modes.svg") << bar_chart_svg(rows);
    const std::string gaps = gap_chart_svg(rows);
    if (!gaps.empty()) std::ofstream(base.string() + "_gaps.svg") << gaps;
  }
  return kExitOk;
}

}  // namespace

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("MVC_SEED");
  if (!v || !*v) return std::nullopt;
  const std::string s(v);
  if (s.find_first_not_of("0123456789") != std::string::npos) throw ConfigError("MVC_SEED must be an unsigned integer");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError("MVC_SEED out of range");
  }
}

ExperimentConfig load_run_config(const fs::path& path) { return trainer::config_from_json(parse_json_file(path)); }

std::vector<AggregateRow> aggregate(const std::vector<MetricsReport>& reports) {
  std::map<std::pair<std::string, std::string>, std::vector<const MetricsReport*>> groups;
  for (const auto& r : reports)
    groups[{trainer::to_string(r.mode), r.gap ? trainer::gap_text(*r.gap) : ""}].push_back(&r);
  std::vector<AggregateRow> rows;
  for (const auto& [key, members] : groups) {
    AggregateRow row{key.first, key.second, members.size()};
    auto stats = [&](auto get, double& mean, double& sd) {
      double s = 0;
      for (const auto* m : members) s += get(*m);
      mean = s / static_cast<double>(members.size());
      double v = 0;
      for (const auto* m : members) v += (get(*m) - mean) * (get(*m) - mean);
      sd = members.size() > 1 ? std::sqrt(v / static_cast<double>(members.size() - 1)) : 0.0;
    };
    stats([](const MetricsReport& m) { return m.test_accuracy; }, row.mean_test, row.std_test);
    stats([](const MetricsReport& m) { return m.train_accuracy; }, row.mean_train, row.std_train);
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const AggregateRow& a, const AggregateRow& b) {
    const int ma = mode_rank(a.mode), mb = mode_rank(b.mode);
    if (ma != mb) return ma < mb;
    return gap_value(a.gap) < gap_value(b.gap);
  });
  return rows;
}

void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  os << "mode,gap,runs,mean_test_accuracy,std_test_accuracy,mean_train_accuracy,std_train_accuracy\n";
  for (const auto& r : rows)
    os << r.mode << ',' << r.gap << ',' << r.runs << ',' << num(r.mean_test, 6) << ',' << num(r.std_test, 6) << ','
       << num(r.mean_train, 6) << ',' << num(r.std_train, 6) << '\n';
}

std::string bar_chart_svg(const std::vector<AggregateRow>& rows) {
  Plot p;
  std::ostringstream s;
  s << p.open("Held-out-object accuracy (mean ± std)");
  const double slot = p.plot_w() / static_cast<double>(std::max<std::size_t>(rows.size(), 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double x = p.left + slot * static_cast<double>(i) + slot * 0.15, w = slot * 0.7;
    const double y = p.y_of(r.mean_test);
    s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << p.top + p.plot_h() - y
      << "\" fill=\"#4a7ab5\"/>\n";
    const double cx = x + w / 2;
    s << "<line x1=\"" << cx << "\" y1=\"" << p.y_of(r.mean_test + r.std_test) << "\" x2=\"" << cx << "\" y2=\""
      << p.y_of(r.mean_test - r.std_test) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << cx << "\" y=\"" << y - 4 << "\" text-anchor=\"middle\">" << num(r.mean_test, 3)
      << "</text>\n";
    const double ly = p.top + p.plot_h() + 12;
    s << "<text transform=\"translate(" << cx << ',' << ly << ") rotate(35)\">" << escape_xml(row_label(r))
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string gap_chart_svg(const std::vector<AggregateRow>& rows) {
  std::vector<const AggregateRow*> pts;
  for (const auto& r : rows)
    if (r.mode == "simclr_transform" && !r.gap.empty() && r.gap != "any") pts.push_back(&r);
  if (pts.empty()) return {};
  Plot p;
  p.bottom = 60;
  const double max_gap = std::max(1e-9, gap_value(pts.back()->gap));
  auto x_of = [&](double g) { return p.left + 20 + (p.plot_w() - 40) * g / max_gap; };
  std::ostringstream s;
  s << p.open("Transform accuracy against gap");
  std::string poly;
  for (const auto* r : pts) {
    const double x = x_of(gap_value(r->gap)), y = p.y_of(r->mean_test);
    poly += num(x, 6) + "," + num(y, 6) + " ";
    s << "<line x1=\"" << x << "\" y1=\"" << p.y_of(r->mean_test + r->std_test) << "\" x2=\"" << x << "\" y2=\""
      << p.y_of(r->mean_test - r->std_test) << "\" stroke=\"black\"/>\n";
    s << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"4\" fill=\"#c0504d\"/>\n";
    s << "<text x=\"" << x << "\" y=\"" << p.top + p.plot_h() + 16 << "\" text-anchor=\"middle\">" << r->gap
      << "</text>\n";
  }
  s << "<polyline points=\"" << poly << "\" fill=\"none\" stroke=\"#c0504d\"/>\n";
  s << "<text x=\"" << p.left + p.plot_w() / 2 << "\" y=\"" << p.height - 14
    << "\" text-anchor=\"middle\">gap (s)</text>\n";
  s << "</svg>\n";
  return s.str();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-view contrastive learning experiments"};
  app.name("mvc");
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "Render a synthetic multi-view dataset");
  g->add_option("--config", gen.config, "Synthetic dataset config (JSON)")->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--transfer", gen.transfer, "Render a transfer set: recolor, background, or blur");
  g->add_option("--strength", gen.strength, "Transfer style strength in [0, 1]");
  g->add_option("--preset", gen.preset, "Base config when --config is absent")->check(CLI::IsMember({"desk", "paper"}));

  RunArgs runa;
  auto* r = app.add_subcommand("run", "Pretrain and evaluate one configuration");
  r->add_option("--config", runa.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  r->add_option("--mode", runa.mode, "simclr_self, simclr_transform, simclr_object, simclr_class, or supervised");
  r->add_option("--seed", runa.seed, "Master seed (overrides MVC_SEED and the config)");
  r->add_option("--out", runa.out, "Output root (overrides report.out_dir)");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Transform runs over the gap grid");
  s->add_option("--config", sw.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  s->add_option("--gap-mode", sw.gap_mode, "fixed or range")->required()->check(CLI::IsMember({"fixed", "range"}));
  s->add_option("--fps", sw.fps, "Expected manifest frame rate (1 or 3)");
  s->add_option("--seeds", sw.seeds, "Master seeds (default: config seed)");
  s->add_option("--jobs", sw.jobs, "Concurrent runs");
  s->add_option("--out", sw.out, "Output root (overrides report.out_dir)");

  ReportArgs rep;
  auto* p = app.add_subcommand("report", "Aggregate run summaries into mean ± std per (mode, gap)");
  p->add_option("--runs", rep.runs, "Run directories, or directories of run directories")->required();
  p->add_option("--out", rep.out, "Aggregate CSV path");
  p->add_flag("--plot", rep.plot, "Also write SVG charts next to the CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) return cmd_gen_data(gen, out);
    if (*r) return cmd_run(runa, out);
    if (*s) return cmd_sweep(sw, out, err);
    if (*p) return cmd_report(rep, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace mvc::cli
