// Command-line front end: experiment orchestration, reproducible seeding,
// CSV and report emission.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "timebin/analysis.hpp"
#include "timebin/csvio.hpp"
#include "timebin/detection.hpp"
#include "timebin/ini.hpp"
#include "timebin/montecarlo.hpp"
#include "timebin/rates.hpp"

namespace {

constexpr const char *kVersion = "0.1.0";
constexpr std::uint64_t kDefaultSeed = 20240811ull;

namespace fs = std::filesystem;
using namespace timebin;

int default_threads() {
  if (const char *env = std::getenv("TIMEBIN_SIM_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

struct RunTimer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  long long ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - t0)
        .count();
  }
};

ExperimentConfig load_config(const std::string &path, std::string &hash) {
  std::vector<std::string> warnings;
  ExperimentConfig cfg = io::load_experiment_config(path, &hash, &warnings);
  for (const auto &w : warnings) std::cerr << "warning: " << w << "\n";
  return cfg;
}

void write_manifest(const fs::path &dir, io::ManifestInfo info, const RunTimer &timer) {
  info.version = kVersion;
  info.wall_ms = timer.ms();
  io::write_text_file((dir / "manifest.txt").string(), io::manifest_text(info));
}

std::string joined_command(int argc, char **argv) {
  std::ostringstream os;
  for (int i = 0; i < argc; ++i) os << (i ? " " : "") << argv[i];
  return os.str();
}

std::vector<double> phase_grid(int points) {
  std::vector<double> thetas(points);
  for (int k = 0; k < points; ++k) thetas[k] = 2.0 * M_PI * k / points;
  return thetas;
}

int cmd_correlate(const std::string &config_path, long long gates, std::uint64_t seed,
                  const std::string &out_dir, int threads, const std::string &dump_path,
                  const std::string &command) {
  RunTimer timer;
  std::string hash;
  ExperimentConfig cfg = load_config(config_path, hash);

  mc::SimOptions opts = mc::sim_options(cfg);
  opts.threads = threads;
  std::ofstream dump;
  if (!dump_path.empty()) {
    dump.open(dump_path, std::ios::binary);
    if (!dump) throw std::runtime_error("cannot write event dump: " + dump_path);
    opts.event_sink = [&dump](const std::string &chunk) { dump << chunk; };
  }

  const mc::GateBatchResult res = mc::simulate_gates(cfg, gates, seed, opts);
  const double c_value = tia::measured_c(res.histogram);
  const double c_err = tia::measured_c_error(res.histogram);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  io::write_text_file((dir / "histogram.csv").string(), tia::histogram_csv(res.histogram, hash));

  const double n = static_cast<double>(res.n_gates);
  const double c_s = static_cast<double>(res.singles_s) / n;
  const double c_i = static_cast<double>(res.singles_i) / n;
  std::ostringstream rep;
  rep << "gates=" << res.n_gates << "\n";
  rep << "singles_s_per_gate=" << c_s << "\n";
  rep << "singles_i_per_gate=" << c_i << "\n";
  rep << "c_value=" << c_value << "\n";
  rep << "c_err=" << c_err << "\n";
  const model::ExperimentModel m = model::build_model(cfg);
  try {
    const auto frac = model::estimate_correlated_fraction(c_value, c_s, c_i, m.signal.alpha,
                                                          m.idler.alpha, m.signal.dark,
                                                          m.idler.dark);
    rep << "mu_pair_est=" << frac.mu_pair << "\n";
    rep << "fraction_signal_est=" << frac.fraction_signal << "\n";
    rep << "fraction_idler_est=" << frac.fraction_idler << "\n";
  } catch (const std::exception &e) {
    rep << "fraction_estimate_error=" << e.what() << "\n";
  }
  io::write_text_file((dir / "correlate_report.txt").string(), rep.str());

  io::ManifestInfo info;
  info.command = command;
  info.config_path = config_path;
  info.config_hash = hash;
  info.seed = seed;
  info.outputs = {(dir / "histogram.csv").string(), (dir / "correlate_report.txt").string()};
  write_manifest(dir, info, timer);

  std::cout << "C = " << c_value << " +- " << c_err << " (" << res.histogram.at_delay(0)
            << " matched counts over " << res.n_gates << " gates)\n";
  return 0;
}

int cmd_fringe(const std::string &config_path, int points, long long gates_per_point,
               std::uint64_t seed, double smf_km, const std::string &out_dir, int threads,
               const std::string &command) {
  RunTimer timer;
  std::string hash;
  ExperimentConfig cfg = load_config(config_path, hash);
  if (smf_km > 0.0) {
    cfg.channel_signal.length_km = smf_km;
    cfg.channel_idler.length_km = smf_km;
  }

  mc::SimOptions opts = mc::sim_options(cfg);
  opts.threads = threads;
  const mc::FringeScan scan =
      mc::run_fringe_scan(cfg, phase_grid(points), gates_per_point, seed, opts);
  const analysis::FitResult raw = analysis::fit_fringe(scan, analysis::FitModel::Raw);
  const analysis::FitResult sub = analysis::fit_fringe(scan, analysis::FitModel::Subtracted);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  io::write_text_file((dir / "fringe_scan.csv").string(), io::fringe_scan_csv(scan));
  io::write_text_file((dir / "fit_raw.txt").string(), io::fit_report(raw, "raw"));
  io::write_text_file((dir / "fit_subtracted.txt").string(), io::fit_report(sub, "subtracted"));

  io::ManifestInfo info;
  info.command = command;
  info.config_path = config_path;
  info.config_hash = hash;
  info.seed = seed;
  info.outputs = {(dir / "fringe_scan.csv").string(), (dir / "fit_raw.txt").string(),
                  (dir / "fit_subtracted.txt").string()};
  write_manifest(dir, info, timer);

  std::cout << "V_raw = " << raw.visibility << " +- " << raw.visibility_err << "\n";
  std::cout << "V_sub = " << sub.visibility << " +- " << sub.visibility_err << "\n";
  return 0;
}

int cmd_sweep(const std::string &config_path, const std::vector<double> &powers, bool with_mc,
              long long gates, std::uint64_t seed, const std::string &out_dir, int threads,
              const std::string &command) {
  RunTimer timer;
  std::string hash;
  ExperimentConfig cfg = load_config(config_path, hash);

  const std::vector<analysis::SweepRow> rows = analysis::sweep_mu(cfg, powers);
  std::vector<double> mc_c, mc_err;
  if (with_mc) {
    for (std::size_t i = 0; i < powers.size(); ++i) {
      ExperimentConfig at_p = cfg;
      at_p.pump.relative_power = powers[i];
      mc::SimOptions opts = mc::sim_options(at_p);
      opts.threads = threads;
      opts.stream_base = i * 1000000ull;
      const mc::GateBatchResult res = mc::simulate_gates(at_p, gates, seed, opts);
      try {
        mc_c.push_back(tia::measured_c(res.histogram));
        mc_err.push_back(tia::measured_c_error(res.histogram));
      } catch (const std::exception &) {
        mc_c.push_back(std::nan(""));
        mc_err.push_back(std::nan(""));
      }
    }
  }

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  io::write_text_file((dir / "sweep.csv").string(), io::sweep_csv(rows, mc_c, mc_err));

  io::ManifestInfo info;
  info.command = command;
  info.config_path = config_path;
  info.config_hash = hash;
  info.seed = seed;
  info.outputs = {(dir / "sweep.csv").string()};
  write_manifest(dir, info, timer);

  std::cout << "wrote " << rows.size() << " sweep rows to " << (dir / "sweep.csv").string()
            << "\n";
  return 0;
}

int cmd_fit(const std::string &scan_path, const std::string &out_dir,
            const std::string &command) {
  RunTimer timer;
  const std::string text = io::read_text_file(scan_path);
  const mc::FringeScan scan = io::parse_fringe_scan_csv(text);
  const analysis::FitResult raw = analysis::fit_fringe(scan, analysis::FitModel::Raw);
  std::string report = io::fit_report(raw, "raw");
  if (scan.accidental_per_start > 0.0) {
    const analysis::FitResult sub = analysis::fit_fringe(scan, analysis::FitModel::Subtracted);
    report += io::fit_report(sub, "subtracted");
  }
  std::cout << report;

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  io::write_text_file((dir / "fit_report.txt").string(), report);

  io::ManifestInfo info;
  info.command = command;
  info.config_path = scan_path;
  info.config_hash = io::fnv1a_hex(text);
  info.outputs = {(dir / "fit_report.txt").string()};
  write_manifest(dir, info, timer);
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Event-level simulator and analysis toolkit for pulsed photon-pair "
               "time-bin interference experiments"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir = "timebin_out", dump_path, scan_path, powers_arg;
  long long gates = 10000000, gates_per_point = 10000000, sweep_gates = 20000000;
  int points = 20;
  std::uint64_t seed = kDefaultSeed;
  double smf_km = 0.0;
  int threads = default_threads();
  bool with_mc = false;

  auto *correlate = app.add_subcommand(
      "correlate", "Time-correlation measurement without interferometers");
  correlate->add_option("--config", config_path, "experiment config (INI)")->required();
  correlate->add_option("--gates", gates, "number of detector gates");
  correlate->add_option("--seed", seed, "RNG seed");
  correlate->add_option("--out-dir", out_dir, "output directory");
  correlate->add_option("--threads", threads, "worker thread cap");
  correlate->add_option("--dump-events", dump_path, "raw event stream file");

  auto *fringe = app.add_subcommand("fringe", "Two-photon interference fringe scan");
  fringe->add_option("--config", config_path, "experiment config (INI)")->required();
  fringe->add_option("--points", points, "number of phase points");
  fringe->add_option("--gates-per-point", gates_per_point, "gates per phase point");
  fringe->add_option("--seed", seed, "RNG seed");
  fringe->add_option("--smf-km", smf_km, "insert this much fiber in both arms");
  fringe->add_option("--out-dir", out_dir, "output directory");
  fringe->add_option("--threads", threads, "worker thread cap");

  auto *sweep = app.add_subcommand("sweep", "Coincidence ratio versus pump power");
  sweep->add_option("--config", config_path, "experiment config (INI)")->required();
  sweep->add_option("--powers", powers_arg, "comma-separated relative powers")->required();
  sweep->add_flag("--mc", with_mc, "add Monte Carlo confirmation columns");
  sweep->add_option("--gates", sweep_gates, "gates per Monte Carlo point");
  sweep->add_option("--seed", seed, "RNG seed");
  sweep->add_option("--out-dir", out_dir, "output directory");
  sweep->add_option("--threads", threads, "worker thread cap");

  auto *fit = app.add_subcommand("fit", "Refit a previously written fringe scan CSV");
  fit->add_option("--scan", scan_path, "fringe scan CSV path")->required();
  fit->add_option("--out-dir", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = joined_command(argc, argv);
  try {
    if (correlate->parsed()) {
      if (gates <= 0) {
        std::cerr << "error: --gates must be positive\n";
        return 2;
      }
      return cmd_correlate(config_path, gates, seed, out_dir, threads, dump_path, command);
    }
    if (fringe->parsed()) {
      if (points < 5) {
        std::cerr << "error: --points must be at least 5\n";
        return 2;
      }
      if (gates_per_point <= 0) {
        std::cerr << "error: --gates-per-point must be positive\n";
        return 2;
      }
      return cmd_fringe(config_path, points, gates_per_point, seed, smf_km, out_dir, threads,
                        command);
    }
    if (sweep->parsed()) {
      std::vector<double> powers;
      std::stringstream ss(powers_arg);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) powers.push_back(std::stod(tok));
      }
      if (powers.empty()) {
        std::cerr << "error: --powers list is empty\n";
        return 2;
      }
      return cmd_sweep(config_path, powers, with_mc, sweep_gates, seed, out_dir, threads,
                       command);
    }
    if (fit->parsed()) return cmd_fit(scan_path, out_dir, command);
  } catch (const io::ConfigParseException &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error &e) {
    std::cerr << "model inconsistency: " << e.what() << "\n";
    return 3;
  } catch (const std::runtime_error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
