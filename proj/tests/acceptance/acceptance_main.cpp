// Acceptance suite: end-to-end checks of the simulator against its
// closed-form model and the reference operating points. Prints one
// PASS/FAIL line per criterion; exit code is the number of failures.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "timebin/analysis.hpp"
#include "timebin/csvio.hpp"
#include "timebin/detection.hpp"
#include "timebin/ini.hpp"
#include "timebin/montecarlo.hpp"
#include "timebin/rates.hpp"

using namespace timebin;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string &detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char *pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

ExperimentConfig load(const char *name) {
  std::vector<std::string> warnings;
  return io::load_experiment_config(std::string(TIMEBIN_CONFIG_DIR) + "/" + name, nullptr,
                                    &warnings);
}

std::vector<double> phase_grid(int n) {
  std::vector<double> t(n);
  for (int k = 0; k < n; ++k) t[k] = 2.0 * M_PI * k / n;
  return t;
}

struct ScanOutcome {
  mc::FringeScan scan;
  analysis::FitResult raw;
  analysis::FitResult sub;
  double c_s_per_gate = 0.0;
};

ScanOutcome run_scan(const ExperimentConfig &cfg, long long gates_per_point,
                     std::uint64_t seed) {
  mc::SimOptions opts = mc::sim_options(cfg);
  ScanOutcome out;
  out.scan = mc::run_fringe_scan(cfg, phase_grid(20), gates_per_point, seed, opts);
  out.raw = analysis::fit_fringe(out.scan, analysis::FitModel::Raw);
  out.sub = analysis::fit_fringe(out.scan, analysis::FitModel::Subtracted);
  double starts = 0.0, gates = 0.0;
  for (const auto &p : out.scan.points) {
    starts += static_cast<double>(p.n_starts);
    gates += static_cast<double>(p.n_gates);
  }
  out.c_s_per_gate = starts / gates;
  return out;
}

double subtracted_peak_per_gate(const ScanOutcome &s) {
  return s.sub.amplitude * (1.0 + s.sub.visibility) * s.c_s_per_gate;
}

double subtracted_peak_relative_error(const ScanOutcome &s) {
  const double a = s.sub.amplitude_err / s.sub.amplitude;
  const double v = s.sub.visibility_err / (1.0 + s.sub.visibility);
  return std::sqrt(a * a + v * v);
}

// ---------------------------------------------------------------------------

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load("reference_correlation.ini");
  const long long gates = 100000000; // >= 1e7 required; more for tight errors
  const mc::GateBatchResult res = mc::simulate_gates(cfg, gates, 11, mc::sim_options(cfg));
  const double c = tia::measured_c(res.histogram);
  const double c_err = tia::measured_c_error(res.histogram);

  const double n = static_cast<double>(res.n_gates);
  const model::ExperimentModel m = model::build_model(cfg);
  const model::CorrelatedFractions frac = model::estimate_correlated_fraction(
      c, res.singles_s / n, res.singles_i / n, m.signal.alpha, m.idler.alpha, m.signal.dark,
      m.idler.dark);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const bool pass = c > 3.5 && c < 4.5 && frac.fraction_idler > 0.40 &&
                    frac.fraction_idler < 0.50 && secs < 60.0;
  report(1, pass,
         fmt("correlation C = %.3f +- %.3f (target 4.0 +- 0.5), idler correlated fraction "
             "%.3f (target 0.45 +- 0.05), %.1f s for %lld gates",
             c, c_err, frac.fraction_idler, secs, gates));
}

void criterion_2() {
  const ExperimentConfig cfg = load("reference_correlation.ini");
  const analysis::RateContext ctx = analysis::rate_context(cfg);
  const double nan = std::nan("");
  const std::vector<analysis::SweepObservation> anchors = {
      {nan, 0.13, 4.0, 0.45, 0.5, 0.05},
      {nan, 0.01, 8.3, nan, 1.5, 1.0},
  };
  const analysis::NoiseFit fit = analysis::fit_noise_coefficients(anchors, ctx);
  const double p01 = analysis::solve_power_for_mu_idler(0.01, fit.mu_pair_ref,
                                                        fit.mu_noise_idler_ref, 2.0, 1.0);
  const analysis::CoincidenceModelPoint at01 =
      analysis::coincidence_model(p01, fit.mu_pair_ref, fit.mu_noise_idler_ref, ctx);

  // Monte Carlo at the fitted operating point.
  ExperimentConfig low = cfg;
  low.source.mu_pair_ref = fit.mu_pair_ref;
  low.source.mu_noise_idler_ref =
      fit.mu_noise_idler_ref / low.source.noise_polarized_fraction;
  low.source.mu_noise_signal_ref = ctx.signal_noise_ratio * low.source.mu_noise_idler_ref;
  low.pump.relative_power = p01;
  const model::RatePrediction pred = model::predict_rates(low, 0.0);
  const mc::GateBatchResult res =
      mc::simulate_gates(low, 400000000, 13, mc::sim_options(low));
  const double c_mc = tia::measured_c(res.histogram);
  const double c_err = tia::measured_c_error(res.histogram);

  const bool in_band = at01.c_value > 6.8 && at01.c_value < 9.8;
  const bool mc_ok = std::abs(c_mc - pred.c_ratio) < 3.0 * c_err;
  report(2, in_band && mc_ok,
         fmt("fitted model C(mu_i = 0.01) = %.2f (band [6.8, 9.8]); MC %.2f +- %.2f vs "
             "analytic %.2f",
             at01.c_value, c_mc, c_err, pred.c_ratio));
}

ScanOutcome g_base_scan;   // reference fringe, no extra fiber
ScanOutcome g_smf_scan;    // with 10 km per arm

void criterion_3() {
  const ExperimentConfig cfg = load("reference_fringe.ini");
  g_base_scan = run_scan(cfg, 300000000, 17);
  const double v = g_base_scan.raw.visibility;
  const double verr = g_base_scan.raw.visibility_err;
  const bool pass = v > 0.564 && v < 0.664;
  report(3, pass,
         fmt("raw fringe visibility %.4f +- %.4f (target 0.614 +- 0.05), signal singles "
             "%.2e per gate",
             v, verr, g_base_scan.c_s_per_gate));
}

void criterion_4() {
  const ExperimentConfig cfg = load("reference_fringe.ini");
  const double v_analytic = model::predict_rates(cfg, 0.0).v_sub;
  const double v = g_base_scan.sub.visibility;
  const double verr = g_base_scan.sub.visibility_err;
  // The fitted value carries counting noise; require statistical consistency
  // with the >= 0.98 floor rather than a hard cut on a noisy draw.
  const bool pass = v_analytic >= 0.98 && v + 3.0 * verr >= 0.98 && v - 3.0 * verr <= 1.0;
  report(4, pass,
         fmt("subtracted visibility: analytic %.4f (floor 0.98), fitted %.4f +- %.4f", v_analytic,
             v, verr));
}

void criterion_5() {
  ExperimentConfig cfg = load("reference_fringe.ini");
  cfg.channel_signal.length_km = 10.0;
  cfg.channel_idler.length_km = 10.0;
  g_smf_scan = run_scan(cfg, 300000000, 19);

  const ExperimentConfig base = load("reference_fringe.ini");
  const model::RatePrediction p0 = model::predict_rates(base, 0.0);
  const model::RatePrediction p1 = model::predict_rates(cfg, 0.0);
  const double drop_analytic =
      10.0 * std::log10((p0.fringe_max - p0.r_um) / (p1.fringe_max - p1.r_um));
  const double dv_analytic = std::abs(p1.v_sub - p0.v_sub);

  const double peak0 = subtracted_peak_per_gate(g_base_scan);
  const double peak1 = subtracted_peak_per_gate(g_smf_scan);
  const double drop_mc = 10.0 * std::log10(peak0 / peak1);
  const double drop_err = 10.0 / std::log(10.0) *
                          std::sqrt(std::pow(subtracted_peak_relative_error(g_base_scan), 2) +
                                    std::pow(subtracted_peak_relative_error(g_smf_scan), 2));

  const double dv = std::abs(g_smf_scan.sub.visibility - g_base_scan.sub.visibility);
  const double dv_err = std::hypot(g_smf_scan.sub.visibility_err,
                                   g_base_scan.sub.visibility_err);

  const bool pass = drop_analytic > 4.1 && drop_analytic < 5.1 &&
                    std::abs(drop_mc - drop_analytic) < 3.0 * drop_err &&
                    dv_analytic < 0.01 && dv < 0.01 + 3.0 * dv_err;
  report(5, pass,
         fmt("10 km per arm: coincidence drop %.2f dB analytic / %.2f +- %.2f dB MC (band "
             "[4.1, 5.1]); V_sub change %.4f analytic, %.3f +- %.3f fitted",
             drop_analytic, drop_mc, drop_err, dv_analytic, dv, dv_err));
}

void criterion_6() {
  // Counterfactual wide-band source (10 nm ~ 1246 GHz at 1551 nm) on the
  // same 10-km spans.
  ExperimentConfig cfg = load("reference_fringe.ini");
  cfg.channel_signal.length_km = 10.0;
  cfg.channel_idler.length_km = 10.0;
  cfg.channel_signal.bandwidth_ghz = 1246.227;
  cfg.channel_idler.bandwidth_ghz = 1246.227;

  const model::ExperimentModel m = model::build_model(cfg);
  const bool flagged = m.signal.overlap_flag && m.idler.overlap_flag;

  const model::RatePrediction wide = model::predict_rates(cfg, 0.0);
  ExperimentConfig narrow_cfg = load("reference_fringe.ini");
  narrow_cfg.channel_signal.length_km = 10.0;
  narrow_cfg.channel_idler.length_km = 10.0;
  const model::RatePrediction narrow = model::predict_rates(narrow_cfg, 0.0);
  const double drop_analytic = narrow.v_raw - wide.v_raw;

  const ScanOutcome wide_scan = run_scan(cfg, 600000000, 23);
  const double drop_mc = g_smf_scan.raw.visibility - wide_scan.raw.visibility;
  const double drop_err =
      std::hypot(g_smf_scan.raw.visibility_err, wide_scan.raw.visibility_err);

  const bool pass = flagged && drop_analytic > 0.20 && drop_mc > 0.20;
  report(6, pass,
         fmt("10-nm counterfactual: overlap flag %s, raw visibility drop %.3f analytic / "
             "%.3f +- %.3f simulated (threshold 0.20)",
             flagged ? "set" : "missing", drop_analytic, drop_mc, drop_err));
}

void criterion_7() {
  RngStream gen(20250808, 0);
  int checks = 0, passed = 0;
  for (int trial = 0; trial < 25; ++trial) {
    ExperimentConfig cfg = load("reference_fringe.ini");
    const bool with_if = trial % 2 == 0;
    cfg.source.mu_pair_ref = 0.01 + 0.09 * gen.uniform();
    cfg.source.mu_noise_signal_ref = 0.02 + 0.25 * gen.uniform();
    cfg.source.mu_noise_idler_ref = 0.02 + 0.25 * gen.uniform();
    cfg.pump.pump_phase_rad = gen.uniform() * M_PI;
    cfg.channel_signal.excess_loss_db = 2.0 + 6.0 * gen.uniform();
    cfg.channel_idler.excess_loss_db = 2.0 + 6.0 * gen.uniform();
    cfg.channel_signal.length_km = trial % 3 == 0 ? 10.0 : 0.0;
    cfg.channel_idler.length_km = cfg.channel_signal.length_km;
    cfg.detector_signal.efficiency = 0.05 + 0.15 * gen.uniform();
    cfg.detector_idler.efficiency = 0.05 + 0.15 * gen.uniform();
    cfg.detector_signal.dark_count_per_gate = 1e-5 + 2e-4 * gen.uniform();
    cfg.detector_idler.dark_count_per_gate = 1e-5 + 2e-4 * gen.uniform();
    cfg.interferometer_signal.enabled = with_if;
    cfg.interferometer_idler.enabled = with_if;
    cfg.interferometer_signal.phase_rad = gen.uniform() * 2.0 * M_PI;
    cfg.interferometer_signal.extinction_db = -35.0 + 20.0 * gen.uniform();
    cfg.interferometer_idler.extinction_db = -35.0 + 20.0 * gen.uniform();
    cfg.detector_signal.gating = with_if ? GateMode::Slot2Only : GateMode::EveryBin;
    cfg.detector_idler.gating = cfg.detector_signal.gating;
    const double theta_i = gen.uniform() * 2.0 * M_PI;
    cfg.interferometer_idler.phase_rad = theta_i;

    const model::ExperimentModel m = model::build_model(cfg);
    const model::RatePrediction pred = model::predict_rates(m, theta_i);
    const long long gates = 4000000;
    mc::SimOptions opts = mc::sim_options(cfg);
    opts.stream_base = static_cast<std::uint64_t>(trial) * 4096;
    const mc::GateBatchResult res = mc::simulate_gates(m, theta_i, gates, 29, opts);

    const double n = static_cast<double>(gates);
    auto tally = [&](double observed, double expected) {
      ++checks;
      passed += std::abs(observed - expected) < 3.0 * std::sqrt(expected) + 1.0;
    };
    tally(static_cast<double>(res.singles_s), pred.c_s * n);
    tally(static_cast<double>(res.singles_i), pred.c_i * n);
    const auto profile = tia::expected_increment_profile(
        pred.r_m / pred.c_s, pred.c_i, res.histogram.window);
    const double starts = static_cast<double>(res.histogram.n_starts);
    tally(static_cast<double>(res.histogram.at_delay(0)),
          profile[res.histogram.window] * starts);
    double unmatched_expected = 0.0;
    for (int d = -res.histogram.window; d <= res.histogram.window; ++d)
      if (d != 0) unmatched_expected += profile[d + res.histogram.window];
    tally(static_cast<double>(res.histogram.total() - res.histogram.at_delay(0)),
          unmatched_expected * starts);
  }
  const double rate = static_cast<double>(passed) / checks;
  report(7, rate >= 0.95,
         fmt("oracle equivalence on 25 randomized configs: %d / %d 3-sigma checks passed "
             "(%.1f%%, threshold 95%%)",
             passed, checks, 100.0 * rate));
}

void criterion_8() {
  bool pass = true;
  std::string notes;

  // Amplitude normalization within 1e-12.
  RngStream rng(31, 0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto table = model::build_joint_amplitudes(
        (rng.uniform() - 0.5) * 12.0, (rng.uniform() - 0.5) * 12.0,
        (rng.uniform() - 0.5) * 12.0, -35.0 + 20.0 * rng.uniform(),
        -35.0 + 20.0 * rng.uniform());
    double used = 0.0;
    for (int j = 1; j <= 3; ++j)
      for (int k = 1; k <= 3; ++k) used += table.prob(j, k);
    worst = std::max(worst, std::abs(used + table.loss_weight - 1.0));
  }
  pass &= worst < 1e-12;
  notes += fmt("normalization %.1e; ", worst);

  // Fringe law: only theta_s + theta_i - phi matters.
  const ExperimentConfig fringe = load("reference_fringe.ini");
  double law_dev = 0.0;
  for (int t = 0; t < 10; ++t) {
    const double delta = (rng.uniform() - 0.5) * 4.0;
    const double theta_i = rng.uniform() * 2.0 * M_PI;
    ExperimentConfig shifted = fringe;
    shifted.interferometer_signal.phase_rad += delta;
    const double r0 = model::predict_rates(fringe, theta_i).r_m;
    const double r1 = model::predict_rates(shifted, theta_i - delta).r_m;
    law_dev = std::max(law_dev, std::abs(r0 - r1) / r0);
  }
  pass &= law_dev < 1e-9;
  notes += fmt("fringe law %.1e; ", law_dev);

  // No-signaling: per-point signal and idler singles flat over the scan.
  double chi2 = 0.0;
  double mean_cs = 0.0;
  for (const auto &p : g_base_scan.scan.points)
    mean_cs += static_cast<double>(p.n_starts) / g_base_scan.scan.points.size();
  for (const auto &p : g_base_scan.scan.points) {
    const double d = static_cast<double>(p.n_starts) - mean_cs;
    chi2 += d * d / mean_cs;
  }
  const double chi2_limit = 43.8; // dof 19, p = 0.001
  pass &= chi2 < chi2_limit;
  notes += fmt("no-signaling chi2 %.1f/19; ", chi2);

  // Loss thinning: scaling one arm's transmittance rescales its counts and
  // leaves the subtracted visibility in place.
  ExperimentConfig thinned = fringe;
  thinned.channel_signal.excess_loss_db += 3.0103;
  const ScanOutcome thin_scan = run_scan(thinned, 30000000, 37);
  const ScanOutcome base_small = run_scan(fringe, 30000000, 38);
  const double ratio = thin_scan.c_s_per_gate / base_small.c_s_per_gate;
  const double ratio_expected =
      model::predict_rates(thinned, 0.0).c_s / model::predict_rates(fringe, 0.0).c_s;
  const double ratio_err = ratio * std::sqrt(2.0 / (base_small.c_s_per_gate * 6e8));
  pass &= std::abs(ratio - ratio_expected) < 3.0 * ratio_err;
  const double dv_analytic =
      std::abs(model::predict_rates(thinned, 0.0).v_sub - model::predict_rates(fringe, 0.0).v_sub);
  const double dv = std::abs(thin_scan.sub.visibility - base_small.sub.visibility);
  const double dv_err =
      std::hypot(thin_scan.sub.visibility_err, base_small.sub.visibility_err);
  pass &= dv_analytic < 1e-3 && dv < 0.01 + 3.0 * dv_err;
  notes += fmt("thinning ratio %.4f vs %.4f, dV_sub %.3f; ", ratio, ratio_expected, dv);

  // Inversion round trip at 1e-9.
  const double alpha_s = 0.0159621, alpha_i = 0.01852352;
  const double c_s = model::singles_rate(0.059, 0.0781, alpha_s, 4e-5);
  const double c_i = model::singles_rate(0.059, 0.071, alpha_i, 7.5e-5);
  const double c = model::coincidence_ratio(0.059, alpha_s, alpha_i, c_s, c_i);
  const auto inv = model::estimate_correlated_fraction(c, c_s, c_i, alpha_s, alpha_i, 4e-5,
                                                       7.5e-5);
  const double inv_dev = std::abs(inv.mu_pair - 0.059) / 0.059;
  pass &= inv_dev < 1e-9;
  notes += fmt("inversion %.1e; ", inv_dev);

  // Determinism: byte-identical repeated runs.
  const ExperimentConfig corr = load("reference_correlation.ini");
  const mc::GateBatchResult r1 = mc::simulate_gates(corr, 2000000, 41, mc::sim_options(corr));
  const mc::GateBatchResult r2 = mc::simulate_gates(corr, 2000000, 41, mc::sim_options(corr));
  const bool identical = tia::histogram_csv(r1.histogram, "x") ==
                             tia::histogram_csv(r2.histogram, "x") &&
                         r1.singles_s == r2.singles_s && r1.singles_i == r2.singles_i;
  pass &= identical;
  notes += fmt("determinism %s", identical ? "byte-identical" : "MISMATCH");

  report(8, pass, notes);
}

} // namespace

int main() {
  std::printf("acceptance suite: event-level simulator vs closed-form model\n");
  const auto t0 = std::chrono::steady_clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d of 8 criteria failed (%.1f s total)\n", g_failures, secs);
  return g_failures;
}
