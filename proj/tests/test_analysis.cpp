#include <doctest.h>

#include <cmath>
#include <vector>

#include "timebin/analysis.hpp"
#include "timebin/csvio.hpp"
#include "timebin/ini.hpp"
#include "timebin/rng.hpp"

using namespace timebin;
using namespace timebin::analysis;

namespace {

ExperimentConfig load(const char *name) {
  std::vector<std::string> warnings;
  return io::load_experiment_config(std::string(TIMEBIN_CONFIG_DIR) + "/" + name, nullptr,
                                    &warnings);
}

mc::FringeScan synthetic_scan(double amp, double vis, double theta0, double floor,
                              int points, double err) {
  mc::FringeScan scan;
  for (int k = 0; k < points; ++k) {
    mc::ScanPoint p;
    p.theta = 2.0 * M_PI * k / points;
    p.rate_per_start = floor + amp * (1.0 + vis * std::cos(p.theta - theta0));
    p.rate_err = err;
    scan.points.push_back(p);
  }
  scan.accidental_per_start = floor;
  scan.accidental_err = err * 0.1;
  return scan;
}

} // namespace

TEST_CASE("noiseless synthetic fringe round-trips exactly") {
  const mc::FringeScan scan = synthetic_scan(3.2e-3, 0.614, 0.7, 0.0, 20, 1e-5);
  const FitResult fit = fit_fringe(scan, FitModel::Raw);
  CHECK(fit.converged);
  CHECK(fit.visibility == doctest::Approx(0.614).epsilon(1e-6));
  CHECK(fit.amplitude == doctest::Approx(3.2e-3).epsilon(1e-6));
  CHECK(fit.theta0 == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(fit.chi2 < 1e-12);
}

TEST_CASE("subtracted fit removes the accidental floor") {
  const mc::FringeScan scan = synthetic_scan(2.0e-3, 0.99, -1.1, 1.3e-3, 24, 1e-5);
  const FitResult raw = fit_fringe(scan, FitModel::Raw);
  const FitResult sub = fit_fringe(scan, FitModel::Subtracted);
  CHECK(sub.visibility == doctest::Approx(0.99).epsilon(1e-5));
  CHECK(raw.visibility < sub.visibility); // the floor dilutes the raw contrast
  const double expected_raw = 2.0e-3 * 0.99 / (2.0e-3 + 1.3e-3);
  CHECK(raw.visibility == doctest::Approx(expected_raw).epsilon(1e-4));
}

TEST_CASE("degenerate scans are rejected") {
  mc::FringeScan flat;
  for (int k = 0; k < 8; ++k) flat.points.push_back({0.3, 1.0, 0.1, 0.0, 0, 0, 0});
  CHECK_THROWS_AS(fit_fringe(flat, FitModel::Raw), std::invalid_argument);

  mc::FringeScan few = synthetic_scan(1e-3, 0.5, 0.0, 0.0, 4, 1e-5);
  CHECK_THROWS_AS(fit_fringe(few, FitModel::Raw), std::invalid_argument);
}

TEST_CASE("fit coverage study: errors are honest at counting statistics") {
  // Generator independent of the fitter: Poisson counts around the known
  // fringe, 20 points, about 1e6-gate exposures.
  RngStream rng(2718, 0);
  const double true_v = 0.62;
  const double amp_counts = 300.0; // mean counts per point at the fringe mid
  int covered = 0;
  double bias_sum = 0.0;
  double sigma_sum = 0.0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    mc::FringeScan scan;
    for (int k = 0; k < 20; ++k) {
      mc::ScanPoint p;
      p.theta = 2.0 * M_PI * k / 20;
      const double mean = amp_counts * (1.0 + true_v * std::cos(p.theta - 1.234));
      const double counts = static_cast<double>(rng.poisson(mean));
      p.rate_per_start = counts;
      p.rate_err = std::sqrt(std::max(counts, 1.0));
      scan.points.push_back(p);
    }
    const FitResult fit = fit_fringe(scan, FitModel::Raw);
    REQUIRE(fit.converged);
    covered += std::abs(fit.visibility - true_v) < 3.0 * fit.visibility_err;
    bias_sum += fit.visibility - true_v;
    sigma_sum += fit.visibility_err;
  }
  CHECK(covered >= 990); // 3-sigma coverage in at least 99% of trials
  const double mean_bias = bias_sum / trials;
  const double mean_sigma = sigma_sum / trials;
  CHECK(std::abs(mean_bias) < mean_sigma / 3.0);
}

TEST_CASE("accidental subtraction clamps and propagates errors") {
  CHECK(subtract_accidentals(4.5, 0.0) == doctest::Approx(4.5));
  CHECK(subtract_accidentals(2.0, 2.0) == doctest::Approx(0.0));
  CHECK(subtract_accidentals(1.0, 3.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(subtract_accidentals(-1.0, 0.0), std::invalid_argument);
  CHECK(subtract_accidentals_error(3.0, 4.0) == doctest::Approx(5.0));
}

TEST_CASE("noise-coefficient fit recovers synthetic truth within 1%") {
  RateContext ctx;
  ctx.alpha_s = 0.0253;
  ctx.alpha_i = 0.0294;
  ctx.d_s = 4e-5;
  ctx.d_i = 7.5e-5;
  ctx.signal_noise_ratio = 1.1;

  const double a_true = 0.059, b_true = 0.071;
  std::vector<SweepObservation> obs;
  for (const double p : {0.15, 0.3, 0.5, 0.75, 1.0}) {
    const CoincidenceModelPoint m = coincidence_model(p, a_true, b_true, ctx);
    const double nan = std::nan("");
    obs.push_back({p, nan, m.c_value, nan, 0.05, 1.0});
  }
  obs.push_back({1.0, std::nan(""), std::nan(""), 0.059 / 0.13, 1.0, 0.01});

  const NoiseFit fit = fit_noise_coefficients(obs, ctx);
  CHECK(fit.converged);
  CHECK(fit.mu_pair_ref == doctest::Approx(a_true).epsilon(0.01));
  CHECK(fit.mu_noise_idler_ref == doctest::Approx(b_true).epsilon(0.01));
}

TEST_CASE("noise-coefficient fit needs at least two constraints") {
  RateContext ctx;
  std::vector<SweepObservation> one = {
      {1.0, std::nan(""), 4.0, std::nan(""), 1.0, 1.0}};
  CHECK_THROWS_AS(fit_noise_coefficients(one, ctx), std::invalid_argument);
}

TEST_CASE("fit through the quoted anchors reproduces both operating points") {
  const ExperimentConfig cfg = load("reference_correlation.ini");
  const RateContext ctx = rate_context(cfg);
  const double nan = std::nan("");
  // Anchors: C ~ 4 with 45% idler fraction at mu_i = 0.13; C = 8.3 at 0.01.
  std::vector<SweepObservation> obs = {
      {nan, 0.13, 4.0, 0.45, 0.5, 0.05},
      {nan, 0.01, 8.3, nan, 1.5, 1.0},
  };
  const NoiseFit fit = fit_noise_coefficients(obs, ctx);
  CHECK(fit.converged);

  const double p13 =
      solve_power_for_mu_idler(0.13, fit.mu_pair_ref, fit.mu_noise_idler_ref, 2.0, 1.0);
  const CoincidenceModelPoint at13 =
      coincidence_model(p13, fit.mu_pair_ref, fit.mu_noise_idler_ref, ctx);
  CHECK(at13.c_value == doctest::Approx(4.0).epsilon(0.125));
  CHECK(at13.frac_idler == doctest::Approx(0.45).epsilon(0.12));

  const double p01 =
      solve_power_for_mu_idler(0.01, fit.mu_pair_ref, fit.mu_noise_idler_ref, 2.0, 1.0);
  const CoincidenceModelPoint at01 =
      coincidence_model(p01, fit.mu_pair_ref, fit.mu_noise_idler_ref, ctx);
  CHECK(at01.c_value > 6.8);
  CHECK(at01.c_value < 9.8);
}

TEST_CASE("sweep rows follow the expected shape") {
  const ExperimentConfig cfg = load("reference_correlation.ini");
  std::vector<double> powers;
  for (double p = 0.0; p <= 1.4001; p += 0.05) powers.push_back(p);
  const std::vector<SweepRow> rows = sweep_mu(cfg, powers);

  CHECK(rows.front().c_value == doctest::Approx(1.0)); // dark-count dominated limit

  // fractions rise monotonically with pump power
  for (std::size_t i = 2; i < rows.size(); ++i) {
    CHECK(rows[i].frac_idler >= rows[i - 1].frac_idler);
    CHECK(rows[i].frac_signal >= rows[i - 1].frac_signal);
  }

  // C has a single interior maximum over the scanned range
  std::size_t argmax = 0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].c_value > rows[argmax].c_value) argmax = i;
  CHECK(argmax > 0);
  CHECK(argmax < rows.size() - 1);
  for (std::size_t i = 1; i <= argmax; ++i) CHECK(rows[i].c_value >= rows[i - 1].c_value - 1e-12);
  for (std::size_t i = argmax + 1; i < rows.size(); ++i)
    CHECK(rows[i].c_value <= rows[i - 1].c_value + 1e-12);

  // the mu_i = 0.13 operating point carries C ~ 4 and a 45% idler fraction
  const SweepRow &unit = rows[20]; // P = 1.0
  CHECK(unit.pump_power == doctest::Approx(1.0));
  CHECK(unit.mu_idler == doctest::Approx(0.13).epsilon(1e-9));
  CHECK(unit.c_value == doctest::Approx(4.0).epsilon(0.125));
  CHECK(unit.frac_idler == doctest::Approx(0.45).epsilon(0.05));

  CHECK_THROWS_AS(sweep_mu(cfg, {}), std::invalid_argument);
  CHECK_THROWS_AS(sweep_mu(cfg, {-0.5}), std::invalid_argument);
}

TEST_CASE("fringe scan CSV round trip preserves the fit") {
  const mc::FringeScan scan = synthetic_scan(2.5e-3, 0.71, 0.4, 0.9e-3, 20, 2e-5);
  const std::string text = io::fringe_scan_csv(scan);
  const mc::FringeScan back = io::parse_fringe_scan_csv(text);
  REQUIRE(back.points.size() == scan.points.size());
  CHECK(back.accidental_per_start ==
        doctest::Approx(scan.accidental_per_start).epsilon(1e-10));

  const FitResult f0 = fit_fringe(scan, FitModel::Subtracted);
  const FitResult f1 = fit_fringe(back, FitModel::Subtracted);
  CHECK(f0.visibility == doctest::Approx(f1.visibility).epsilon(1e-9));
}

TEST_CASE("malformed scan CSV is rejected with a line number") {
  CHECK_THROWS_AS(io::parse_fringe_scan_csv("not,a,header\n1,2,3,4\n"),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      io::parse_fringe_scan_csv("theta_rad,rate,rate_err,singles\n0.1,oops,3,4\n"),
      doctest::Contains("line 2"), std::invalid_argument);
  CHECK_THROWS_AS(io::parse_fringe_scan_csv("theta_rad,rate,rate_err,singles\n0.1,2,3\n"),
                  std::invalid_argument);
}
