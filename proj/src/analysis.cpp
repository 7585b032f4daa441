#include "timebin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "timebin/rates.hpp"

namespace timebin::analysis {

namespace {

// Solve the symmetric positive system M x = b (n <= 3) by Gaussian
// elimination with partial pivoting.
bool solve_linear(int n, double m[3][3], const double b[3], double x[3]) {
  double a[3][4];
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) a[r][c] = m[r][c];
    a[r][n] = b[r];
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-300) return false;
    if (pivot != col)
      for (int c = 0; c <= n; ++c) std::swap(a[pivot][c], a[col][c]);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  for (int r = 0; r < n; ++r) x[r] = a[r][n] / a[r][r];
  return true;
}

bool invert3(const double m[3][3], double inv[3][3]) {
  double id[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int c = 0; c < 3; ++c) {
    double col[3] = {id[0][c], id[1][c], id[2][c]};
    double x[3];
    double work[3][3];
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) work[r][k] = m[r][k];
    if (!solve_linear(3, work, col, x)) return false;
    for (int r = 0; r < 3; ++r) inv[r][c] = x[r];
  }
  return true;
}

struct FitData {
  std::vector<double> theta, y, w; // w = 1/sigma^2
};

double chi2_of(const FitData &d, double amp, double vis, double theta0) {
  double chi2 = 0.0;
  for (std::size_t k = 0; k < d.theta.size(); ++k) {
    const double model = amp * (1.0 + vis * std::cos(d.theta[k] - theta0));
    const double r = d.y[k] - model;
    chi2 += d.w[k] * r * r;
  }
  return chi2;
}

} // namespace

double subtract_accidentals(double rate, double accidental) {
  if (rate < 0.0 || accidental < 0.0)
    throw std::invalid_argument("subtract_accidentals: rates must be non-negative");
  return std::max(rate - accidental, 0.0);
}

double subtract_accidentals_error(double rate_err, double accidental_err) {
  return std::hypot(rate_err, accidental_err);
}

FitResult fit_fringe(const mc::FringeScan &scan, FitModel model) {
  const auto &pts = scan.points;
  if (pts.size() < 5) throw std::invalid_argument("fit_fringe: need at least 5 points");

  FitData d;
  d.theta.reserve(pts.size());
  d.y.reserve(pts.size());
  d.w.reserve(pts.size());
  for (const auto &p : pts) {
    d.theta.push_back(p.theta);
    double y = p.rate_per_start;
    double err = p.rate_err;
    if (model == FitModel::Subtracted) {
      y -= scan.accidental_per_start; // unclamped; keeps the fit unbiased
      err = subtract_accidentals_error(p.rate_err, scan.accidental_err);
    }
    if (err <= 0.0) throw std::invalid_argument("fit_fringe: non-positive rate error");
    d.y.push_back(y);
    d.w.push_back(1.0 / (err * err));
  }

  const auto [tmin_it, tmax_it] = std::minmax_element(d.theta.begin(), d.theta.end());
  if (*tmax_it - *tmin_it < 1.5 * M_PI)
    throw std::invalid_argument("fit_fringe: scan must span at least one fringe period");

  // Derivative-free seeding from the data extremes.
  std::size_t argmax = 0;
  double ymin = d.y[0], ymax = d.y[0];
  for (std::size_t k = 1; k < d.y.size(); ++k) {
    if (d.y[k] > ymax) {
      ymax = d.y[k];
      argmax = k;
    }
    ymin = std::min(ymin, d.y[k]);
  }
  double amp = std::max(0.5 * (ymax + ymin), 1e-30);
  double vis = std::clamp((ymax - ymin) / std::max(ymax + ymin, 1e-30), 0.0, 1.2);
  double theta0 = d.theta[argmax];

  double chi2 = chi2_of(d, amp, vis, theta0);
  double lambda = 1e-3;
  FitResult out;
  bool converged = false;
  int iter = 0;
  for (; iter < 200 && !converged; ++iter) {
    double jtj[3][3] = {};
    double jtr[3] = {};
    for (std::size_t k = 0; k < d.theta.size(); ++k) {
      const double c = std::cos(d.theta[k] - theta0);
      const double s = std::sin(d.theta[k] - theta0);
      const double model = amp * (1.0 + vis * c);
      const double r = d.y[k] - model;
      const double j[3] = {1.0 + vis * c, amp * c, amp * vis * s};
      for (int a = 0; a < 3; ++a) {
        jtr[a] += d.w[k] * j[a] * r;
        for (int b = 0; b < 3; ++b) jtj[a][b] += d.w[k] * j[a] * j[b];
      }
    }

    bool stepped = false;
    for (int tries = 0; tries < 24 && !stepped; ++tries) {
      double damped[3][3];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          damped[a][b] = jtj[a][b] + (a == b ? lambda * jtj[a][a] : 0.0);
      double delta[3];
      if (!solve_linear(3, damped, jtr, delta)) {
        lambda *= 10.0;
        continue;
      }
      const double amp_t = amp + delta[0];
      const double vis_t = vis + delta[1];
      const double th_t = theta0 + delta[2];
      const double chi2_t = chi2_of(d, amp_t, vis_t, th_t);
      if (chi2_t <= chi2 * (1.0 + 1e-14)) {
        const double pscale = std::sqrt(amp * amp + vis * vis + theta0 * theta0) + 1e-30;
        const double step = std::sqrt(delta[0] * delta[0] + delta[1] * delta[1] +
                                      delta[2] * delta[2]);
        amp = amp_t;
        vis = vis_t;
        theta0 = th_t;
        chi2 = chi2_t;
        lambda = std::max(lambda * 0.1, 1e-14);
        stepped = true;
        if (step / pscale < 1e-10) converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!stepped) {
      converged = chi2 <= 1e-24; // stuck at an exact fit
      break;
    }
  }
  if (!converged && iter >= 200)
    throw std::runtime_error("fit_fringe: no convergence within 200 iterations");
  if (!converged) throw std::runtime_error("fit_fringe: stalled without convergence");

  // Canonical branch: positive visibility, theta0 in (-pi, pi].
  if (vis < 0.0) {
    vis = -vis;
    theta0 += M_PI;
  }
  theta0 = std::remainder(theta0, 2.0 * M_PI);

  double jtj[3][3] = {};
  for (std::size_t k = 0; k < d.theta.size(); ++k) {
    const double c = std::cos(d.theta[k] - theta0);
    const double s = std::sin(d.theta[k] - theta0);
    const double j[3] = {1.0 + vis * c, amp * c, amp * vis * s};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) jtj[a][b] += d.w[k] * j[a] * j[b];
  }
  double cov[3][3];
  if (invert3(jtj, cov)) {
    out.amplitude_err = std::sqrt(std::max(cov[0][0], 0.0));
    out.visibility_err = std::sqrt(std::max(cov[1][1], 0.0));
    out.theta0_err = std::sqrt(std::max(cov[2][2], 0.0));
  }
  out.amplitude = amp;
  out.visibility = vis;
  out.theta0 = theta0;
  out.baseline = model == FitModel::Subtracted ? scan.accidental_per_start : 0.0;
  out.chi2 = chi2;
  out.dof = static_cast<int>(d.theta.size()) - 3;
  out.iterations = iter;
  out.converged = converged;
  return out;
}

RateContext rate_context(const ExperimentConfig &cfg) {
  const model::ExperimentModel m = model::build_model(cfg);
  RateContext ctx;
  ctx.alpha_s = m.signal.alpha;
  ctx.alpha_i = m.idler.alpha;
  ctx.d_s = m.signal.dark;
  ctx.d_i = m.idler.dark;
  ctx.signal_noise_ratio = cfg.source.mu_noise_idler_ref > 0.0
                               ? cfg.source.mu_noise_signal_ref / cfg.source.mu_noise_idler_ref
                               : 1.0;
  ctx.pair_exponent = cfg.source.pair_exponent;
  ctx.noise_exponent = cfg.source.noise_exponent;
  return ctx;
}

double solve_power_for_mu_idler(double mu_idler, double a, double b,
                                double pair_exponent, double noise_exponent) {
  if (mu_idler <= 0.0) return 0.0;
  if (a <= 0.0 && b <= 0.0)
    throw std::invalid_argument("solve_power_for_mu_idler: degenerate coefficients");
  double p = b > 0.0 ? mu_idler / b : std::pow(mu_idler / a, 1.0 / pair_exponent);
  for (int it = 0; it < 80; ++it) {
    const double f = a * std::pow(p, pair_exponent) + b * std::pow(p, noise_exponent) - mu_idler;
    const double df = a * pair_exponent * std::pow(p, pair_exponent - 1.0) +
                      b * noise_exponent * std::pow(p, noise_exponent - 1.0);
    const double step = f / df;
    p -= step;
    if (p <= 0.0) p = 1e-12;
    if (std::abs(step) < 1e-14 * std::max(1.0, p)) break;
  }
  return p;
}

CoincidenceModelPoint coincidence_model(double pump_power, double a, double b,
                                        const RateContext &ctx) {
  CoincidenceModelPoint pt;
  const double mu_c = a * std::pow(pump_power, ctx.pair_exponent);
  const double mu_in = b * std::pow(pump_power, ctx.noise_exponent);
  const double mu_sn = ctx.signal_noise_ratio * mu_in;
  pt.mu_idler = mu_c + mu_in;
  pt.c_s = model::singles_rate(mu_c, mu_sn, ctx.alpha_s, ctx.d_s);
  pt.c_i = model::singles_rate(mu_c, mu_in, ctx.alpha_i, ctx.d_i);
  if (mu_c <= 0.0 && (pt.c_s <= 0.0 || pt.c_i <= 0.0)) {
    pt.c_value = 1.0;
  } else {
    pt.c_value = model::coincidence_ratio(mu_c, ctx.alpha_s, ctx.alpha_i, pt.c_s, pt.c_i);
  }
  pt.frac_signal = mu_c + mu_sn > 0.0 ? mu_c / (mu_c + mu_sn) : 0.0;
  pt.frac_idler = pt.mu_idler > 0.0 ? mu_c / pt.mu_idler : 0.0;
  return pt;
}

NoiseFit fit_noise_coefficients(const std::vector<SweepObservation> &observations,
                                const RateContext &ctx) {
  int informative = 0;
  for (const auto &o : observations)
    informative += (!std::isnan(o.c_value)) + (!std::isnan(o.frac_idler));
  if (informative < 2)
    throw std::invalid_argument("fit_noise_coefficients: underdetermined input");

  auto residuals = [&](double la, double lb, std::vector<double> &r) {
    const double a = std::exp(la), b = std::exp(lb);
    r.clear();
    for (const auto &o : observations) {
      double p = o.pump_power;
      if (std::isnan(p)) {
        if (std::isnan(o.mu_idler))
          throw std::invalid_argument("fit_noise_coefficients: observation lacks P and mu_i");
        p = solve_power_for_mu_idler(o.mu_idler, a, b, ctx.pair_exponent, ctx.noise_exponent);
      }
      const CoincidenceModelPoint m = coincidence_model(p, a, b, ctx);
      if (!std::isnan(o.c_value)) r.push_back((m.c_value - o.c_value) / o.sigma_c);
      if (!std::isnan(o.frac_idler)) r.push_back((m.frac_idler - o.frac_idler) / o.sigma_frac);
    }
  };

  // Seed: treat the largest-mu observation as P=1.
  double seed_mu = 0.1;
  double seed_frac = 0.4;
  for (const auto &o : observations) {
    if (!std::isnan(o.mu_idler)) seed_mu = std::max(seed_mu, o.mu_idler);
    if (!std::isnan(o.frac_idler)) seed_frac = o.frac_idler;
  }
  double la = std::log(std::max(seed_mu * seed_frac, 1e-6));
  double lb = std::log(std::max(seed_mu * (1.0 - seed_frac), 1e-6));

  std::vector<double> r0, r1;
  residuals(la, lb, r0);
  auto norm2 = [](const std::vector<double> &r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
  };
  double cost = norm2(r0);
  double lambda = 1e-3;
  const double h = 1e-6;
  bool converged = false;
  int iter = 0;
  for (; iter < 200 && !converged; ++iter) {
    residuals(la, lb, r0);
    std::vector<double> ra, rb;
    residuals(la + h, lb, ra);
    residuals(la, lb + h, rb);
    double jtj[3][3] = {};
    double jtr[3] = {};
    for (std::size_t k = 0; k < r0.size(); ++k) {
      const double ja = (ra[k] - r0[k]) / h;
      const double jb = (rb[k] - r0[k]) / h;
      jtj[0][0] += ja * ja;
      jtj[0][1] += ja * jb;
      jtj[1][0] += ja * jb;
      jtj[1][1] += jb * jb;
      jtr[0] += -ja * r0[k];
      jtr[1] += -jb * r0[k];
    }
    bool stepped = false;
    for (int tries = 0; tries < 24 && !stepped; ++tries) {
      double damped[3][3] = {{jtj[0][0] * (1.0 + lambda), jtj[0][1], 0},
                             {jtj[1][0], jtj[1][1] * (1.0 + lambda), 0},
                             {0, 0, 1}};
      double delta[3];
      if (!solve_linear(2, damped, jtr, delta)) {
        lambda *= 10.0;
        continue;
      }
      residuals(la + delta[0], lb + delta[1], r1);
      const double cost_t = norm2(r1);
      if (cost_t <= cost * (1.0 + 1e-14)) {
        la += delta[0];
        lb += delta[1];
        const double step = std::hypot(delta[0], delta[1]);
        const double gain = cost - cost_t;
        cost = cost_t;
        lambda = std::max(lambda * 0.1, 1e-14);
        stepped = true;
        if (step < 1e-11 || gain <= 1e-13 * std::max(cost, 1e-300)) converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!stepped) {
      converged = true; // local minimum within numerical resolution
      break;
    }
  }

  NoiseFit fit;
  fit.mu_pair_ref = std::exp(la);
  fit.mu_noise_idler_ref = std::exp(lb);
  fit.pair_exponent = ctx.pair_exponent;
  fit.noise_exponent = ctx.noise_exponent;
  fit.residual_norm = std::sqrt(cost);
  fit.iterations = iter;
  fit.converged = converged;
  return fit;
}

std::vector<SweepRow> sweep_mu(const ExperimentConfig &cfg, const std::vector<double> &powers) {
  if (powers.empty()) throw std::invalid_argument("sweep_mu: empty power list");
  const RateContext ctx = rate_context(cfg);
  // Delivered reference coefficients at P=1.
  ExperimentConfig at_unit = cfg;
  at_unit.pump.relative_power = 1.0;
  const model::DeliveredMeans ref = model::delivered_means(at_unit.pump, at_unit.source);
  std::vector<SweepRow> rows;
  rows.reserve(powers.size());
  for (const double p : powers) {
    if (p < 0.0) throw std::invalid_argument("sweep_mu: negative power");
    const CoincidenceModelPoint m = coincidence_model(p, ref.mu_pair, ref.mu_noise_idler, ctx);
    SweepRow row;
    row.pump_power = p;
    row.mu_idler = m.mu_idler;
    row.c_value = m.c_value;
    row.frac_signal = m.frac_signal;
    row.frac_idler = m.frac_idler;
    rows.push_back(row);
  }
  return rows;
}

} // namespace timebin::analysis
