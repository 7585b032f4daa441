#pragma once

#include <vector>

#include "timebin/config.hpp"
#include "timebin/montecarlo.hpp"

namespace timebin::analysis {

enum class FitModel { Raw, Subtracted };

struct FitResult {
  double amplitude = 0.0;
  double visibility = 0.0;
  double theta0 = 0.0;
  double baseline = 0.0; // accidental floor removed before fitting (Subtracted)
  double amplitude_err = 0.0;
  double visibility_err = 0.0;
  double theta0_err = 0.0;
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;
  bool converged = false;
};

/// Weighted least-squares fit of R(theta) = A * (1 + V cos(theta - theta0))
/// by damped Gauss-Newton iteration (relative step < 1e-10 or 200
/// iterations). For FitModel::Subtracted the pooled accidental estimate is
/// removed from the rates (without clamping, to keep the estimator unbiased)
/// and the fit runs on the difference.
FitResult fit_fringe(const mc::FringeScan &scan, FitModel model);

/// Accidental-subtracted rate, clamped to zero for reporting.
double subtract_accidentals(double rate, double accidental);
double subtract_accidentals_error(double rate_err, double accidental_err);

/// One calibration observation: any of the fields may be NaN when unknown,
/// but each row must constrain the model through c_value or frac_idler.
struct SweepObservation {
  double pump_power;
  double mu_idler;
  double c_value;
  double frac_idler;
  double sigma_c = 1.0;
  double sigma_frac = 1.0;
};

/// Transmittances and dark counts entering the coincidence-ratio model.
struct RateContext {
  double alpha_s = 1.0;
  double alpha_i = 1.0;
  double d_s = 0.0;
  double d_i = 0.0;
  double signal_noise_ratio = 1.1; // mu_sn / mu_in
  double pair_exponent = 2.0;
  double noise_exponent = 1.0;
};

RateContext rate_context(const ExperimentConfig &cfg);

struct NoiseFit {
  double mu_pair_ref = 0.0;
  double mu_noise_idler_ref = 0.0;
  double pair_exponent = 2.0;
  double noise_exponent = 1.0;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Least-squares fit of the pump-power family (mu_c = a P^pe,
/// mu_n = b P^ne) through the coincidence-ratio model.
NoiseFit fit_noise_coefficients(const std::vector<SweepObservation> &observations,
                                const RateContext &ctx);

/// Pump power solving mu_idler = a P^pe + b P^ne.
double solve_power_for_mu_idler(double mu_idler, double a, double b,
                                double pair_exponent, double noise_exponent);

struct CoincidenceModelPoint {
  double c_value = 1.0;
  double frac_signal = 0.0;
  double frac_idler = 0.0;
  double mu_idler = 0.0;
  double c_s = 0.0;
  double c_i = 0.0;
};

CoincidenceModelPoint coincidence_model(double pump_power, double a, double b,
                                        const RateContext &ctx);

struct SweepRow {
  double pump_power = 0.0;
  double mu_idler = 0.0;
  double c_value = 1.0;
  double frac_signal = 0.0;
  double frac_idler = 0.0;
};

/// Analytic coincidence-ratio curve over pump powers for the configured
/// source and channels.
std::vector<SweepRow> sweep_mu(const ExperimentConfig &cfg, const std::vector<double> &powers);

} // namespace timebin::analysis
