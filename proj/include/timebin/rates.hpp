#pragma once

#include <array>

#include "timebin/amplitude.hpp"
#include "timebin/config.hpp"

namespace timebin::model {

/// Photon-number means per double pulse as delivered into the two analysis
/// channels (pump scaling and polarizer applied).
struct DeliveredMeans {
  double mu_pair = 0.0;
  double mu_noise_signal = 0.0;
  double mu_noise_idler = 0.0;
};

struct ScaledMeans {
  double mu_pair = 0.0;
  double mu_noise_signal = 0.0;
  double mu_noise_idler = 0.0;
};

/// Power-law pump scaling of the source means (at-source values).
ScaledMeans pump_scaling(double relative_power, const SourceConfig &src);

/// Noise transmitted through the pump-cleanup polarizer. Correlated pairs
/// share the pump polarization and are never attenuated here.
double apply_polarizer(double mu_noise, double polarized_fraction, bool polarizer_on);

DeliveredMeans delivered_means(const PumpConfig &pump, const SourceConfig &src);

/// Per-gate singles click probability, linear small-rate form:
/// c_x = (mu_c + mu_xn) * alpha_x + d_x. Throws if the result leaves the
/// probability regime.
double singles_rate(double mu_pair, double mu_noise, double alpha, double dark);

/// Matched/unmatched coincidence figure of merit
/// C = mu_c * alpha_s * alpha_i / (c_s * c_i) + 1.
double coincidence_ratio(double mu_pair, double alpha_s, double alpha_i,
                         double c_s, double c_i);

struct CorrelatedFractions {
  double mu_pair = 0.0;
  double mu_noise_signal = 0.0;
  double mu_noise_idler = 0.0;
  double fraction_signal = 0.0;
  double fraction_idler = 0.0;
};

/// Invert the singles/coincidence relations to recover photon-number means
/// from measured quantities. Throws (with the offending value) when the
/// inputs are mutually inconsistent.
CorrelatedFractions estimate_correlated_fraction(double c_measured, double c_s, double c_i,
                                                 double alpha_s, double alpha_i,
                                                 double d_s, double d_i);

struct DispersionPenalty {
  double dispersive_spread_ps = 0.0;
  double broadened_width_ps = 0.0; // FWHM
  double gate_collection = 1.0;    // centered-window capture fraction
  bool overlap_flag = false;       // broadening reaches the neighbouring bin
};

DispersionPenalty dispersion_penalty(double bandwidth_ghz, double dispersion_ps_nm_km,
                                     double length_km, double pulse_width_ps,
                                     double gate_width_ns, double bin_separation_ns,
                                     double wavelength_nm = 1551.0);

/// Probability that an arrival nominally in some slot is registered in the
/// window `offset_slots` away, for a Gaussian of the given FWHM.
double slot_window_probability(double broadened_fwhm_ps, int offset_slots,
                               double bin_separation_ns, double gate_width_ns);

// ---------------------------------------------------------------------------

inline constexpr int kMaxSlotShift = 3;

/// Precomputed per-arm physics shared by the analytic predictions and the
/// event sampler.
struct ArmModel {
  double channel_t = 1.0; // linear power transmittance, detector excluded
  double efficiency = 1.0;
  double dark = 0.0;
  double alpha = 1.0; // channel_t * efficiency
  bool slot2_only = false;
  std::array<double, 2 * kMaxSlotShift + 1> window{}; // arrival-time smear
  double window_loss = 0.0;
  std::array<double, 4> slot_marginal{}; // single-photon used-port slots 1..3 + lost
  double broadened_width_ps = 0.0;
  bool overlap_flag = false;

  double window_prob(int shift) const { return window[shift + kMaxSlotShift]; }
  /// Probability that an arrival in `slot` ends up inside a gated window.
  double gate_accept(int slot) const;
};

struct ExperimentModel {
  DeliveredMeans means;
  ArmModel signal;
  ArmModel idler;
  bool interferometers = false;
  double phi = 0.0;
  double theta_s = 0.0;
  double extinction_s_db = -300.0;
  double extinction_i_db = -300.0;

  AmplitudeTable table(double theta_i) const;
};

ExperimentModel build_model(const ExperimentConfig &cfg);

struct RatePrediction {
  double c_s = 0.0;        // singles probability per gate
  double c_i = 0.0;
  double r_m = 0.0;        // matched-gate coincidence probability
  double r_um = 0.0;       // unmatched-gate coincidence probability
  double c_ratio = 1.0;    // r_m / r_um
  double fringe_max = 0.0; // r_m extremes over the fringe phase
  double fringe_min = 0.0;
  double v_raw = 0.0;
  double v_sub = 0.0;
};

/// Closed-form per-gate statistics for the configured experiment with the
/// idler interferometer at `theta_i`. This is the oracle the Monte Carlo
/// engine is checked against; all click probabilities are exact compound
/// forms, not first-order approximations.
RatePrediction predict_rates(const ExperimentConfig &cfg, double theta_i);
RatePrediction predict_rates(const ExperimentModel &model, double theta_i);

} // namespace timebin::model
