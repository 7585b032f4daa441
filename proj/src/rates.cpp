#include "timebin/rates.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "timebin/units.hpp"

namespace timebin::model {

ScaledMeans pump_scaling(double relative_power, const SourceConfig &src) {
  if (relative_power < 0.0) throw std::invalid_argument("relative power must be >= 0");
  ScaledMeans m;
  m.mu_pair = src.mu_pair_ref * std::pow(relative_power, src.pair_exponent);
  m.mu_noise_signal = src.mu_noise_signal_ref * std::pow(relative_power, src.noise_exponent);
  m.mu_noise_idler = src.mu_noise_idler_ref * std::pow(relative_power, src.noise_exponent);
  return m;
}

double apply_polarizer(double mu_noise, double polarized_fraction, bool polarizer_on) {
  if (polarized_fraction < 0.0 || polarized_fraction > 1.0)
    throw std::invalid_argument("polarized fraction outside [0,1]");
  return polarizer_on ? mu_noise * polarized_fraction : mu_noise;
}

DeliveredMeans delivered_means(const PumpConfig &pump, const SourceConfig &src) {
  const ScaledMeans scaled = pump_scaling(pump.relative_power, src);
  DeliveredMeans d;
  d.mu_pair = scaled.mu_pair;
  d.mu_noise_signal =
      apply_polarizer(scaled.mu_noise_signal, src.noise_polarized_fraction, src.polarizer);
  d.mu_noise_idler =
      apply_polarizer(scaled.mu_noise_idler, src.noise_polarized_fraction, src.polarizer);
  return d;
}

double singles_rate(double mu_pair, double mu_noise, double alpha, double dark) {
  if (mu_pair < 0.0 || mu_noise < 0.0 || alpha < 0.0 || alpha > 1.0 || dark < 0.0 || dark >= 1.0)
    throw std::invalid_argument("singles_rate: argument outside the probability regime");
  const double c = (mu_pair + mu_noise) * alpha + dark;
  if (c > 1.0) throw std::domain_error("singles_rate: click probability exceeds 1");
  return c;
}

double coincidence_ratio(double mu_pair, double alpha_s, double alpha_i,
                         double c_s, double c_i) {
  if (c_s <= 0.0 || c_i <= 0.0)
    throw std::invalid_argument("coincidence_ratio: singles rates must be positive");
  return mu_pair * alpha_s * alpha_i / (c_s * c_i) + 1.0;
}

CorrelatedFractions estimate_correlated_fraction(double c_measured, double c_s, double c_i,
                                                 double alpha_s, double alpha_i,
                                                 double d_s, double d_i) {
  if (c_measured < 1.0)
    throw std::invalid_argument("estimate_correlated_fraction: C must be >= 1");
  if (alpha_s <= 0.0 || alpha_i <= 0.0)
    throw std::invalid_argument("estimate_correlated_fraction: transmittances must be positive");

  CorrelatedFractions out;
  out.mu_pair = (c_measured - 1.0) * c_s * c_i / (alpha_s * alpha_i);
  out.mu_noise_signal = (c_s - d_s) / alpha_s - out.mu_pair;
  out.mu_noise_idler = (c_i - d_i) / alpha_i - out.mu_pair;
  auto check = [](double v, const char *what) {
    if (v < -1e-12) {
      std::ostringstream os;
      os << "estimate_correlated_fraction: inferred " << what << " is negative (" << v << ")";
      throw std::domain_error(os.str());
    }
    return v < 0.0 ? 0.0 : v;
  };
  out.mu_pair = check(out.mu_pair, "pair mean");
  out.mu_noise_signal = check(out.mu_noise_signal, "signal noise mean");
  out.mu_noise_idler = check(out.mu_noise_idler, "idler noise mean");
  const double tot_s = out.mu_pair + out.mu_noise_signal;
  const double tot_i = out.mu_pair + out.mu_noise_idler;
  out.fraction_signal = tot_s > 0.0 ? out.mu_pair / tot_s : 0.0;
  out.fraction_idler = tot_i > 0.0 ? out.mu_pair / tot_i : 0.0;
  return out;
}

DispersionPenalty dispersion_penalty(double bandwidth_ghz, double dispersion_ps_nm_km,
                                     double length_km, double pulse_width_ps,
                                     double gate_width_ns, double bin_separation_ns,
                                     double wavelength_nm) {
  if (bandwidth_ghz <= 0.0 || pulse_width_ps <= 0.0 || gate_width_ns <= 0.0 ||
      bin_separation_ns <= 0.0 || length_km < 0.0)
    throw std::invalid_argument("dispersion_penalty: non-positive physical input");

  DispersionPenalty p;
  const double span_nm = bandwidth_ghz_to_nm(bandwidth_ghz, wavelength_nm);
  p.dispersive_spread_ps = std::abs(dispersion_ps_nm_km) * length_km * span_nm;
  p.broadened_width_ps = std::hypot(pulse_width_ps, p.dispersive_spread_ps);
  p.gate_collection = slot_window_probability(p.broadened_width_ps, 0, bin_separation_ns,
                                              gate_width_ns);
  p.overlap_flag = p.broadened_width_ps > 0.5 * bin_separation_ns * 1e3;
  return p;
}

double slot_window_probability(double broadened_fwhm_ps, int offset_slots,
                               double bin_separation_ns, double gate_width_ns) {
  const double sigma = broadened_fwhm_ps / kFwhmPerSigma;
  const double center = offset_slots * bin_separation_ns * 1e3;
  const double half = 0.5 * gate_width_ns * 1e3;
  if (sigma < 1e-9) return (center - half <= 0.0 && 0.0 <= center + half) ? 1.0 : 0.0;
  return normal_cdf((center + half) / sigma) - normal_cdf((center - half) / sigma);
}

// ---------------------------------------------------------------------------

double ArmModel::gate_accept(int slot) const {
  if (slot2_only) return window_prob(2 - slot);
  double acc = 0.0;
  for (int m = -kMaxSlotShift; m <= kMaxSlotShift; ++m) acc += window_prob(m);
  return acc;
}

AmplitudeTable ExperimentModel::table(double theta_i) const {
  if (!interferometers) return passthrough_amplitudes();
  return build_joint_amplitudes(phi, theta_s, theta_i, extinction_s_db, extinction_i_db);
}

namespace {

ArmModel build_arm(const PumpConfig &pump, const ChannelConfig &ch,
                   const InterferometerConfig &ifm, const DetectorConfig &det) {
  ArmModel arm;
  arm.channel_t = db_to_linear(-ch.total_loss_db());
  arm.efficiency = det.efficiency;
  arm.alpha = arm.channel_t * arm.efficiency;
  arm.dark = det.dark_count_per_gate;
  arm.slot2_only = det.gating == GateMode::Slot2Only;

  const double lambda_nm =
      kSpeedOfLight_m_per_s /
      (kSpeedOfLight_m_per_s / (pump.wavelength_nm * 1e-9) + ch.center_offset_ghz * 1e9) * 1e9;
  const DispersionPenalty disp =
      dispersion_penalty(ch.bandwidth_ghz, ch.dispersion_ps_nm_km, ch.length_km,
                         pump.pulse_width_ps, det.gate_width_ns, pump.bin_separation_ns,
                         lambda_nm);
  arm.broadened_width_ps = disp.broadened_width_ps;
  arm.overlap_flag = disp.overlap_flag;
  double covered = 0.0;
  for (int m = -kMaxSlotShift; m <= kMaxSlotShift; ++m) {
    const double w = slot_window_probability(disp.broadened_width_ps, m,
                                             pump.bin_separation_ns, det.gate_width_ns);
    arm.window[m + kMaxSlotShift] = w;
    covered += w;
  }
  arm.window_loss = covered < 1.0 ? 1.0 - covered : 0.0;

  if (ifm.enabled) {
    const ArmSplitting sp = arm_splitting(ifm.extinction_db);
    const double a2 = sp.a * sp.a;
    const double b2 = sp.b * sp.b;
    arm.slot_marginal = {0.5 * a2, 0.5 * (a2 + b2), 0.5 * b2, 0.5};
  } else {
    arm.slot_marginal = {0.5, 0.5, 0.0, 0.0};
  }
  return arm;
}

struct PairGateTerms {
  double kappa_s = 0.0; // P(pair -> signal click)
  double kappa_i = 0.0;
  double q_joint = 0.0; // P(pair -> both clicks, same gate)
};

PairGateTerms pair_gate_terms(const AmplitudeTable &t, const ArmModel &s, const ArmModel &i) {
  PairGateTerms g;
  for (int j = 1; j <= 3; ++j) g.kappa_s += t.signal_marginal(j) * s.gate_accept(j);
  for (int k = 1; k <= 3; ++k) g.kappa_i += t.idler_marginal(k) * i.gate_accept(k);
  g.kappa_s *= s.alpha;
  g.kappa_i *= i.alpha;
  for (int j = 1; j <= 3; ++j)
    for (int k = 1; k <= 3; ++k)
      g.q_joint += t.prob(j, k) * s.gate_accept(j) * i.gate_accept(k);
  g.q_joint *= s.alpha * i.alpha;
  return g;
}

double noise_gate_prob(const ArmModel &arm) {
  double p = 0.0;
  for (int slot = 1; slot <= 3; ++slot) p += arm.slot_marginal[slot - 1] * arm.gate_accept(slot);
  return p * arm.alpha;
}

struct GateProbs {
  double c_s, c_i, r_m;
};

GateProbs gate_probs(const ExperimentModel &m, const AmplitudeTable &t) {
  const PairGateTerms pair = pair_gate_terms(t, m.signal, m.idler);
  const double noise_s = m.means.mu_noise_signal * noise_gate_prob(m.signal);
  const double noise_i = m.means.mu_noise_idler * noise_gate_prob(m.idler);

  const double no_s = (1.0 - m.signal.dark) * std::exp(-noise_s - m.means.mu_pair * pair.kappa_s);
  const double no_i = (1.0 - m.idler.dark) * std::exp(-noise_i - m.means.mu_pair * pair.kappa_i);
  const double kappa_or = pair.kappa_s + pair.kappa_i - pair.q_joint;
  const double neither = (1.0 - m.signal.dark) * (1.0 - m.idler.dark) *
                         std::exp(-noise_s - noise_i - m.means.mu_pair * kappa_or);

  GateProbs out;
  out.c_s = 1.0 - no_s;
  out.c_i = 1.0 - no_i;
  out.r_m = 1.0 - no_s - no_i + neither;
  return out;
}

} // namespace

ExperimentModel build_model(const ExperimentConfig &cfg) {
  ExperimentModel m;
  m.means = delivered_means(cfg.pump, cfg.source);
  m.signal = build_arm(cfg.pump, cfg.channel_signal, cfg.interferometer_signal,
                       cfg.detector_signal);
  m.idler = build_arm(cfg.pump, cfg.channel_idler, cfg.interferometer_idler,
                      cfg.detector_idler);
  m.interferometers = cfg.interferometers_enabled();
  m.phi = cfg.pump.entangling_phase();
  m.theta_s = cfg.interferometer_signal.phase_rad;
  m.extinction_s_db = cfg.interferometer_signal.extinction_db;
  m.extinction_i_db = cfg.interferometer_idler.extinction_db;
  return m;
}

RatePrediction predict_rates(const ExperimentModel &m, double theta_i) {
  RatePrediction pred;
  const GateProbs at_theta = gate_probs(m, m.table(theta_i));
  pred.c_s = at_theta.c_s;
  pred.c_i = at_theta.c_i;
  pred.r_m = at_theta.r_m;
  pred.r_um = at_theta.c_s * at_theta.c_i;
  pred.c_ratio = pred.r_um > 0.0 ? pred.r_m / pred.r_um : 1.0;

  if (m.interferometers) {
    // Only the gated-slot term of the joint table depends on the fringe
    // phase; the extremes sit at theta_s + theta_i - phi = 0 and pi.
    const double theta_peak = m.phi - m.theta_s;
    pred.fringe_max = gate_probs(m, m.table(theta_peak)).r_m;
    pred.fringe_min = gate_probs(m, m.table(theta_peak + M_PI)).r_m;
  } else {
    pred.fringe_max = pred.fringe_min = pred.r_m;
  }
  const double amp = pred.fringe_max - pred.fringe_min;
  const double tot_raw = pred.fringe_max + pred.fringe_min;
  const double tot_sub = tot_raw - 2.0 * pred.r_um;
  pred.v_raw = tot_raw > 0.0 ? amp / tot_raw : 0.0;
  pred.v_sub = tot_sub > 0.0 ? amp / tot_sub : 0.0;
  return pred;
}

RatePrediction predict_rates(const ExperimentConfig &cfg, double theta_i) {
  return predict_rates(build_model(cfg), theta_i);
}

} // namespace timebin::model
