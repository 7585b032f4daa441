#pragma once

#include <string>
#include <vector>

namespace timebin {

/// Pump laser and pulse-pair timing. `relative_power` is normalized to the
/// reference operating point (P = 1); the entangling phase of the pair state
/// is twice the pump double-pulse phase difference.
struct PumpConfig {
  double wavelength_nm = 1551.11;
  double pulse_width_ps = 90.0;
  double bin_separation_ns = 1.0;
  double repetition_rate_mhz = 100.0;
  double relative_power = 1.0;
  double pump_phase_rad = 0.0;

  double entangling_phase() const { return 2.0 * pump_phase_rad; }
};

/// Photon-number calibration of the fiber pair source. Means are per
/// double pulse, at the source (before the pump-cleanup polarizer), at P = 1.
/// Pair generation scales as P^pair_exponent, broadband noise as
/// P^noise_exponent.
struct SourceConfig {
  double mu_pair_ref = 0.0;
  double mu_noise_signal_ref = 0.0;
  double mu_noise_idler_ref = 0.0;
  double pair_exponent = 2.0;
  double noise_exponent = 1.0;
  double noise_polarized_fraction = 0.5;
  bool polarizer = true;
};

/// One analysis arm from source to detector input. `excess_loss_db` covers
/// filters, connectors and (when present) the delay interferometer insertion
/// loss; fiber spans add length_km * loss_coeff.
struct ChannelConfig {
  double length_km = 0.0;
  double loss_coeff_db_per_km = 0.21;
  double excess_loss_db = 0.0;
  double dispersion_ps_nm_km = 17.0;
  double center_offset_ghz = 0.0;
  double bandwidth_ghz = 25.0;
  double pump_suppression_db = -130.0;

  double total_loss_db() const { return excess_loss_db + length_km * loss_coeff_db_per_km; }
};

/// Unbalanced delay interferometer. The intrinsic 50/50 splitting is part of
/// the amplitude model, not of excess_loss; insertion_loss_db is informative
/// and expected to be folded into the channel excess loss.
struct InterferometerConfig {
  bool enabled = false;
  double delay_ns = 1.0;
  double phase_rad = 0.0;
  double insertion_loss_db = 2.0;
  double extinction_db = -25.0;
};

enum class GateMode { Slot2Only, EveryBin };

struct DetectorConfig {
  double efficiency = 0.1;
  double dark_count_per_gate = 0.0;
  double gate_width_ns = 1.0;
  double gate_rate_mhz = 4.0;
  GateMode gating = GateMode::EveryBin;
};

struct SimConfig {
  long batch_size = 100000;
  int tia_window = 3; // coincidence search window, +- gate periods
  double temperature_coeff_rad_per_k = 15.707963267948966;
};

struct ExperimentConfig {
  PumpConfig pump;
  SourceConfig source;
  ChannelConfig channel_signal;
  ChannelConfig channel_idler;
  InterferometerConfig interferometer_signal;
  InterferometerConfig interferometer_idler;
  DetectorConfig detector_signal;
  DetectorConfig detector_idler;
  SimConfig sim;

  bool interferometers_enabled() const {
    return interferometer_signal.enabled || interferometer_idler.enabled;
  }
};

/// Hard validation; throws std::invalid_argument on the first violated
/// invariant. Soft issues (pump suppression above -120 dB, asymmetric
/// channel offsets) are appended to `warnings`.
void validate(const ExperimentConfig &cfg, std::vector<std::string> &warnings);

/// Optional temperature axis for fringe presentation.
inline double temperature_to_phase(double delta_kelvin, const SimConfig &sim) {
  return delta_kelvin * sim.temperature_coeff_rad_per_k;
}

} // namespace timebin
