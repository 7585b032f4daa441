#pragma once

#include <array>
#include <complex>

namespace timebin::model {

/// Joint two-photon amplitudes over the detected (used-port) time slots
/// after both delay interferometers. Slots are indexed 1..3; entry (j,k)
/// is the amplitude for signal in slot j and idler in slot k. Probability
/// not covered by the nine used-port terms is photon loss to the unused
/// interferometer ports, resolved per arm so that singles marginals are
/// available to the sampler.
struct AmplitudeTable {
  std::array<std::array<std::complex<double>, 3>, 3> entries{}; // [j-1][k-1]
  double loss_weight = 0.0;

  // Per-arm resolution of loss_weight.
  std::array<double, 3> signal_only{}; // signal in slot j, idler lost
  std::array<double, 3> idler_only{};  // idler in slot k, signal lost
  double both_lost = 0.0;

  std::complex<double> amp(int signal_slot, int idler_slot) const {
    return entries[signal_slot - 1][idler_slot - 1];
  }
  double prob(int signal_slot, int idler_slot) const {
    const auto a = amp(signal_slot, idler_slot);
    return std::norm(a);
  }

  /// Signal-arm marginal probability of arriving in `slot` at the used port
  /// (independent of all phases).
  double signal_marginal(int slot) const;
  double idler_marginal(int slot) const;
};

/// Splitting amplitudes of one arm's interferometer used port: short path
/// `a`, long path `b` (|a|^2 + |b|^2 = 1/2, the other half exits the unused
/// port). The b/a intensity imbalance encodes the finite extinction ratio;
/// the coincidence-fringe floor-to-peak power ratio equals the configured
/// dB value.
struct ArmSplitting {
  double a = 0.0;
  double b = 0.0;
};

ArmSplitting arm_splitting(double extinction_db);

/// Expand the pair state (|1,1> + e^{i phi} |2,2>)/sqrt(2) through both
/// interferometers |k> -> a|k> + b e^{i theta} |k+1> (used port).
AmplitudeTable build_joint_amplitudes(double phi, double theta_s, double theta_i,
                                      double extinction_s_db, double extinction_i_db);

/// Table for the bare source (no interferometers): photons stay paired in
/// their generation bin.
AmplitudeTable passthrough_amplitudes();

/// |A(2,2)|^2, the gated-slot coincidence probability of the table; with
/// ideal extinction equals (1 + cos(theta_s + theta_i - phi)) / 16.
double slot2_coincidence_probability(const AmplitudeTable &table);

} // namespace timebin::model
