#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "timebin/amplitude.hpp"
#include "timebin/config.hpp"
#include "timebin/detection.hpp"
#include "timebin/rates.hpp"
#include "timebin/rng.hpp"

namespace timebin::mc {

/// Joint outcome of one generated pair after the interferometers:
/// used-port slot per arm, or 0 when the photon left through an unused port.
struct PairOutcome {
  int signal_slot = 0;
  int idler_slot = 0;
};

/// Poisson number of independent pairs in one double pulse.
long sample_pair_count(double mu_pair, RngStream &rng);

/// One draw from the joint slot distribution of the table. Pairs are always
/// sampled jointly, never per arm, so interference correlations survive.
PairOutcome sample_pair_outcome(const model::AmplitudeTable &table, RngStream &rng);

/// Noise photons of one double pulse: Poisson count, each assigned a pump
/// bin uniformly and routed through the interferometer as an incoherent
/// splitter. Returned slots are used-port arrivals; lost photons are dropped.
std::vector<int> sample_noise(double mu_noise, const model::ArmModel &arm, RngStream &rng);

/// Per-batch counters. Merging batches is field-wise addition.
struct GateBatchResult {
  long long n_gates = 0;
  std::uint64_t singles_s = 0;
  std::uint64_t singles_i = 0;
  tia::TIAHistogram histogram;

  explicit GateBatchResult(int window = 3) : histogram(window) {}

  std::uint64_t slot2_coincidences() const { return histogram.at_delay(0); }
  void merge(const GateBatchResult &other);
};

struct SimOptions {
  long batch_size = 100000;
  int tia_window = 3;
  int threads = 1;
  std::uint64_t stream_base = 0;
  /// Optional sink for the raw event stream "gate_index,arm,slot,origin".
  std::function<void(const std::string &)> event_sink;
};

SimOptions sim_options(const ExperimentConfig &cfg);

/// Gate-by-gate simulation of `n_gates` detector gates. Deterministic for a
/// fixed (seed, batch partition); batches own independent RNG streams.
GateBatchResult simulate_gates(const ExperimentConfig &cfg, long long n_gates,
                               std::uint64_t seed, const SimOptions &opts);
GateBatchResult simulate_gates(const model::ExperimentModel &model, double theta_i,
                               long long n_gates, std::uint64_t seed, const SimOptions &opts);

struct ScanPoint {
  double theta = 0.0;
  double rate_per_start = 0.0; // matched coincidences per start
  double rate_err = 0.0;
  double idler_singles_per_gate = 0.0;
  std::uint64_t matched_counts = 0;
  std::uint64_t n_starts = 0;
  std::uint64_t n_gates = 0;
};

struct FringeScan {
  std::vector<ScanPoint> points;
  double accidental_per_start = 0.0; // pooled over all points and unmatched delays
  double accidental_err = 0.0;
};

/// One simulate_gates run per idler phase with derived stream ids.
FringeScan run_fringe_scan(const ExperimentConfig &cfg, const std::vector<double> &theta_list,
                           long long gates_per_point, std::uint64_t seed,
                           const SimOptions &opts);

} // namespace timebin::mc
