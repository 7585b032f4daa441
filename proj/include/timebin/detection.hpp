#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "timebin/rates.hpp"
#include "timebin/rng.hpp"

namespace timebin::tia {

enum class Origin : std::uint8_t { Pair, Noise };

/// One photon at a detector input: the time slot it nominally occupies.
struct Arrival {
  int slot = 0;
  Origin origin = Origin::Pair;
};

/// Draws the registered gate window for an arrival, folding in the
/// dispersion-broadened arrival-time spread. Returns the window index, or
/// nullopt when the photon falls outside every modeled window.
std::optional<int> detect_window(const model::ArmModel &arm, int slot, RngStream &rng);

/// True when `window` is covered by the detector gating scheme.
bool window_gated(const model::ArmModel &arm, int window);

/// Gated single-click detection for one gate: arrivals outside the gated
/// windows are discarded, each surviving arrival fires with the quantum
/// efficiency, a dark count may fire regardless, and everything collapses to
/// at most one click. Returns the registered window of the click.
std::optional<int> gated_detect(const std::vector<Arrival> &arrivals,
                                const model::ArmModel &arm, RngStream &rng);

struct TIAHistogram {
  int window = 3; // +- gate periods
  std::vector<std::uint64_t> counts; // size 2*window+1, delay -window..window
  std::uint64_t n_starts = 0;

  explicit TIAHistogram(int k = 3) : window(k), counts(2 * k + 1, 0) {}

  std::uint64_t &at_delay(int delay) { return counts[delay + window]; }
  std::uint64_t at_delay(int delay) const { return counts[delay + window]; }
  std::uint64_t total() const;
  void merge(const TIAHistogram &other);
};

/// Start/stop accumulation: for every start gate, the earliest stop within
/// +-window gate periods increments the corresponding delay bin. Streams are
/// gate indices and must be sorted ascending.
TIAHistogram accumulate(const std::vector<long long> &starts,
                        const std::vector<long long> &stops, int window);

/// Matched-to-unmatched coincidence ratio: counts at zero delay over the
/// mean of all unmatched delays.
double measured_c(const TIAHistogram &hist);

/// Statistical uncertainty of measured_c from Poisson counts.
double measured_c_error(const TIAHistogram &hist);

/// Expected per-start increment probabilities of the accumulator given the
/// per-gate stop probability `c_i` and the matched-gate stop probability
/// `p_matched` = r_m / c_s. Index order matches TIAHistogram counts. Used as
/// the closed-form reference for equivalence tests.
std::vector<double> expected_increment_profile(double p_matched, double c_i, int window);

std::string histogram_csv(const TIAHistogram &hist, const std::string &config_hash);
TIAHistogram parse_histogram_csv(const std::string &text);

} // namespace timebin::tia
