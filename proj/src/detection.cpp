#include "timebin/detection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace timebin::tia {

std::optional<int> detect_window(const model::ArmModel &arm, int slot, RngStream &rng) {
  if (arm.window_prob(0) > 1.0 - 1e-12) return slot; // spread far below the gate width
  double u = rng.uniform();
  for (int m = -model::kMaxSlotShift; m <= model::kMaxSlotShift; ++m) {
    u -= arm.window_prob(m);
    if (u < 0.0) return slot + m;
  }
  return std::nullopt; // outside every window
}

bool window_gated(const model::ArmModel &arm, int window) {
  return arm.slot2_only ? window == 2 : true;
}

std::optional<int> gated_detect(const std::vector<Arrival> &arrivals,
                                const model::ArmModel &arm, RngStream &rng) {
  std::optional<int> click;
  for (const Arrival &a : arrivals) {
    const auto window = detect_window(arm, a.slot, rng);
    if (!window || !window_gated(arm, *window)) continue;
    if (rng.bernoulli(arm.efficiency) && !click) click = *window;
  }
  if (rng.bernoulli(arm.dark) && !click) click = arm.slot2_only ? 2 : 1;
  return click;
}

std::uint64_t TIAHistogram::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

void TIAHistogram::merge(const TIAHistogram &other) {
  if (other.window != window) throw std::invalid_argument("histogram window mismatch");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  n_starts += other.n_starts;
}

TIAHistogram accumulate(const std::vector<long long> &starts,
                        const std::vector<long long> &stops, int window) {
  if (!std::is_sorted(starts.begin(), starts.end()) ||
      !std::is_sorted(stops.begin(), stops.end()))
    throw std::invalid_argument("accumulate: click streams must be sorted by gate index");

  TIAHistogram hist(window);
  hist.n_starts = starts.size();
  std::size_t lo = 0;
  for (const long long g : starts) {
    while (lo < stops.size() && stops[lo] < g - window) ++lo;
    if (lo < stops.size() && stops[lo] <= g + window)
      ++hist.at_delay(static_cast<int>(stops[lo] - g));
  }
  return hist;
}

double measured_c(const TIAHistogram &hist) {
  std::uint64_t unmatched = 0;
  for (int d = -hist.window; d <= hist.window; ++d)
    if (d != 0) unmatched += hist.at_delay(d);
  if (unmatched == 0)
    throw std::domain_error("measured_c: no unmatched coincidences; accumulate more gates");
  const double mean_um = static_cast<double>(unmatched) / (2.0 * hist.window);
  return static_cast<double>(hist.at_delay(0)) / mean_um;
}

double measured_c_error(const TIAHistogram &hist) {
  std::uint64_t unmatched = 0;
  for (int d = -hist.window; d <= hist.window; ++d)
    if (d != 0) unmatched += hist.at_delay(d);
  const double n0 = static_cast<double>(hist.at_delay(0));
  if (n0 == 0.0 || unmatched == 0) return 0.0;
  const double c = measured_c(hist);
  return c * std::sqrt(1.0 / n0 + 1.0 / static_cast<double>(unmatched));
}

std::vector<double> expected_increment_profile(double p_matched, double c_i, int window) {
  std::vector<double> profile(2 * window + 1, 0.0);
  double survive = 1.0; // no stop found at earlier delays
  for (int d = -window; d <= window; ++d) {
    const double p = d == 0 ? p_matched : c_i;
    profile[d + window] = survive * p;
    survive *= 1.0 - p;
  }
  return profile;
}

std::string histogram_csv(const TIAHistogram &hist, const std::string &config_hash) {
  std::ostringstream os;
  os << "# n_starts=" << hist.n_starts << "\n";
  os << "# config_hash=" << config_hash << "\n";
  os << "delay_gate_periods,counts\n";
  for (int d = -hist.window; d <= hist.window; ++d)
    os << d << "," << hist.at_delay(d) << "\n";
  return os.str();
}

TIAHistogram parse_histogram_csv(const std::string &text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::pair<int, std::uint64_t>> rows;
  std::uint64_t n_starts = 0;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("n_starts=");
      if (pos != std::string::npos) n_starts = std::stoull(line.substr(pos + 9));
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("histogram csv: malformed line " + std::to_string(line_no));
    rows.emplace_back(std::stoi(line.substr(0, comma)), std::stoull(line.substr(comma + 1)));
  }
  if (rows.empty()) throw std::invalid_argument("histogram csv: no data rows");
  const int window = rows.back().first;
  TIAHistogram hist(window);
  hist.n_starts = n_starts;
  for (const auto &[d, c] : rows) hist.at_delay(d) = c;
  return hist;
}

} // namespace timebin::tia
