#pragma once

#include <cmath>

namespace timebin {

inline constexpr double kSpeedOfLight_m_per_s = 2.99792458e8;

// FWHM of a Gaussian = 2*sqrt(2*ln 2) * sigma
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Convert an optical bandwidth in GHz to a wavelength span in nm at the
/// given carrier wavelength.
inline double bandwidth_ghz_to_nm(double bandwidth_ghz, double wavelength_nm) {
  const double lambda_m = wavelength_nm * 1e-9;
  const double span_m = lambda_m * lambda_m * (bandwidth_ghz * 1e9) / kSpeedOfLight_m_per_s;
  return span_m * 1e9;
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace timebin
