#include "timebin/config.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace timebin {

namespace {

void require(bool ok, const std::string &what) {
  if (!ok) throw std::invalid_argument("config: " + what);
}

void validate_channel(const ChannelConfig &ch, const char *arm,
                      std::vector<std::string> &warnings) {
  const std::string a(arm);
  require(ch.length_km >= 0.0, a + " channel length negative");
  require(ch.loss_coeff_db_per_km >= 0.0, a + " loss coefficient negative");
  require(ch.excess_loss_db >= 0.0, a + " excess loss negative");
  require(ch.bandwidth_ghz > 0.0, a + " bandwidth must be positive");
  if (ch.pump_suppression_db > -120.0)
    warnings.push_back(a + " channel pump suppression above -120 dB");
}

void validate_detector(const DetectorConfig &det, const char *arm) {
  const std::string a(arm);
  require(det.efficiency >= 0.0 && det.efficiency <= 1.0, a + " efficiency outside [0,1]");
  require(det.dark_count_per_gate >= 0.0 && det.dark_count_per_gate < 1.0,
          a + " dark count per gate outside [0,1)");
  require(det.gate_width_ns > 0.0, a + " gate width must be positive");
  require(det.gate_rate_mhz > 0.0, a + " gate rate must be positive");
}

void validate_interferometer(const InterferometerConfig &ifm, const PumpConfig &pump,
                             const char *arm) {
  if (!ifm.enabled) return;
  const std::string a(arm);
  require(ifm.extinction_db < 0.0, a + " interferometer extinction must be < 0 dB");
  require(ifm.insertion_loss_db >= 0.0, a + " interferometer insertion loss negative");
  require(std::abs(ifm.delay_ns - pump.bin_separation_ns) < 1e-9,
          a + " interferometer delay must equal the pump bin separation");
  require(std::isfinite(ifm.phase_rad), a + " interferometer phase not finite");
}

} // namespace

void validate(const ExperimentConfig &cfg, std::vector<std::string> &warnings) {
  const auto &p = cfg.pump;
  require(p.wavelength_nm > 0.0, "pump wavelength must be positive");
  require(p.pulse_width_ps > 0.0, "pump pulse width must be positive");
  require(p.bin_separation_ns > 0.0, "bin separation must be positive");
  require(p.pulse_width_ps < p.bin_separation_ns * 1e3,
          "pulse width must be smaller than the bin separation");
  require(p.repetition_rate_mhz > 0.0, "repetition rate must be positive");
  require(1e3 / p.repetition_rate_mhz >= 2.0 * p.bin_separation_ns,
          "repetition period must cover the double pulse");
  require(p.relative_power >= 0.0, "relative power negative");
  require(std::isfinite(p.pump_phase_rad), "pump phase not finite");

  const auto &s = cfg.source;
  require(s.mu_pair_ref >= 0.0, "pair mean negative");
  require(s.mu_noise_signal_ref >= 0.0, "signal noise mean negative");
  require(s.mu_noise_idler_ref >= 0.0, "idler noise mean negative");
  require(s.pair_exponent > 0.0, "pair exponent must be positive");
  require(s.noise_exponent > 0.0, "noise exponent must be positive");
  require(s.noise_polarized_fraction >= 0.0 && s.noise_polarized_fraction <= 1.0,
          "polarized fraction outside [0,1]");

  validate_channel(cfg.channel_signal, "signal", warnings);
  validate_channel(cfg.channel_idler, "idler", warnings);
  validate_detector(cfg.detector_signal, "signal");
  validate_detector(cfg.detector_idler, "idler");
  validate_interferometer(cfg.interferometer_signal, p, "signal");
  validate_interferometer(cfg.interferometer_idler, p, "idler");

  require(cfg.interferometer_signal.enabled == cfg.interferometer_idler.enabled,
          "interferometers must be enabled or disabled on both arms");
  require(cfg.sim.batch_size > 0, "batch size must be positive");
  require(cfg.sim.tia_window >= 1, "tia window must be >= 1");

  // Energy conservation of the mixing process pins the two channels to
  // symmetric offsets around the pump.
  if (std::abs(cfg.channel_signal.center_offset_ghz + cfg.channel_idler.center_offset_ghz) > 1e-6)
    warnings.push_back("channel offsets are not symmetric around the pump frequency");
}

} // namespace timebin
