#include "timebin/ini.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace timebin::io {

namespace {

std::string trim(const std::string &s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

using SectionMap = std::map<std::string, std::map<std::string, Entry>>;

SectionMap tokenize(const std::string &text) {
  SectionMap sections;
  std::istringstream is(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigParseException({"unterminated section header", line_no});
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigParseException({"empty section name", line_no});
      sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigParseException({"expected key=value", line_no});
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigParseException({"empty key", line_no});
    if (section.empty())
      throw ConfigParseException({"key outside any section", line_no});
    auto [it, inserted] = sections[section].emplace(key, Entry{value, line_no, false});
    if (!inserted)
      throw ConfigParseException({"duplicate key '" + key + "'", line_no});
  }
  return sections;
}

class SectionReader {
public:
  SectionReader(SectionMap &map, std::string name) : map_(map), name_(std::move(name)) {}

  bool present() const { return map_.count(name_) > 0; }

  double number(const std::string &key) {
    const Entry &e = fetch(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception &) {
      throw ConfigParseException({"section [" + name_ + "] key '" + key +
                                      "': not a number: '" + e.value + "'",
                                  e.line});
    }
  }

  double number_or(const std::string &key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  long integer(const std::string &key, long fallback) {
    if (!has(key)) return fallback;
    return static_cast<long>(number(key));
  }

  bool boolean(const std::string &key, bool fallback) {
    if (!has(key)) return fallback;
    const Entry &e = fetch(key);
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw ConfigParseException({"section [" + name_ + "] key '" + key +
                                    "': expected boolean, got '" + e.value + "'",
                                e.line});
  }

  std::string text(const std::string &key) { return fetch(key).value; }

  bool has(const std::string &key) const {
    auto sec = map_.find(name_);
    return sec != map_.end() && sec->second.count(key) > 0;
  }

private:
  const Entry &fetch(const std::string &key) {
    auto sec = map_.find(name_);
    if (sec == map_.end())
      throw ConfigParseException({"missing section [" + name_ + "]", 0});
    auto it = sec->second.find(key);
    if (it == sec->second.end())
      throw ConfigParseException({"section [" + name_ + "] missing key '" + key + "'", 0});
    it->second.used = true;
    return it->second;
  }

  SectionMap &map_;
  std::string name_;
};

ChannelConfig read_channel(SectionReader r) {
  ChannelConfig ch;
  ch.length_km = r.number_or("length_km", 0.0);
  ch.loss_coeff_db_per_km = r.number_or("loss_coeff_db_per_km", 0.21);
  ch.excess_loss_db = r.number("excess_loss_db");
  ch.dispersion_ps_nm_km = r.number_or("dispersion_ps_nm_km", 17.0);
  ch.center_offset_ghz = r.number("center_offset_ghz");
  ch.bandwidth_ghz = r.number("bandwidth_ghz");
  ch.pump_suppression_db = r.number_or("pump_suppression_db", -130.0);
  return ch;
}

InterferometerConfig read_interferometer(SectionReader r, const PumpConfig &pump) {
  InterferometerConfig ifm;
  if (!r.present()) return ifm;
  ifm.enabled = r.boolean("enabled", true);
  ifm.delay_ns = r.number_or("delay_ns", pump.bin_separation_ns);
  ifm.phase_rad = r.number_or("phase_rad", 0.0);
  ifm.insertion_loss_db = r.number_or("insertion_loss_db", 2.0);
  ifm.extinction_db = r.number_or("extinction_db", -25.0);
  return ifm;
}

DetectorConfig read_detector(SectionReader r) {
  DetectorConfig det;
  det.efficiency = r.number("efficiency");
  det.dark_count_per_gate = r.number("dark_count_per_gate");
  det.gate_width_ns = r.number_or("gate_width_ns", 1.0);
  det.gate_rate_mhz = r.number_or("gate_rate_mhz", 4.0);
  const std::string g = r.has("gating") ? r.text("gating") : "every-bin";
  if (g == "slot2") det.gating = GateMode::Slot2Only;
  else if (g == "every-bin") det.gating = GateMode::EveryBin;
  else throw ConfigParseException({"unknown gating mode '" + g + "'", 0});
  return det;
}

const char *const kKnownKeys[][12] = {
    {"pump", "wavelength_nm", "pulse_width_ps", "bin_separation_ns", "repetition_rate_mhz",
     "relative_power", "pump_phase_rad", nullptr},
    {"source", "mu_pair_ref", "mu_noise_signal_ref", "mu_noise_idler_ref", "pair_exponent",
     "noise_exponent", "noise_polarized_fraction", "polarizer", nullptr},
    {"channel.signal", "length_km", "loss_coeff_db_per_km", "excess_loss_db",
     "dispersion_ps_nm_km", "center_offset_ghz", "bandwidth_ghz", "pump_suppression_db", nullptr},
    {"channel.idler", "length_km", "loss_coeff_db_per_km", "excess_loss_db",
     "dispersion_ps_nm_km", "center_offset_ghz", "bandwidth_ghz", "pump_suppression_db", nullptr},
    {"interferometer.signal", "enabled", "delay_ns", "phase_rad", "insertion_loss_db",
     "extinction_db", nullptr},
    {"interferometer.idler", "enabled", "delay_ns", "phase_rad", "insertion_loss_db",
     "extinction_db", nullptr},
    {"detector.signal", "efficiency", "dark_count_per_gate", "gate_width_ns", "gate_rate_mhz",
     "gating", nullptr},
    {"detector.idler", "efficiency", "dark_count_per_gate", "gate_width_ns", "gate_rate_mhz",
     "gating", nullptr},
    {"sim", "batch_size", "tia_window", "temperature_coeff_rad_per_k", nullptr},
};

void reject_unknown(const SectionMap &sections) {
  for (const auto &[section, entries] : sections) {
    const char *const *row = nullptr;
    for (const auto &known : kKnownKeys) {
      if (section == known[0]) {
        row = known + 1;
        break;
      }
    }
    if (!row)
      throw ConfigParseException({"unknown section [" + section + "]", 0});
    for (const auto &[key, entry] : entries) {
      bool ok = false;
      for (const char *const *k = row; *k; ++k)
        if (key == *k) {
          ok = true;
          break;
        }
      if (!ok)
        throw ConfigParseException(
            {"unknown key '" + key + "' in section [" + section + "]", entry.line});
    }
  }
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string &text) {
  SectionMap sections = tokenize(text);
  reject_unknown(sections);

  ExperimentConfig cfg;
  SectionReader pump(sections, "pump");
  cfg.pump.wavelength_nm = pump.number("wavelength_nm");
  cfg.pump.pulse_width_ps = pump.number("pulse_width_ps");
  cfg.pump.bin_separation_ns = pump.number("bin_separation_ns");
  cfg.pump.repetition_rate_mhz = pump.number("repetition_rate_mhz");
  cfg.pump.relative_power = pump.number_or("relative_power", 1.0);
  cfg.pump.pump_phase_rad = pump.number_or("pump_phase_rad", 0.0);

  SectionReader src(sections, "source");
  cfg.source.mu_pair_ref = src.number("mu_pair_ref");
  cfg.source.mu_noise_signal_ref = src.number("mu_noise_signal_ref");
  cfg.source.mu_noise_idler_ref = src.number("mu_noise_idler_ref");
  cfg.source.pair_exponent = src.number_or("pair_exponent", 2.0);
  cfg.source.noise_exponent = src.number_or("noise_exponent", 1.0);
  cfg.source.noise_polarized_fraction = src.number_or("noise_polarized_fraction", 0.5);
  cfg.source.polarizer = src.boolean("polarizer", true);

  cfg.channel_signal = read_channel(SectionReader(sections, "channel.signal"));
  cfg.channel_idler = read_channel(SectionReader(sections, "channel.idler"));
  cfg.interferometer_signal =
      read_interferometer(SectionReader(sections, "interferometer.signal"), cfg.pump);
  cfg.interferometer_idler =
      read_interferometer(SectionReader(sections, "interferometer.idler"), cfg.pump);
  cfg.detector_signal = read_detector(SectionReader(sections, "detector.signal"));
  cfg.detector_idler = read_detector(SectionReader(sections, "detector.idler"));

  SectionReader sim(sections, "sim");
  if (sim.present()) {
    cfg.sim.batch_size = sim.integer("batch_size", cfg.sim.batch_size);
    cfg.sim.tia_window = static_cast<int>(sim.integer("tia_window", cfg.sim.tia_window));
    cfg.sim.temperature_coeff_rad_per_k =
        sim.number_or("temperature_coeff_rad_per_k", cfg.sim.temperature_coeff_rad_per_k);
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string &path, std::string *config_hash,
                                        std::vector<std::string> *warnings) {
  const std::string text = read_text_file(path);
  if (config_hash) *config_hash = fnv1a_hex(text);
  ExperimentConfig cfg = parse_experiment_config(text);
  std::vector<std::string> local;
  validate(cfg, warnings ? *warnings : local);
  return cfg;
}

std::string fnv1a_hex(const std::string &bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_text_file(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_text_file(const std::string &path, const std::string &content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write file: " + path);
  f << content;
}

} // namespace timebin::io
