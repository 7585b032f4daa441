#include "timebin/csvio.hpp"

#include <cstdio>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace timebin::io {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string &s, int line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception &) {
    throw std::invalid_argument("csv: bad number '" + s + "' at line " +
                                std::to_string(line_no));
  }
}

} // namespace

std::string fringe_scan_csv(const mc::FringeScan &scan) {
  std::ostringstream os;
  os << "# accidental_per_start=" << fmt(scan.accidental_per_start) << "\n";
  os << "# accidental_err=" << fmt(scan.accidental_err) << "\n";
  os << "theta_rad,rate,rate_err,singles\n";
  for (const auto &p : scan.points)
    os << fmt(p.theta) << "," << fmt(p.rate_per_start) << "," << fmt(p.rate_err) << ","
       << fmt(p.idler_singles_per_gate) << "\n";
  return os.str();
}

mc::FringeScan parse_fringe_scan_csv(const std::string &text) {
  mc::FringeScan scan;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto grab = [&](const char *tag, double &dst) {
        const auto pos = line.find(tag);
        if (pos != std::string::npos) dst = parse_number(line.substr(pos + std::strlen(tag)), line_no);
      };
      grab("accidental_per_start=", scan.accidental_per_start);
      grab("accidental_err=", scan.accidental_err);
      continue;
    }
    if (!header_seen) {
      if (line != "theta_rad,rate,rate_err,singles")
        throw std::invalid_argument("csv: unexpected header at line " + std::to_string(line_no));
      header_seen = true;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 4)
      throw std::invalid_argument("csv: expected 4 fields at line " + std::to_string(line_no));
    mc::ScanPoint p;
    p.theta = parse_number(fields[0], line_no);
    p.rate_per_start = parse_number(fields[1], line_no);
    p.rate_err = parse_number(fields[2], line_no);
    p.idler_singles_per_gate = parse_number(fields[3], line_no);
    scan.points.push_back(p);
  }
  if (!header_seen) throw std::invalid_argument("csv: missing header row");
  if (scan.points.empty()) throw std::invalid_argument("csv: no data rows");
  return scan;
}

std::string sweep_csv(const std::vector<analysis::SweepRow> &rows,
                      const std::vector<double> &mc_c, const std::vector<double> &mc_err) {
  const bool with_mc = !mc_c.empty();
  std::ostringstream os;
  os << "P,mu_i,C,frac_s,frac_i";
  if (with_mc) os << ",C_mc,C_mc_err";
  os << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto &r = rows[i];
    os << fmt(r.pump_power) << "," << fmt(r.mu_idler) << "," << fmt(r.c_value) << ","
       << fmt(r.frac_signal) << "," << fmt(r.frac_idler);
    if (with_mc) os << "," << fmt(mc_c[i]) << "," << fmt(mc_err[i]);
    os << "\n";
  }
  return os.str();
}

std::string fit_report(const analysis::FitResult &fit, const std::string &model_name) {
  std::ostringstream os;
  os << "model=" << model_name << "\n";
  os << "amplitude=" << fmt(fit.amplitude) << "\n";
  os << "amplitude_err=" << fmt(fit.amplitude_err) << "\n";
  os << "visibility=" << fmt(fit.visibility) << "\n";
  os << "visibility_err=" << fmt(fit.visibility_err) << "\n";
  os << "theta0=" << fmt(fit.theta0) << "\n";
  os << "theta0_err=" << fmt(fit.theta0_err) << "\n";
  os << "baseline=" << fmt(fit.baseline) << "\n";
  os << "chi2=" << fmt(fit.chi2) << "\n";
  os << "dof=" << fit.dof << "\n";
  os << "iterations=" << fit.iterations << "\n";
  os << "converged=" << (fit.converged ? "true" : "false") << "\n";
  return os.str();
}

std::string manifest_text(const ManifestInfo &info) {
  std::ostringstream os;
  os << "version=" << info.version << "\n";
  os << "command=" << info.command << "\n";
  os << "config=" << info.config_path << "\n";
  os << "config_hash=" << info.config_hash << "\n";
  os << "seed=" << info.seed << "\n";
  for (const auto &o : info.outputs) os << "output=" << o << "\n";
  os << "wall_ms=" << info.wall_ms << "\n";
  return os.str();
}

} // namespace timebin::io
