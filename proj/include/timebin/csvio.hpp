#pragma once

#include <string>
#include <vector>

#include "timebin/analysis.hpp"
#include "timebin/montecarlo.hpp"

namespace timebin::io {

/// Fringe scan CSV: header "theta_rad,rate,rate_err,singles". The pooled
/// accidental estimate travels in '#' comment lines so that offline refits
/// reproduce the subtracted fit exactly.
std::string fringe_scan_csv(const mc::FringeScan &scan);
mc::FringeScan parse_fringe_scan_csv(const std::string &text);

std::string sweep_csv(const std::vector<analysis::SweepRow> &rows,
                      const std::vector<double> &mc_c, const std::vector<double> &mc_err);

std::string fit_report(const analysis::FitResult &fit, const std::string &model_name);

struct ManifestInfo {
  std::string version;
  std::string command;
  std::string config_path;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  long long wall_ms = 0;
};

std::string manifest_text(const ManifestInfo &info);

} // namespace timebin::io
