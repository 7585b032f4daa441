#include "timebin/amplitude.hpp"

#include <cmath>
#include <stdexcept>

namespace timebin::model {

namespace {

using cd = std::complex<double>;

struct ArmAmps {
  // used port: input bin n -> slots n, n+1
  cd used_keep, used_delay;
  // unused port: input bin n -> slots n, n+1 (sign fixed by unitarity)
  cd other_keep, other_delay;
};

ArmAmps arm_amps(const ArmSplitting &sp, double theta) {
  const cd phase = std::polar(1.0, theta);
  ArmAmps m;
  m.used_keep = sp.a;
  m.used_delay = sp.b * phase;
  m.other_keep = sp.b;
  m.other_delay = -sp.a * phase;
  return m;
}

} // namespace

double AmplitudeTable::signal_marginal(int slot) const {
  double p = signal_only[slot - 1];
  for (int k = 1; k <= 3; ++k) p += prob(slot, k);
  return p;
}

double AmplitudeTable::idler_marginal(int slot) const {
  double p = idler_only[slot - 1];
  for (int j = 1; j <= 3; ++j) p += prob(j, slot);
  return p;
}

ArmSplitting arm_splitting(double extinction_db) {
  if (extinction_db >= 0.0)
    throw std::invalid_argument("extinction ratio must be negative in dB");
  // Intensity imbalance rho = |b/a|^2 from the extinction amplitude ratio.
  const double e = std::pow(10.0, extinction_db / 20.0);
  const double rho = (1.0 - e) / (1.0 + e);
  ArmSplitting sp;
  sp.a = std::sqrt(0.5 / (1.0 + rho));
  sp.b = std::sqrt(0.5 * rho / (1.0 + rho));
  return sp;
}

AmplitudeTable build_joint_amplitudes(double phi, double theta_s, double theta_i,
                                      double extinction_s_db, double extinction_i_db) {
  if (!std::isfinite(phi) || !std::isfinite(theta_s) || !std::isfinite(theta_i))
    throw std::invalid_argument("interferometer phases must be finite");

  const ArmAmps ms = arm_amps(arm_splitting(extinction_s_db), theta_s);
  const ArmAmps mi = arm_amps(arm_splitting(extinction_i_db), theta_i);

  // Single-arm state over (slot 1..3) x (port used=0 / unused=1), for input
  // bins 1 and 2.
  auto arm_state = [](const ArmAmps &m, int bin) {
    std::array<std::array<cd, 2>, 3> v{};
    v[bin - 1][0] = m.used_keep;
    v[bin][0] = m.used_delay;
    v[bin - 1][1] = m.other_keep;
    v[bin][1] = m.other_delay;
    return v;
  };
  const auto s1 = arm_state(ms, 1), s2 = arm_state(ms, 2);
  const auto i1 = arm_state(mi, 1), i2 = arm_state(mi, 2);

  const cd w = std::polar(1.0, phi) / std::sqrt(2.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  AmplitudeTable t;
  double used_sum = 0.0;
  for (int j = 0; j < 3; ++j) {
    for (int ps = 0; ps < 2; ++ps) {
      for (int k = 0; k < 3; ++k) {
        for (int pi = 0; pi < 2; ++pi) {
          const cd amp = inv_sqrt2 * s1[j][ps] * i1[k][pi] + w * s2[j][ps] * i2[k][pi];
          const double p = std::norm(amp);
          if (ps == 0 && pi == 0) {
            t.entries[j][k] = amp;
            used_sum += p;
          } else if (ps == 0) {
            t.signal_only[j] += p;
          } else if (pi == 0) {
            t.idler_only[k] += p;
          } else {
            t.both_lost += p;
          }
        }
      }
    }
  }
  t.loss_weight = 1.0 - used_sum;
  return t;
}

AmplitudeTable passthrough_amplitudes() {
  AmplitudeTable t;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  t.entries[0][0] = inv_sqrt2;
  t.entries[1][1] = inv_sqrt2;
  t.loss_weight = 0.0;
  return t;
}

double slot2_coincidence_probability(const AmplitudeTable &table) {
  return table.prob(2, 2);
}

} // namespace timebin::model
