#include "timebin/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace timebin::mc {

long sample_pair_count(double mu_pair, RngStream &rng) {
  if (mu_pair < 0.0) throw std::invalid_argument("sample_pair_count: negative mean");
  return rng.poisson(mu_pair);
}

namespace {

// 16-outcome joint distribution of one pair: nine used-port slot pairs plus
// the per-arm loss resolutions.
struct PairSampler {
  std::array<double, 16> cum{};
  std::array<PairOutcome, 16> outcome{};

  explicit PairSampler(const model::AmplitudeTable &t) {
    int n = 0;
    double acc = 0.0;
    auto push = [&](double p, int s, int i) {
      acc += p;
      cum[n] = acc;
      outcome[n] = PairOutcome{s, i};
      ++n;
    };
    for (int j = 1; j <= 3; ++j)
      for (int k = 1; k <= 3; ++k) push(t.prob(j, k), j, k);
    for (int j = 1; j <= 3; ++j) push(t.signal_only[j - 1], j, 0);
    for (int k = 1; k <= 3; ++k) push(t.idler_only[k - 1], 0, k);
    push(t.both_lost, 0, 0);
    if (std::abs(acc - 1.0) > 1e-9)
      throw std::invalid_argument("sample_pair_outcome: table is not normalized");
  }

  PairOutcome draw(RngStream &rng) const {
    const double u = rng.uniform();
    for (int i = 0; i < 16; ++i)
      if (u < cum[i]) return outcome[i];
    return outcome[15];
  }
};

int draw_marginal_slot(const model::ArmModel &arm, RngStream &rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int slot = 1; slot <= 3; ++slot) {
    acc += arm.slot_marginal[slot - 1];
    if (u < acc) return slot;
  }
  return 0; // unused port
}

} // namespace

PairOutcome sample_pair_outcome(const model::AmplitudeTable &table, RngStream &rng) {
  return PairSampler(table).draw(rng);
}

std::vector<int> sample_noise(double mu_noise, const model::ArmModel &arm, RngStream &rng) {
  if (mu_noise < 0.0) throw std::invalid_argument("sample_noise: negative mean");
  std::vector<int> slots;
  const long n = rng.poisson(mu_noise);
  slots.reserve(static_cast<std::size_t>(n));
  for (long k = 0; k < n; ++k) {
    const int slot = draw_marginal_slot(arm, rng);
    if (slot > 0) slots.push_back(slot);
  }
  return slots;
}

void GateBatchResult::merge(const GateBatchResult &other) {
  n_gates += other.n_gates;
  singles_s += other.singles_s;
  singles_i += other.singles_i;
  histogram.merge(other.histogram);
}

SimOptions sim_options(const ExperimentConfig &cfg) {
  SimOptions opts;
  opts.batch_size = cfg.sim.batch_size;
  opts.tia_window = cfg.sim.tia_window;
  return opts;
}

namespace {

struct BatchContext {
  const model::ExperimentModel &m;
  PairSampler pair_sampler;
  // Per-gate generation rates after channel thinning; detector efficiency is
  // applied per arrival by the detection stage.
  double lam_pair_both, lam_pair_sonly, lam_pair_ionly, lam_noise_s, lam_noise_i;
  double lam_total;
  long subblock;

  BatchContext(const model::ExperimentModel &model, const model::AmplitudeTable &table)
      : m(model), pair_sampler(table) {
    const double ts = m.signal.channel_t, ti = m.idler.channel_t;
    lam_pair_both = m.means.mu_pair * ts * ti;
    lam_pair_sonly = m.means.mu_pair * ts * (1.0 - ti);
    lam_pair_ionly = m.means.mu_pair * (1.0 - ts) * ti;
    lam_noise_s = m.means.mu_noise_signal * ts;
    lam_noise_i = m.means.mu_noise_idler * ti;
    lam_total = lam_pair_both + lam_pair_sonly + lam_pair_ionly + lam_noise_s + lam_noise_i;
    subblock = lam_total > 0.0 ? static_cast<long>(24.0 / lam_total) : (1L << 20);
    subblock = std::clamp(subblock, 16L, 1L << 20);
  }
};

struct EventLine {
  long long gate;
  int arm; // 0 signal, 1 idler
  int slot;
  int origin; // 0 pair, 1 noise
};

class BatchRunner {
public:
  BatchRunner(const BatchContext &ctx, long long gate_base, long n_gates, RngStream rng,
              bool record_events)
      : ctx_(ctx), base_(gate_base), n_(n_gates), rng_(rng), record_(record_events) {}

  GateBatchResult run(int tia_window) {
    clicks_s_.reserve(256);
    clicks_i_.reserve(256);
    for (long off = 0; off < n_; off += ctx_.subblock) {
      const long len = std::min(ctx_.subblock, n_ - off);
      run_subblock(off, len);
    }
    dark_scan(ctx_.m.signal, clicks_s_);
    dark_scan(ctx_.m.idler, clicks_i_);

    auto collapse = [](std::vector<long long> &v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    collapse(clicks_s_);
    collapse(clicks_i_);

    GateBatchResult res(tia_window);
    res.n_gates = n_;
    res.singles_s = clicks_s_.size();
    res.singles_i = clicks_i_.size();
    res.histogram = tia::accumulate(clicks_s_, clicks_i_, tia_window);
    return res;
  }

  const std::vector<EventLine> &events() const { return events_; }

private:
  void arrival(long long gate, int arm_idx, int slot, int origin) {
    const model::ArmModel &arm = arm_idx == 0 ? ctx_.m.signal : ctx_.m.idler;
    if (record_) events_.push_back({gate, arm_idx, slot, origin});
    const auto window = tia::detect_window(arm, slot, rng_);
    const bool hit = window && tia::window_gated(arm, *window);
    if (rng_.bernoulli(arm.efficiency) && hit)
      (arm_idx == 0 ? clicks_s_ : clicks_i_).push_back(gate);
  }

  void run_subblock(long off, long len) {
    const double n = static_cast<double>(len);
    long c;
    c = rng_.poisson(ctx_.lam_pair_both * n);
    for (long e = 0; e < c; ++e) {
      const long long gate = base_ + off + static_cast<long long>(rng_.uniform_index(len));
      const PairOutcome out = ctx_.pair_sampler.draw(rng_);
      if (out.signal_slot > 0) arrival(gate, 0, out.signal_slot, 0);
      if (out.idler_slot > 0) arrival(gate, 1, out.idler_slot, 0);
    }
    c = rng_.poisson(ctx_.lam_pair_sonly * n);
    for (long e = 0; e < c; ++e) {
      const long long gate = base_ + off + static_cast<long long>(rng_.uniform_index(len));
      const int slot = draw_marginal_slot(ctx_.m.signal, rng_);
      if (slot > 0) arrival(gate, 0, slot, 0);
    }
    c = rng_.poisson(ctx_.lam_pair_ionly * n);
    for (long e = 0; e < c; ++e) {
      const long long gate = base_ + off + static_cast<long long>(rng_.uniform_index(len));
      const int slot = draw_marginal_slot(ctx_.m.idler, rng_);
      if (slot > 0) arrival(gate, 1, slot, 0);
    }
    c = rng_.poisson(ctx_.lam_noise_s * n);
    for (long e = 0; e < c; ++e) {
      const long long gate = base_ + off + static_cast<long long>(rng_.uniform_index(len));
      const int slot = draw_marginal_slot(ctx_.m.signal, rng_);
      if (slot > 0) arrival(gate, 0, slot, 1);
    }
    c = rng_.poisson(ctx_.lam_noise_i * n);
    for (long e = 0; e < c; ++e) {
      const long long gate = base_ + off + static_cast<long long>(rng_.uniform_index(len));
      const int slot = draw_marginal_slot(ctx_.m.idler, rng_);
      if (slot > 0) arrival(gate, 1, slot, 1);
    }
  }

  void dark_scan(const model::ArmModel &arm, std::vector<long long> &clicks) {
    if (arm.dark <= 0.0) return;
    const double log1m = std::log1p(-arm.dark);
    long long pos = rng_.next_success(0, n_, log1m);
    while (pos >= 0) {
      clicks.push_back(base_ + pos);
      pos = rng_.next_success(pos + 1, n_, log1m);
    }
  }

  const BatchContext &ctx_;
  long long base_;
  long n_;
  RngStream rng_;
  bool record_;
  std::vector<long long> clicks_s_, clicks_i_;
  std::vector<EventLine> events_;
};

void emit_events(const std::vector<EventLine> &events, const SimOptions &opts) {
  if (!opts.event_sink) return;
  std::ostringstream os;
  for (const auto &e : events)
    os << e.gate << "," << (e.arm == 0 ? "signal" : "idler") << "," << e.slot << ","
       << (e.origin == 0 ? "pair" : "noise") << "\n";
  opts.event_sink(os.str());
}

} // namespace

GateBatchResult simulate_gates(const model::ExperimentModel &model, double theta_i,
                               long long n_gates, std::uint64_t seed, const SimOptions &opts) {
  if (n_gates <= 0) throw std::invalid_argument("simulate_gates: n_gates must be positive");
  const model::AmplitudeTable table = model.table(theta_i);
  const BatchContext ctx(model, table);

  const long batch = std::max<long>(1, opts.batch_size);
  const long long n_batches = (n_gates + batch - 1) / batch;
  const bool record = static_cast<bool>(opts.event_sink);

  std::vector<GateBatchResult> partial(static_cast<std::size_t>(n_batches),
                                       GateBatchResult(opts.tia_window));
  std::vector<std::vector<EventLine>> batch_events(record ? n_batches : 0);

  auto run_one = [&](long long b) {
    const long long base = b * batch;
    const long len = static_cast<long>(std::min<long long>(batch, n_gates - base));
    BatchRunner runner(ctx, base, len, RngStream(seed, opts.stream_base + b), record);
    partial[static_cast<std::size_t>(b)] = runner.run(opts.tia_window);
    if (record) batch_events[static_cast<std::size_t>(b)] = runner.events();
  };

  const int threads = record ? 1 : std::max(1, opts.threads);
  if (threads <= 1 || n_batches <= 1) {
    for (long long b = 0; b < n_batches; ++b) run_one(b);
  } else {
    std::atomic<long long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (long long b = next.fetch_add(1); b < n_batches; b = next.fetch_add(1)) run_one(b);
      });
    for (auto &th : pool) th.join();
  }

  GateBatchResult total(opts.tia_window);
  for (long long b = 0; b < n_batches; ++b) {
    total.merge(partial[static_cast<std::size_t>(b)]);
    if (record) emit_events(batch_events[static_cast<std::size_t>(b)], opts);
  }
  return total;
}

GateBatchResult simulate_gates(const ExperimentConfig &cfg, long long n_gates,
                               std::uint64_t seed, const SimOptions &opts) {
  const model::ExperimentModel m = model::build_model(cfg);
  return simulate_gates(m, cfg.interferometer_idler.phase_rad, n_gates, seed, opts);
}

FringeScan run_fringe_scan(const ExperimentConfig &cfg, const std::vector<double> &theta_list,
                           long long gates_per_point, std::uint64_t seed,
                           const SimOptions &opts) {
  if (theta_list.size() < 5)
    throw std::invalid_argument("run_fringe_scan: need at least 5 phase points");
  if (gates_per_point <= 0)
    throw std::invalid_argument("run_fringe_scan: gates per point must be positive");

  const model::ExperimentModel m = model::build_model(cfg);
  const long batch = std::max<long>(1, opts.batch_size);
  const long long batches_per_point = (gates_per_point + batch - 1) / batch;

  FringeScan scan;
  scan.points.reserve(theta_list.size());
  std::uint64_t unmatched_total = 0;
  std::uint64_t starts_total = 0;

  for (std::size_t p = 0; p < theta_list.size(); ++p) {
    SimOptions point_opts = opts;
    point_opts.stream_base = opts.stream_base + p * static_cast<std::uint64_t>(batches_per_point);
    const GateBatchResult res =
        simulate_gates(m, theta_list[p], gates_per_point, seed, point_opts);

    ScanPoint pt;
    pt.theta = theta_list[p];
    pt.n_gates = res.n_gates;
    pt.n_starts = res.histogram.n_starts;
    pt.matched_counts = res.histogram.at_delay(0);
    const double starts = std::max<double>(1.0, static_cast<double>(pt.n_starts));
    pt.rate_per_start = static_cast<double>(pt.matched_counts) / starts;
    pt.rate_err = std::sqrt(std::max<double>(1.0, static_cast<double>(pt.matched_counts))) / starts;
    pt.idler_singles_per_gate =
        static_cast<double>(res.singles_i) / static_cast<double>(res.n_gates);
    scan.points.push_back(pt);

    for (int d = -res.histogram.window; d <= res.histogram.window; ++d)
      if (d != 0) unmatched_total += res.histogram.at_delay(d);
    starts_total += res.histogram.n_starts;
  }

  const double denom = 2.0 * opts.tia_window * std::max<double>(1.0, static_cast<double>(starts_total));
  scan.accidental_per_start = static_cast<double>(unmatched_total) / denom;
  scan.accidental_err =
      std::sqrt(std::max<double>(1.0, static_cast<double>(unmatched_total))) / denom;
  return scan;
}

} // namespace timebin::mc
