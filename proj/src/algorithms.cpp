#include "dsgd/algorithms.hpp"

#include <cmath>
#include <stdexcept>

#include "dsgd/util.hpp"

namespace dsgd {

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::mbsgd: return "mbsgd";
    case Algorithm::localsgd: return "localsgd";
    case Algorithm::scaffold: return "scaffold";
  }
  throw std::logic_error("unknown algorithm");
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "mbsgd") return Algorithm::mbsgd;
  if (name == "localsgd") return Algorithm::localsgd;
  if (name == "scaffold") return Algorithm::scaffold;
  throw std::invalid_argument("unknown algorithm: " + name);
}

long RunConfig::total_queries() const {
  const long base = static_cast<long>(rounds) * tau;
  return algorithm == Algorithm::scaffold ? 2 * base : base;
}

void RunConfig::validate(int dimension) const {
  if (eta <= 0.0) throw std::invalid_argument("RunConfig: eta must be positive");
  if (tau < 1) throw std::invalid_argument("RunConfig: tau must be >= 1");
  if (algorithm == Algorithm::scaffold && tau < 2)
    throw std::invalid_argument("RunConfig: scaffold requires tau >= 2");
  if (rounds < 1) throw std::invalid_argument("RunConfig: rounds must be >= 1");
  if (record_every < 1) throw std::invalid_argument("RunConfig: record_every must be >= 1");
  if (init.size() != dimension)
    throw std::invalid_argument("RunConfig: init dimension mismatch");
  oracle.validate();
}

namespace {

constexpr double kDivergenceGuard = 1e12;

struct Recorder {
  const ProblemInstance& p;
  const RunConfig& cfg;
  Trace trace;
  // cached metrics for consensus stretches where xbar does not move
  Vector cached_point;
  double cached_grad_sq = 0.0;
  double cached_f = 0.0;
  bool has_cache = false;

  Recorder(const ProblemInstance& prob, const RunConfig& c) : p(prob), cfg(c) {
    trace.algorithm = c.algorithm;
    trace.eta = c.eta;
    trace.tau = c.tau;
    trace.rounds = c.rounds;
    trace.sigma = (c.oracle.noise_kind == NoiseKind::none) ? 0.0 : c.oracle.sigma;
    trace.oracle_seed = c.oracle.seed;
    trace.record_every = c.record_every;
    trace.total_queries = c.total_queries();
  }

  // Returns false when the run left the finite range (divergence).
  bool record(long t, long round, const Vector& xbar, double consensus_sq) {
    if (t % cfg.record_every != 0) return check_finite(xbar);
    double grad_sq, f;
    if (has_cache && cached_point.size() == xbar.size() && cached_point == xbar) {
      grad_sq = cached_grad_sq;
      f = cached_f;
    } else {
      grad_sq = global_grad(p, xbar).squaredNorm();
      f = global_value(p, xbar);
      cached_point = xbar;
      cached_grad_sq = grad_sq;
      cached_f = f;
      has_cache = true;
    }
    trace.records.push_back({t, round, grad_sq, f, consensus_sq});
    if (!std::isfinite(grad_sq) || !std::isfinite(f) || std::abs(f) > kDivergenceGuard)
      return false;
    return check_finite(xbar);
  }

  bool check_finite(const Vector& xbar) const {
    const double nrm = xbar.norm();
    return std::isfinite(nrm) && nrm <= kDivergenceGuard;
  }
};

double consensus_distance(const std::vector<WorkerState>& workers, const Vector& xbar) {
  double acc = 0.0;
  for (const auto& w : workers) acc += (w.iterate - xbar).squaredNorm();
  return acc / static_cast<double>(workers.size());
}

Vector mean_iterate(const std::vector<WorkerState>& workers) {
  std::vector<Vector> xs(workers.size());
  for (std::size_t i = 0; i < workers.size(); ++i) xs[i] = workers[i].iterate;
  return pairwise_mean(xs);
}

}  // namespace

Trace run_mbsgd(const ProblemInstance& p, const RunConfig& cfg) {
  cfg.validate(p.dimension);
  if (cfg.algorithm != Algorithm::mbsgd)
    throw std::invalid_argument("run_mbsgd: config is for another algorithm");
  const int n = p.num_workers;
  Recorder rec(p, cfg);
  Vector xbar = cfg.init;

  for (int r = 0; r < cfg.rounds && !rec.trace.diverged; ++r) {
    // Round-start gradients are queried at the frozen average for all tau
    // iterations; only the noise varies between queries.
    std::vector<Vector> grads(n);
    for (int i = 0; i < n; ++i) grads[i] = local_grad(p, i, xbar);
    std::vector<Vector> acc(n, Vector::Zero(p.dimension));
    for (int k = 0; k < cfg.tau; ++k) {
      const long t = static_cast<long>(r) * cfg.tau + k;
      if (!rec.record(t, r, xbar, 0.0)) {
        rec.trace.diverged = true;
        break;
      }
      for (int i = 0; i < n; ++i) {
        acc[i] += grads[i];
        if (cfg.oracle.noise_kind != NoiseKind::none && cfg.oracle.sigma > 0.0)
          acc[i] += oracle_noise(cfg.oracle, {i, t, 0}, p.dimension);
      }
    }
    if (rec.trace.diverged) break;
    xbar -= (cfg.eta / n) * pairwise_sum(acc);
  }
  rec.trace.final_iterate = xbar;
  return rec.trace;
}

Trace run_localsgd(const ProblemInstance& p, const RunConfig& cfg) {
  cfg.validate(p.dimension);
  if (cfg.algorithm != Algorithm::localsgd)
    throw std::invalid_argument("run_localsgd: config is for another algorithm");
  const int n = p.num_workers;
  Recorder rec(p, cfg);
  Vector xbar = cfg.init;
  std::vector<WorkerState> workers(n);

  for (int r = 0; r < cfg.rounds && !rec.trace.diverged; ++r) {
    for (int i = 0; i < n; ++i) {
      workers[i].iterate = xbar;
      workers[i].batch_accumulator = Vector::Zero(p.dimension);
    }
    for (int k = 0; k < cfg.tau; ++k) {
      const long t = static_cast<long>(r) * cfg.tau + k;
      const bool consensus = (k == 0);
      const Vector xt = consensus ? xbar : mean_iterate(workers);
      const double xi = consensus ? 0.0 : consensus_distance(workers, xt);
      if (!rec.record(t, r, xt, xi)) {
        rec.trace.diverged = true;
        break;
      }
      for (int i = 0; i < n; ++i) {
        const Vector g = sample_gradient(p, cfg.oracle, {i, t, 0}, workers[i].iterate);
        workers[i].batch_accumulator += g;
        if (k < cfg.tau - 1) workers[i].iterate -= cfg.eta * g;
      }
    }
    if (rec.trace.diverged) break;
    // Round boundary: the displayed update, equal to averaging the local
    // endpoints.
    std::vector<Vector> acc(n);
    for (int i = 0; i < n; ++i) acc[i] = workers[i].batch_accumulator;
    xbar -= (cfg.eta / n) * pairwise_sum(acc);
  }
  rec.trace.final_iterate = xbar;
  return rec.trace;
}

Trace run_scaffold(const ProblemInstance& p, const RunConfig& cfg) {
  cfg.validate(p.dimension);
  if (cfg.algorithm != Algorithm::scaffold)
    throw std::invalid_argument("run_scaffold: config is for another algorithm");
  const int n = p.num_workers;
  const int tau = cfg.tau;
  Recorder rec(p, cfg);
  Vector xbar = cfg.init;
  std::vector<WorkerState> workers(n);

  for (int r = 0; r < cfg.rounds && !rec.trace.diverged; ++r) {
    const long base = 2L * r * tau;
    // First round of the pair: iterates frozen, tau-sample batch gradient.
    std::vector<Vector> grads(n);
    for (int i = 0; i < n; ++i) {
      grads[i] = local_grad(p, i, xbar);
      workers[i].control_local = Vector::Zero(p.dimension);
    }
    for (int k = 0; k < tau; ++k) {
      const long t = base + k;
      if (!rec.record(t, t / tau, xbar, 0.0)) {
        rec.trace.diverged = true;
        break;
      }
      for (int i = 0; i < n; ++i) {
        workers[i].control_local += grads[i];
        if (cfg.oracle.noise_kind != NoiseKind::none && cfg.oracle.sigma > 0.0)
          workers[i].control_local += oracle_noise(cfg.oracle, {i, t, 0}, p.dimension);
      }
    }
    if (rec.trace.diverged) break;
    std::vector<Vector> controls(n);
    for (int i = 0; i < n; ++i) {
      workers[i].control_local /= static_cast<double>(tau);
      controls[i] = workers[i].control_local;
    }
    const Vector control_global = pairwise_mean(controls);

    // Second round of the pair: variance-reduced local steps for
    // k = tau .. 2 tau - 2; the query at k = 2 tau - 1 feeds only the
    // aggregation line.
    for (int i = 0; i < n; ++i) {
      workers[i].iterate = xbar;
      workers[i].batch_accumulator = Vector::Zero(p.dimension);
    }
    for (int k = tau; k < 2 * tau; ++k) {
      const long t = base + k;
      const bool consensus = (k == tau);
      const Vector xt = consensus ? xbar : mean_iterate(workers);
      const double xi = consensus ? 0.0 : consensus_distance(workers, xt);
      if (!rec.record(t, t / tau, xt, xi)) {
        rec.trace.diverged = true;
        break;
      }
      for (int i = 0; i < n; ++i) {
        const Vector g = sample_gradient(p, cfg.oracle, {i, t, 0}, workers[i].iterate);
        workers[i].batch_accumulator += g;
        if (k < 2 * tau - 1)
          workers[i].iterate -=
              cfg.eta * (g - workers[i].control_local + control_global);
      }
    }
    if (rec.trace.diverged) break;
    std::vector<Vector> acc(n);
    for (int i = 0; i < n; ++i) acc[i] = workers[i].batch_accumulator;
    xbar -= (cfg.eta / n) * pairwise_sum(acc);
  }
  rec.trace.final_iterate = xbar;
  return rec.trace;
}

Trace run_algorithm(const ProblemInstance& p, const RunConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::mbsgd: return run_mbsgd(p, cfg);
    case Algorithm::localsgd: return run_localsgd(p, cfg);
    case Algorithm::scaffold: return run_scaffold(p, cfg);
  }
  throw std::logic_error("unknown algorithm");
}

double metric_avg_grad_norm_sq(const Trace& trace) {
  if (trace.records.empty()) throw std::invalid_argument("metric: empty trace");
  std::vector<double> vals;
  vals.reserve(trace.records.size());
  for (const auto& rec : trace.records) vals.push_back(rec.grad_norm_sq);
  return pairwise_mean(vals);
}

double metric_scaffold_phase2(const Trace& trace) {
  if (trace.algorithm != Algorithm::scaffold)
    throw std::invalid_argument("metric_scaffold_phase2: trace is not from scaffold");
  if (trace.record_every != 1)
    throw std::invalid_argument("metric_scaffold_phase2: requires record_every == 1");
  if (trace.records.empty()) throw std::invalid_argument("metric: empty trace");
  std::vector<double> vals;
  for (const auto& rec : trace.records) {
    const long phase = (rec.t % (2 * trace.tau));
    if (phase >= trace.tau) vals.push_back(rec.grad_norm_sq);
  }
  if (vals.empty()) return 0.0;
  return 2.0 * pairwise_sum(vals) / static_cast<double>(trace.total_queries);
}

double metric_avg_suboptimality(const Trace& trace, double f_star) {
  if (trace.records.empty()) throw std::invalid_argument("metric: empty trace");
  std::vector<double> vals;
  vals.reserve(trace.records.size());
  for (const auto& rec : trace.records) vals.push_back(rec.f_value - f_star);
  return pairwise_mean(vals);
}

}  // namespace dsgd
