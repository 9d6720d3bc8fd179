#ifndef DSGD_ALGORITHMS_HPP
#define DSGD_ALGORITHMS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dsgd/oracle.hpp"
#include "dsgd/problem.hpp"

namespace dsgd {

enum class Algorithm { mbsgd, localsgd, scaffold };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

/// One run = one (algorithm, stepsize, seed) trajectory under the shared
/// intermittent-communication schedule.  Oracle budget per worker:
/// T = rounds * tau for mbsgd/localsgd, T = 2 * rounds * tau for scaffold
/// (Algorithm 1 spends two communication rounds per outer loop).
struct RunConfig {
  Algorithm algorithm = Algorithm::localsgd;
  double eta = 0.0;
  int tau = 1;
  int rounds = 1;
  Vector init;
  OracleConfig oracle;
  int record_every = 1;

  long total_queries() const;
  void validate(int dimension) const;
};

/// Per-worker run state: current iterate, the SCAFFOLD control variate
/// (valid during odd phases), and the in-round gradient accumulator.
struct WorkerState {
  Vector iterate;
  Vector control_local;
  Vector batch_accumulator;
};

struct TraceRecord {
  long t = 0;
  long round = 0;  // completed communication rounds before iteration t
  double grad_norm_sq = 0.0;
  double f_value = 0.0;
  double consensus_sq = 0.0;  // (1/n) sum ||x_t^i - xbar_t||^2
};

struct Trace {
  Algorithm algorithm = Algorithm::localsgd;
  double eta = 0.0;
  int tau = 1;
  int rounds = 1;
  double sigma = 0.0;
  std::uint64_t oracle_seed = 0;
  int record_every = 1;
  long total_queries = 0;
  std::vector<TraceRecord> records;
  Vector final_iterate;
  bool diverged = false;
};

Trace run_mbsgd(const ProblemInstance& p, const RunConfig& cfg);
Trace run_localsgd(const ProblemInstance& p, const RunConfig& cfg);
Trace run_scaffold(const ProblemInstance& p, const RunConfig& cfg);
Trace run_algorithm(const ProblemInstance& p, const RunConfig& cfg);

/// (1/T) sum_t ||grad f(xbar_t)||^2 over the recorded iterations.  Exact
/// when record_every == 1, otherwise the average over recorded points.
double metric_avg_grad_norm_sq(const Trace& trace);

/// (2/T) sum over second-phase iterates of ||grad f(xbar)||^2, the
/// quantity bounded by the SCAFFOLD speedup results.
double metric_scaffold_phase2(const Trace& trace);

/// (1/T) sum_t f(xbar_t) - f_star; may be negative if f_star overshoots.
double metric_avg_suboptimality(const Trace& trace, double f_star);

}  // namespace dsgd

#endif
