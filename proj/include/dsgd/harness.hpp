#ifndef DSGD_HARNESS_HPP
#define DSGD_HARNESS_HPP

#include <optional>
#include <string>
#include <vector>

#include "dsgd/algorithms.hpp"
#include "dsgd/conditioning.hpp"
#include "dsgd/io.hpp"
#include "dsgd/problem.hpp"
#include "dsgd/svg.hpp"

namespace dsgd {

enum class MetricKind { avg_grad_norm_sq, scaffold_phase2, avg_suboptimality };

std::string metric_kind_name(MetricKind m);
MetricKind metric_kind_from_name(const std::string& name);

/// One experiment: a problem (inline generation spec or a saved bundle),
/// the algorithms to tune, and the schedule/grid/seed matrix.  Defaults
/// are the stepsize grid {3e-4 .. 0.3}, seeds {111, 222, 333}, tau = 50.
struct ExperimentSpec {
  std::optional<GenerationSpec> generation;
  std::string bundle_path;  // used when generation is empty
  std::vector<Algorithm> algorithms;
  int tau = 50;
  int rounds = 50;
  std::vector<double> stepsize_grid = {0.0003, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3};
  std::vector<std::uint64_t> seeds = {111, 222, 333};
  double sigma = 0.01;
  MetricKind metric = MetricKind::avg_grad_norm_sq;
  std::string output_dir;

  void validate() const;
};

Json experiment_spec_to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const Json& j);

struct TuningError : std::runtime_error {
  explicit TuningError(const std::string& algorithm_);
  std::string algorithm;
};

struct StepsizeResult {
  double eta = 0.0;
  double mean_metric = 0.0;  // +inf when any seed diverged
  std::vector<double> per_seed;
  std::vector<bool> diverged;
};

struct AlgorithmTuning {
  Algorithm algorithm = Algorithm::localsgd;
  std::vector<StepsizeResult> grid;
  double chosen_eta = 0.0;
  double chosen_mean_metric = 0.0;
  int chosen_index = -1;
};

struct TuningResult {
  std::vector<AlgorithmTuning> algorithms;
};

Json tuning_result_to_json(const TuningResult& result);

/// One algorithm's slot in a tuning sweep; rounds count the algorithm's
/// own outer loops (SCAFFOLD runs half as many for an equal protocol
/// budget) and metric is the tuning criterion at the full budget.
struct AlgoPlan {
  Algorithm algorithm;
  int rounds;
  MetricKind metric = MetricKind::avg_grad_norm_sq;
  double f_star = 0.0;  // only read by avg_suboptimality
};

struct TunedRuns {
  TuningResult tuning;
  // traces[plan][eta][seed]
  std::vector<std::vector<std::vector<Trace>>> traces;
};

double trace_metric(const Trace& trace, MetricKind metric, double f_star);

/// Runs the full (plan x stepsize x seed) matrix; cells execute in
/// parallel, selection is deterministic, ties break toward the smaller
/// stepsize.
TunedRuns tune_runs(const ProblemInstance& p, const std::vector<AlgoPlan>& plans,
                    int tau, const std::vector<double>& grid,
                    const std::vector<std::uint64_t>& seeds, double sigma,
                    const Vector& init, int threads);

/// Spec-level entry point: resolves the problem, tunes from the zero
/// vector, persists every trace plus the tuning table under
/// spec.output_dir.
TuningResult tune(const ExperimentSpec& spec, int threads);

/// Running value of the round-indexed metric: for mbsgd/localsgd the
/// running mean of ||grad f(xbar_t)||^2 per communication round, for
/// scaffold the running phase-2 average per protocol round pair.
std::vector<std::pair<double, double>> metric_curve_by_round(const Trace& trace,
                                                             MetricKind metric);

enum class FigureName { fig1_left, fig1_right, fig2, fig3 };

std::string figure_name_string(FigureName name);
FigureName figure_name_from_string(const std::string& name);

struct FigureReport {
  FigureName figure;
  bool pass = false;
  Json verdict;
};

/// Regenerates one of the paper-style figures end to end: calibrated
/// instances, grid tuning over three seeds, curve/sweep CSVs, SVG charts,
/// and the machine-checkable verdict JSON.
FigureReport reproduce_figure(FigureName name, const std::string& output_dir,
                              int threads);

/// Fixed far-from-optimum starting point used by the reproduction runs,
/// scaled so the measured initial gap is 1 within 2%.
Vector reproduce_init(const ProblemInstance& p, double fstar);

/// Recomputes a figure verdict from its persisted curves.csv, without
/// touching the simulator.
Json figure_verdict_from_csv(FigureName name, const std::string& output_dir);

}  // namespace dsgd

#endif
