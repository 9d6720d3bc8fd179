#include "dsgd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>

#include "dsgd/util.hpp"

namespace dsgd {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kFigureGenerationSeed = 2027;
}  // namespace

std::string metric_kind_name(MetricKind m) {
  switch (m) {
    case MetricKind::avg_grad_norm_sq: return "avg_grad_norm_sq";
    case MetricKind::scaffold_phase2: return "scaffold_phase2";
    case MetricKind::avg_suboptimality: return "avg_suboptimality";
  }
  throw std::logic_error("unknown metric kind");
}

MetricKind metric_kind_from_name(const std::string& name) {
  if (name == "avg_grad_norm_sq") return MetricKind::avg_grad_norm_sq;
  if (name == "scaffold_phase2") return MetricKind::scaffold_phase2;
  if (name == "avg_suboptimality") return MetricKind::avg_suboptimality;
  throw std::invalid_argument("unknown metric kind: " + name);
}

void ExperimentSpec::validate() const {
  if (!generation && bundle_path.empty())
    throw std::invalid_argument("ExperimentSpec: problem missing");
  if (generation) generation->validate();
  if (algorithms.empty()) throw std::invalid_argument("ExperimentSpec: no algorithms");
  if (stepsize_grid.empty()) throw std::invalid_argument("ExperimentSpec: empty grid");
  for (double eta : stepsize_grid)
    if (eta <= 0.0) throw std::invalid_argument("ExperimentSpec: stepsizes must be positive");
  if (seeds.empty()) throw std::invalid_argument("ExperimentSpec: empty seed list");
  if (tau < 1 || rounds < 1)
    throw std::invalid_argument("ExperimentSpec: tau and rounds must be positive");
  if (sigma < 0.0) throw std::invalid_argument("ExperimentSpec: sigma must be non-negative");
  if (metric == MetricKind::scaffold_phase2)
    for (Algorithm a : algorithms)
      if (a != Algorithm::scaffold)
        throw std::invalid_argument(
            "ExperimentSpec: scaffold_phase2 metric applies only to scaffold");
}

Json experiment_spec_to_json(const ExperimentSpec& spec) {
  Json j;
  if (spec.generation)
    j["problem"] = generation_spec_to_json(*spec.generation);
  else
    j["problem"] = spec.bundle_path;
  Json algos = Json::array();
  for (Algorithm a : spec.algorithms) algos.push_back(algorithm_name(a));
  j["algorithms"] = std::move(algos);
  j["tau"] = spec.tau;
  j["rounds"] = spec.rounds;
  j["stepsize_grid"] = spec.stepsize_grid;
  j["seeds"] = spec.seeds;
  j["sigma"] = spec.sigma;
  j["metric"] = metric_kind_name(spec.metric);
  if (!spec.output_dir.empty()) j["output_dir"] = spec.output_dir;
  return j;
}

ExperimentSpec experiment_spec_from_json(const Json& j) {
  ExperimentSpec spec;
  const auto& problem = j.at("problem");
  if (problem.is_string())
    spec.bundle_path = problem.get<std::string>();
  else
    spec.generation = generation_spec_from_json(problem);
  if (j.contains("algorithms")) {
    spec.algorithms.clear();
    for (const auto& a : j.at("algorithms"))
      spec.algorithms.push_back(algorithm_from_name(a.get<std::string>()));
  }
  spec.tau = j.value("tau", 50);
  spec.rounds = j.value("rounds", 50);
  if (j.contains("stepsize_grid"))
    spec.stepsize_grid = j.at("stepsize_grid").get<std::vector<double>>();
  if (j.contains("seeds")) spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  spec.sigma = j.value("sigma", 0.01);
  if (j.contains("metric"))
    spec.metric = metric_kind_from_name(j.at("metric").get<std::string>());
  spec.output_dir = j.value("output_dir", std::string());
  spec.validate();
  return spec;
}

TuningError::TuningError(const std::string& algorithm_)
    : std::runtime_error("tuning failed: every grid stepsize diverged for " + algorithm_),
      algorithm(algorithm_) {}

double trace_metric(const Trace& trace, MetricKind metric, double f_star) {
  if (trace.diverged) return kInf;
  switch (metric) {
    case MetricKind::avg_grad_norm_sq: return metric_avg_grad_norm_sq(trace);
    case MetricKind::scaffold_phase2: return metric_scaffold_phase2(trace);
    case MetricKind::avg_suboptimality: return metric_avg_suboptimality(trace, f_star);
  }
  throw std::logic_error("unknown metric kind");
}

TunedRuns tune_runs(const ProblemInstance& p, const std::vector<AlgoPlan>& plans,
                    int tau, const std::vector<double>& grid,
                    const std::vector<std::uint64_t>& seeds, double sigma,
                    const Vector& init, int threads) {
  const int n_plans = static_cast<int>(plans.size());
  const int n_etas = static_cast<int>(grid.size());
  const int n_seeds = static_cast<int>(seeds.size());
  TunedRuns out;
  out.traces.assign(n_plans, std::vector<std::vector<Trace>>(
                                 n_etas, std::vector<Trace>(n_seeds)));

  const int cells = n_plans * n_etas * n_seeds;
  parallel_for_indexed(
      cells,
      [&](int idx) {
        const int a = idx / (n_etas * n_seeds);
        const int e = (idx / n_seeds) % n_etas;
        const int s = idx % n_seeds;
        RunConfig cfg;
        cfg.algorithm = plans[a].algorithm;
        cfg.eta = grid[e];
        cfg.tau = tau;
        cfg.rounds = plans[a].rounds;
        cfg.init = init;
        cfg.oracle.sigma = sigma;
        cfg.oracle.seed = seeds[s];
        cfg.oracle.noise_kind =
            sigma > 0.0 ? NoiseKind::gaussian_isotropic : NoiseKind::none;
        cfg.record_every = 1;
        out.traces[a][e][s] = run_algorithm(p, cfg);
      },
      threads);

  for (int a = 0; a < n_plans; ++a) {
    AlgorithmTuning tuning;
    tuning.algorithm = plans[a].algorithm;
    for (int e = 0; e < n_etas; ++e) {
      StepsizeResult r;
      r.eta = grid[e];
      for (int s = 0; s < n_seeds; ++s) {
        const Trace& tr = out.traces[a][e][s];
        r.diverged.push_back(tr.diverged);
        r.per_seed.push_back(trace_metric(tr, plans[a].metric, plans[a].f_star));
      }
      bool any_diverged = false;
      for (bool d : r.diverged) any_diverged = any_diverged || d;
      bool any_inf = any_diverged;
      for (double v : r.per_seed) any_inf = any_inf || !std::isfinite(v);
      r.mean_metric = any_inf ? kInf : pairwise_mean(r.per_seed);
      tuning.grid.push_back(std::move(r));
    }
    tuning.chosen_index = -1;
    tuning.chosen_mean_metric = kInf;
    for (int e = 0; e < n_etas; ++e) {
      if (tuning.grid[e].mean_metric < tuning.chosen_mean_metric) {
        tuning.chosen_mean_metric = tuning.grid[e].mean_metric;
        tuning.chosen_index = e;
      }
    }
    if (tuning.chosen_index < 0 || !std::isfinite(tuning.chosen_mean_metric))
      throw TuningError(algorithm_name(plans[a].algorithm));
    tuning.chosen_eta = grid[tuning.chosen_index];
    out.tuning.algorithms.push_back(std::move(tuning));
  }
  return out;
}

Json tuning_result_to_json(const TuningResult& result) {
  Json j;
  Json algos = Json::array();
  for (const auto& t : result.algorithms) {
    Json a;
    a["algorithm"] = algorithm_name(t.algorithm);
    Json grid = Json::array();
    for (const auto& g : t.grid) {
      Json e;
      e["eta"] = g.eta;
      if (std::isfinite(g.mean_metric))
        e["mean_metric"] = g.mean_metric;
      else
        e["mean_metric"] = "infinity";
      Json per_seed = Json::array();
      for (double v : g.per_seed) {
        if (std::isfinite(v))
          per_seed.push_back(v);
        else
          per_seed.push_back("infinity");
      }
      e["per_seed"] = std::move(per_seed);
      e["diverged"] = g.diverged;
      grid.push_back(std::move(e));
    }
    a["grid"] = std::move(grid);
    a["chosen_eta"] = t.chosen_eta;
    a["chosen_mean_metric"] = t.chosen_mean_metric;
    algos.push_back(std::move(a));
  }
  j["algorithms"] = std::move(algos);
  return j;
}

TuningResult tune(const ExperimentSpec& spec, int threads) {
  spec.validate();
  const ProblemInstance p = spec.generation ? generate_problem(*spec.generation)
                                            : load_problem_bundle(spec.bundle_path);
  double f_star = 0.0;
  if (spec.metric == MetricKind::avg_suboptimality) f_star = approximate_fstar(p);
  std::vector<AlgoPlan> plans;
  for (Algorithm a : spec.algorithms)
    plans.push_back({a, spec.rounds, spec.metric, f_star});
  const Vector init = Vector::Zero(p.dimension);
  TunedRuns tuned =
      tune_runs(p, plans, spec.tau, spec.stepsize_grid, spec.seeds, spec.sigma, init,
                threads);

  if (!spec.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(spec.output_dir);
    Json summary;
    ExperimentSpec echo = spec;
    echo.output_dir.clear();  // keep artifacts byte-identical across locations
    summary["spec"] = experiment_spec_to_json(echo);
    summary["problem_achieved"] = {{"L", p.achieved.L},
                                   {"zeta", p.achieved.zeta},
                                   {"delta", p.achieved.delta}};
    summary["tuning"] = tuning_result_to_json(tuned.tuning);
    export_summary_json(summary, spec.output_dir + "/tuning.json");
    for (std::size_t a = 0; a < plans.size(); ++a) {
      for (std::size_t e = 0; e < spec.stepsize_grid.size(); ++e) {
        for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
          const Trace& tr = tuned.traces[a][e][s];
          std::ostringstream base;
          base << spec.output_dir << "/traces/" << algorithm_name(plans[a].algorithm)
               << "/eta" << e << "_seed" << spec.seeds[s];
          export_trace_csv(tr, base.str() + ".csv");
          write_json_file(base.str() + ".json", trace_metadata_to_json(tr));
        }
      }
    }
  }
  return tuned.tuning;
}

std::vector<std::pair<double, double>> metric_curve_by_round(const Trace& trace,
                                                             MetricKind metric) {
  if (trace.record_every != 1)
    throw std::invalid_argument("metric_curve_by_round: requires record_every == 1");
  std::vector<std::pair<double, double>> curve;
  const long tau = trace.tau;
  double running = 0.0;
  if (metric == MetricKind::scaffold_phase2) {
    if (trace.algorithm != Algorithm::scaffold)
      throw std::invalid_argument("metric_curve_by_round: phase2 needs a scaffold trace");
    for (const auto& rec : trace.records) {
      if (rec.t % (2 * tau) >= tau) running += rec.grad_norm_sq;
      if ((rec.t + 1) % (2 * tau) == 0)
        curve.emplace_back(static_cast<double>((rec.t + 1) / tau),
                           2.0 * running / static_cast<double>(rec.t + 1));
    }
    return curve;
  }
  if (metric != MetricKind::avg_grad_norm_sq)
    throw std::invalid_argument("metric_curve_by_round: unsupported metric");
  for (const auto& rec : trace.records) {
    running += rec.grad_norm_sq;
    if ((rec.t + 1) % tau == 0)
      curve.emplace_back(static_cast<double>((rec.t + 1) / tau),
                         running / static_cast<double>(rec.t + 1));
  }
  return curve;
}

std::string figure_name_string(FigureName name) {
  switch (name) {
    case FigureName::fig1_left: return "fig1_left";
    case FigureName::fig1_right: return "fig1_right";
    case FigureName::fig2: return "fig2";
    case FigureName::fig3: return "fig3";
  }
  throw std::logic_error("unknown figure");
}

FigureName figure_name_from_string(const std::string& name) {
  if (name == "fig1_left") return FigureName::fig1_left;
  if (name == "fig1_right") return FigureName::fig1_right;
  if (name == "fig2") return FigureName::fig2;
  if (name == "fig3") return FigureName::fig3;
  throw std::invalid_argument("unknown figure: " + name);
}

Vector reproduce_init(const ProblemInstance& p, double fstar) {
  // A few concentrated coordinates rather than a spread direction, so the
  // trajectory actually crosses the regularizer's non-convex band
  // |x_l| > 1/sqrt(3).
  const int k = std::max(1, p.dimension / 25);
  Vector dir = Vector::Zero(p.dimension);
  for (int l = 0; l < k; ++l) dir[l] = 1.0;
  dir /= dir.norm();
  const double radius = calibrate_increasing(
      [&](double r) { return estimate_Delta(p, r * dir, fstar); }, "init_radius",
      1.0, 0.0, 100.0, 0.02, 80);
  return radius * dir;
}

namespace {

struct SweepPoint {
  std::string sweep;
  double param = 0.0;
  GenerationSpec gen;
  int job = -1;  // index into the deduplicated job list
};

struct FigureSetup {
  std::vector<AlgoPlan> plans;
  std::vector<int> criterion_round;  // per plan
  std::vector<SweepPoint> points;
  bool curve_figure = false;  // fig1_*: full metric-vs-round curves
};

GenerationSpec figure_generation_spec(double zeta, double delta, double lambda) {
  GenerationSpec gen;
  gen.dimension = 100;
  gen.num_workers = 10;
  gen.seed = kFigureGenerationSeed;
  gen.target_L = 1.0;
  gen.target_zeta = zeta;
  gen.target_delta = delta;
  gen.reg_weight = lambda;
  return gen;
}

FigureSetup figure_setup(FigureName name) {
  FigureSetup setup;
  switch (name) {
    case FigureName::fig1_left:
      setup.plans = {{Algorithm::mbsgd, 50, MetricKind::avg_grad_norm_sq, 0.0},
                     {Algorithm::localsgd, 50, MetricKind::avg_grad_norm_sq, 0.0}};
      setup.criterion_round = {50, 50};
      for (double delta : {0.01, 0.02, 0.03})
        setup.points.push_back({"delta", delta, figure_generation_spec(0.03, delta, 0.01)});
      setup.curve_figure = true;
      break;
    case FigureName::fig1_right:
      // SCAFFOLD consumes two protocol rounds per outer loop, so 25 outer
      // loops give the same 50-round communication budget as MbSGD.
      setup.plans = {{Algorithm::mbsgd, 50, MetricKind::avg_grad_norm_sq, 0.0},
                     {Algorithm::scaffold, 25, MetricKind::scaffold_phase2, 0.0}};
      setup.criterion_round = {50, 10};
      for (double delta : {0.1, 0.2, 0.3})
        setup.points.push_back({"delta", delta, figure_generation_spec(0.0, delta, 0.01)});
      setup.curve_figure = true;
      break;
    case FigureName::fig2:
      setup.plans = {{Algorithm::localsgd, 50, MetricKind::avg_grad_norm_sq, 0.0}};
      setup.criterion_round = {50};
      for (double zeta : {0.03, 0.04, 0.05, 0.06, 0.07})
        setup.points.push_back({"zeta", zeta, figure_generation_spec(zeta, 0.01, 0.01)});
      for (double delta : {0.01, 0.015, 0.02, 0.025, 0.03})
        setup.points.push_back({"delta", delta, figure_generation_spec(0.03, delta, 0.01)});
      for (double lambda : {0.01, 0.015, 0.02, 0.025, 0.03})
        setup.points.push_back(
            {"lambda", lambda, figure_generation_spec(0.03, 0.01, lambda)});
      break;
    case FigureName::fig3:
      setup.plans = {{Algorithm::scaffold, 25, MetricKind::scaffold_phase2, 0.0}};
      setup.criterion_round = {10};
      for (double delta : {0.1, 0.15, 0.2, 0.25, 0.3})
        setup.points.push_back({"delta", delta, figure_generation_spec(0.0, delta, 0.01)});
      for (double lambda : {0.01, 0.015, 0.02, 0.025, 0.03})
        setup.points.push_back(
            {"lambda", lambda, figure_generation_spec(0.0, 0.1, lambda)});
      break;
  }
  return setup;
}

struct CurveRow {
  std::string algorithm;
  std::string sweep;
  double param = 0.0;
  double round = 0.0;
  double value = 0.0;
};

void write_curves_csv(const std::vector<CurveRow>& rows, const std::string& path) {
  std::string out = "algorithm,sweep,param,round,value\n";
  for (const auto& r : rows) {
    out += r.algorithm;
    out += ',';
    out += r.sweep;
    out += ',';
    out += format_double(r.param);
    out += ',';
    out += format_double(r.round);
    out += ',';
    out += format_double(r.value);
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<CurveRow> read_curves_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "algorithm,sweep,param,round,value")
    throw std::runtime_error("curves csv: bad header in " + path);
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CurveRow r;
    std::istringstream ls(line);
    std::string field;
    std::getline(ls, r.algorithm, ',');
    std::getline(ls, r.sweep, ',');
    std::getline(ls, field, ',');
    r.param = std::stod(field);
    std::getline(ls, field, ',');
    r.round = std::stod(field);
    std::getline(ls, field, ',');
    r.value = std::stod(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

// Values at one (algorithm, criterion round), keyed by (sweep, param) in
// first-seen order.
std::vector<std::pair<double, double>> criterion_series(const std::vector<CurveRow>& rows,
                                                        const std::string& algorithm,
                                                        const std::string& sweep,
                                                        double round) {
  std::vector<std::pair<double, double>> series;
  for (const auto& r : rows) {
    if (r.algorithm != algorithm || r.sweep != sweep || r.round != round) continue;
    series.emplace_back(r.param, r.value);
  }
  std::sort(series.begin(), series.end());
  return series;
}

bool strictly_increasing(const std::vector<std::pair<double, double>>& series) {
  for (std::size_t i = 1; i < series.size(); ++i)
    if (!(series[i].second > series[i - 1].second)) return false;
  return !series.empty();
}

double max_relative_spread(const std::vector<std::pair<double, double>>& series) {
  std::vector<double> vals;
  for (const auto& [p, v] : series) vals.push_back(v);
  const double mean = pairwise_mean(vals);
  double worst = 0.0;
  for (double v : vals) worst = std::max(worst, std::abs(v - mean) / mean);
  return worst;
}

double least_squares_slope(const std::vector<std::pair<double, double>>& series) {
  const double n = static_cast<double>(series.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : series) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double num = 0.0, den = 0.0;
  for (const auto& [x, y] : series) {
    num += (x - mx) * (y - my);
    den += (x - mx) * (x - mx);
  }
  return num / den;
}

Json series_to_json(const std::vector<std::pair<double, double>>& series) {
  Json params = Json::array(), values = Json::array();
  for (const auto& [p, v] : series) {
    params.push_back(p);
    values.push_back(v);
  }
  return Json{{"params", std::move(params)}, {"values", std::move(values)}};
}

Json build_verdict(FigureName name, const std::vector<CurveRow>& rows) {
  Json verdict;
  verdict["figure"] = figure_name_string(name);
  bool pass = true;
  switch (name) {
    case FigureName::fig1_left: {
      const auto local = criterion_series(rows, "localsgd", "delta", 50.0);
      const auto mb = criterion_series(rows, "mbsgd", "delta", 50.0);
      const bool inc = strictly_increasing(local);
      const double spread = max_relative_spread(mb);
      verdict["localsgd"] = series_to_json(local);
      verdict["localsgd"]["round"] = 50;
      verdict["localsgd"]["strictly_increasing_in_delta"] = inc;
      verdict["mbsgd"] = series_to_json(mb);
      verdict["mbsgd"]["round"] = 50;
      verdict["mbsgd"]["max_relative_spread"] = spread;
      verdict["mbsgd"]["within_20_percent"] = spread <= 0.2;
      pass = inc && spread <= 0.2;
      break;
    }
    case FigureName::fig1_right: {
      const auto sc = criterion_series(rows, "scaffold", "delta", 10.0);
      const auto mb = criterion_series(rows, "mbsgd", "delta", 50.0);
      const bool inc = strictly_increasing(sc);
      const double spread = max_relative_spread(mb);
      verdict["scaffold"] = series_to_json(sc);
      verdict["scaffold"]["round"] = 10;
      verdict["scaffold"]["strictly_increasing_in_delta"] = inc;
      verdict["mbsgd"] = series_to_json(mb);
      verdict["mbsgd"]["round"] = 50;
      verdict["mbsgd"]["max_relative_spread"] = spread;
      verdict["mbsgd"]["within_20_percent"] = spread <= 0.2;
      pass = inc && spread <= 0.2;
      break;
    }
    case FigureName::fig2: {
      Json sweeps;
      for (const std::string sweep : {"zeta", "delta", "lambda"}) {
        const auto series = criterion_series(rows, "localsgd", sweep, 50.0);
        const double slope = least_squares_slope(series);
        Json s = series_to_json(series);
        s["round"] = 50;
        s["slope"] = slope;
        s["positive_slope"] = slope > 0.0;
        pass = pass && slope > 0.0;
        sweeps[sweep] = std::move(s);
      }
      verdict["localsgd"] = std::move(sweeps);
      break;
    }
    case FigureName::fig3: {
      Json sweeps;
      for (const std::string sweep : {"delta", "lambda"}) {
        const auto series = criterion_series(rows, "scaffold", sweep, 10.0);
        const double slope = least_squares_slope(series);
        Json s = series_to_json(series);
        s["round"] = 10;
        s["slope"] = slope;
        s["positive_slope"] = slope > 0.0;
        pass = pass && slope > 0.0;
        sweeps[sweep] = std::move(s);
      }
      verdict["scaffold"] = std::move(sweeps);
      break;
    }
  }
  verdict["pass"] = pass;
  return verdict;
}

std::string param_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct InstanceJob {
  GenerationSpec gen;
  ProblemInstance problem;
  double fstar = 0.0;
  Vector init;
  double delta_at_init = 0.0;
  TunedRuns tuned;
};

}  // namespace

FigureReport reproduce_figure(FigureName name, const std::string& output_dir,
                              int threads) {
  namespace fs = std::filesystem;
  FigureSetup setup = figure_setup(name);

  // Deduplicate sweep points that share a generation spec (the base point
  // of fig2/fig3 appears in every sweep).
  std::vector<InstanceJob> jobs;
  std::map<std::string, int> job_index;
  for (auto& pt : setup.points) {
    std::ostringstream key;
    key << pt.gen.target_zeta << '|' << pt.gen.target_delta << '|' << pt.gen.reg_weight;
    auto it = job_index.find(key.str());
    if (it == job_index.end()) {
      it = job_index.emplace(key.str(), static_cast<int>(jobs.size())).first;
      InstanceJob job;
      job.gen = pt.gen;
      jobs.push_back(std::move(job));
    }
    pt.job = it->second;
  }

  parallel_for_indexed(
      static_cast<int>(jobs.size()),
      [&](int i) {
        jobs[i].problem = generate_problem(jobs[i].gen);
        jobs[i].fstar = approximate_fstar(jobs[i].problem);
        jobs[i].init = reproduce_init(jobs[i].problem, jobs[i].fstar);
        jobs[i].delta_at_init =
            estimate_Delta(jobs[i].problem, jobs[i].init, jobs[i].fstar);
      },
      threads);

  const ExperimentSpec defaults;  // grid, seeds, sigma, tau defaults
  for (auto& job : jobs)
    job.tuned = tune_runs(job.problem, setup.plans, defaults.tau, defaults.stepsize_grid,
                          defaults.seeds, defaults.sigma, job.init, threads);

  // Assemble per-round curves (3-seed means) and the criterion rows.
  std::vector<CurveRow> rows;
  std::vector<Curve> fig1_curves;
  std::map<std::string, std::vector<Curve>> sweep_curves;
  for (std::size_t a = 0; a < setup.plans.size(); ++a) {
    const AlgoPlan& plan = setup.plans[a];
    const std::string algo = algorithm_name(plan.algorithm);
    for (const auto& pt : setup.points) {
      const InstanceJob& job = jobs[pt.job];
      const int chosen = job.tuned.tuning.algorithms[a].chosen_index;
      std::vector<std::vector<std::pair<double, double>>> per_seed;
      for (std::size_t s = 0; s < defaults.seeds.size(); ++s)
        per_seed.push_back(
            metric_curve_by_round(job.tuned.traces[a][chosen][s], plan.metric));
      std::vector<std::pair<double, double>> mean_curve;
      for (std::size_t k = 0; k < per_seed[0].size(); ++k) {
        std::vector<double> vals;
        for (const auto& c : per_seed) vals.push_back(c[k].second);
        mean_curve.emplace_back(per_seed[0][k].first, pairwise_mean(vals));
      }
      if (setup.curve_figure) {
        for (const auto& [round, value] : mean_curve)
          rows.push_back({algo, pt.sweep, pt.param, round, value});
        fig1_curves.push_back(
            {algo + ", δ=" + param_tag(pt.param), mean_curve});
      } else {
        const double want = static_cast<double>(setup.criterion_round[a]);
        for (const auto& [round, value] : mean_curve)
          if (round == want)
            rows.push_back({algo, pt.sweep, pt.param, round, value});
      }
    }
  }

  fs::create_directories(output_dir);
  write_curves_csv(rows, output_dir + "/curves.csv");

  // Charts.
  if (setup.curve_figure) {
    PlotOptions opts;
    opts.title = figure_name_string(name);
    opts.y_label = "avg squared gradient norm";
    render_plot_svg(fig1_curves, output_dir + "/plot.svg", opts);
  } else {
    std::map<std::string, std::vector<std::pair<double, double>>> by_sweep;
    for (const auto& r : rows) by_sweep[r.sweep].emplace_back(r.param, r.value);
    for (auto& [sweep, series] : by_sweep) {
      std::sort(series.begin(), series.end());
      const double slope = least_squares_slope(series);
      double mx = 0.0, my = 0.0;
      for (const auto& [x, y] : series) {
        mx += x;
        my += y;
      }
      mx /= static_cast<double>(series.size());
      my /= static_cast<double>(series.size());
      Curve fit;
      fit.label = "linear fit";
      for (const auto& [x, y] : series)
        fit.points.emplace_back(x, my + slope * (x - mx));
      PlotOptions opts;
      opts.title = figure_name_string(name) + ": " + sweep + " sweep";
      opts.x_label = sweep;
      opts.y_label = "tuned metric";
      render_plot_svg({{algorithm_name(setup.plans[0].algorithm), series}, fit},
                      output_dir + "/plot_" + sweep + ".svg", opts);
    }
  }

  // Chosen-stepsize traces.
  for (std::size_t a = 0; a < setup.plans.size(); ++a) {
    const std::string algo = algorithm_name(setup.plans[a].algorithm);
    for (const auto& pt : setup.points) {
      const InstanceJob& job = jobs[pt.job];
      const int chosen = job.tuned.tuning.algorithms[a].chosen_index;
      for (std::size_t s = 0; s < defaults.seeds.size(); ++s) {
        const Trace& tr = job.tuned.traces[a][chosen][s];
        std::ostringstream base;
        base << output_dir << "/traces/" << pt.sweep << "_" << param_tag(pt.param) << "/"
             << algo << "_seed" << defaults.seeds[s];
        export_trace_csv(tr, base.str() + ".csv");
        write_json_file(base.str() + ".json", trace_metadata_to_json(tr));
      }
    }
  }

  const Json verdict = build_verdict(name, rows);
  write_json_file(output_dir + "/verdict.json", verdict);

  Json summary;
  summary["figure"] = figure_name_string(name);
  Json points = Json::array();
  for (const auto& pt : setup.points) {
    const InstanceJob& job = jobs[pt.job];
    Json pj;
    pj["sweep"] = pt.sweep;
    pj["param"] = pt.param;
    pj["generation"] = generation_spec_to_json(pt.gen);
    pj["achieved"] = {{"L", job.problem.achieved.L},
                      {"zeta", job.problem.achieved.zeta},
                      {"delta", job.problem.achieved.delta}};
    pj["fstar_estimate"] = job.fstar;
    pj["Delta_at_init"] = job.delta_at_init;
    Json chosen;
    for (std::size_t a = 0; a < setup.plans.size(); ++a)
      chosen[algorithm_name(setup.plans[a].algorithm)] =
          job.tuned.tuning.algorithms[a].chosen_eta;
    pj["chosen_eta"] = std::move(chosen);
    pj["tuning"] = tuning_result_to_json(job.tuned.tuning);
    points.push_back(std::move(pj));
  }
  summary["points"] = std::move(points);
  summary["verdict"] = verdict;
  export_summary_json(summary, output_dir + "/summary.json");

  FigureReport report;
  report.figure = name;
  report.verdict = verdict;
  report.pass = verdict.at("pass").get<bool>();
  return report;
}

Json figure_verdict_from_csv(FigureName name, const std::string& output_dir) {
  return build_verdict(name, read_curves_csv(output_dir + "/curves.csv"));
}

}  // namespace dsgd
