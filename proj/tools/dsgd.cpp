// Command-line front end: problem generation, conditioning estimation,
// single runs, grid tuning, figure reproduction, lemma verification, and
// rate-bound evaluation.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "dsgd/algorithms.hpp"
#include "dsgd/conditioning.hpp"
#include "dsgd/harness.hpp"
#include "dsgd/io.hpp"
#include "dsgd/problem.hpp"
#include "dsgd/theory.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 4 : static_cast<int>(hw);
}

dsgd::Json parse_params_arg(const std::string& arg) {
  if (arg.empty()) return dsgd::Json::object();
  const std::size_t first = arg.find_first_not_of(" \t");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '['))
    return dsgd::Json::parse(arg);
  return dsgd::read_json_file(arg);
}

dsgd::RateParams rate_params_from_json(const dsgd::Json& j) {
  dsgd::RateParams p;
  p.L = j.value("L", 0.0);
  p.Delta = j.value("Delta", 0.0);
  p.sigma = j.value("sigma", 0.0);
  p.zeta = j.value("zeta", 0.0);
  p.zeta_bar = j.value("zeta_bar", 0.0);
  p.delta = j.value("delta", 0.0);
  p.delta_bar = j.value("delta_bar", 0.0);
  p.rho = j.value("rho", 0.0);
  p.M = j.value("M", 0.0);
  if (j.contains("D")) p.D = j.at("D").get<double>();
  p.n = j.value("n", 1L);
  p.tau = j.value("tau", 1L);
  p.R = j.value("R", 1L);
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed SGD simulation and verification suite"};
  app.require_subcommand(1);
  int threads = default_threads();
  app.add_option("--threads", threads, "worker threads for grids and sweeps");

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "generate a calibrated problem bundle");
  std::string gen_spec_path, gen_out;
  gen_cmd->add_option("--spec", gen_spec_path, "generation spec JSON")->required();
  gen_cmd->add_option("--out", gen_out, "output bundle path")->required();

  // estimate
  auto* est_cmd = app.add_subcommand("estimate", "estimate conditioning constants");
  std::string est_problem, est_out;
  double est_sigma = 0.0;
  std::uint64_t est_sampler_seed = 1;
  est_cmd->add_option("--problem", est_problem, "problem bundle")->required();
  est_cmd->add_option("--out", est_out, "output report JSON")->required();
  est_cmd->add_option("--sigma", est_sigma, "oracle sigma echoed into the report");
  est_cmd->add_option("--sampler-seed", est_sampler_seed, "sampler seed");

  // run
  auto* run_cmd = app.add_subcommand("run", "run one algorithm trajectory");
  std::string run_problem, run_algo, run_out;
  double run_eta = 0.0, run_sigma = 0.0;
  int run_tau = 1, run_rounds = 1, run_record_every = 1;
  std::uint64_t run_seed = 0;
  run_cmd->add_option("--problem", run_problem)->required();
  run_cmd->add_option("--algo", run_algo, "mbsgd | localsgd | scaffold")->required();
  run_cmd->add_option("--eta", run_eta)->required();
  run_cmd->add_option("--tau", run_tau)->required();
  run_cmd->add_option("--rounds", run_rounds)->required();
  run_cmd->add_option("--sigma", run_sigma);
  run_cmd->add_option("--seed", run_seed);
  run_cmd->add_option("--record-every", run_record_every);
  run_cmd->add_option("--out", run_out, "output directory")->required();

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "grid-tune stepsizes over seeds");
  std::string tune_spec_path, tune_out;
  tune_cmd->add_option("--spec", tune_spec_path, "experiment spec JSON")->required();
  tune_cmd->add_option("--out", tune_out, "output directory")->required();

  // reproduce
  auto* rep_cmd = app.add_subcommand("reproduce", "reproduce a figure pipeline");
  std::string rep_figure, rep_out;
  rep_cmd->add_option("--figure", rep_figure, "fig1_left | fig1_right | fig2 | fig3")
      ->required();
  rep_cmd->add_option("--out", rep_out, "output directory")->required();

  // verify-lemmas
  auto* ver_cmd = app.add_subcommand("verify-lemmas", "randomized lemma checks");
  long ver_draws = 1000;
  std::uint64_t ver_seed = 7;
  std::string ver_out;
  ver_cmd->add_option("--draws", ver_draws);
  ver_cmd->add_option("--seed", ver_seed);
  ver_cmd->add_option("--out", ver_out, "output report JSON");

  // rate
  auto* rate_cmd = app.add_subcommand("rate", "evaluate a rate bound");
  std::string rate_kind, rate_params;
  long rate_T = 0;
  rate_cmd->add_option("--kind", rate_kind)->required();
  rate_cmd->add_option("--params", rate_params, "JSON object or path to one");
  rate_cmd->add_option("--T", rate_T, "oracle budget for the stepsize assignment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen_cmd) {
      const dsgd::GenerationSpec spec =
          dsgd::generation_spec_from_json(dsgd::read_json_file(gen_spec_path));
      const dsgd::ProblemInstance p = dsgd::generate_problem(spec);
      dsgd::save_problem_bundle(p, gen_out);
      std::printf("bundle written: %s (achieved L=%.6g zeta=%.6g delta=%.6g)\n",
                  gen_out.c_str(), p.achieved.L, p.achieved.zeta, p.achieved.delta);
      return kExitOk;
    }
    if (*est_cmd) {
      const dsgd::ProblemInstance p = dsgd::load_problem_bundle(est_problem);
      const dsgd::ConditioningReport report = dsgd::estimate_all(
          p, est_sampler_seed, est_sigma, dsgd::Vector::Zero(p.dimension));
      dsgd::write_json_file(est_out, dsgd::conditioning_report_to_json(report));
      std::printf("report written: %s\n", est_out.c_str());
      return kExitOk;
    }
    if (*run_cmd) {
      const dsgd::ProblemInstance p = dsgd::load_problem_bundle(run_problem);
      dsgd::RunConfig cfg;
      cfg.algorithm = dsgd::algorithm_from_name(run_algo);
      cfg.eta = run_eta;
      cfg.tau = run_tau;
      cfg.rounds = run_rounds;
      cfg.init = dsgd::Vector::Zero(p.dimension);
      cfg.oracle.sigma = run_sigma;
      cfg.oracle.seed = run_seed;
      cfg.oracle.noise_kind =
          run_sigma > 0.0 ? dsgd::NoiseKind::gaussian_isotropic : dsgd::NoiseKind::none;
      cfg.record_every = run_record_every;
      const dsgd::Trace trace = dsgd::run_algorithm(p, cfg);
      dsgd::export_trace_csv(trace, run_out + "/trace.csv");
      dsgd::write_json_file(run_out + "/trace.json", dsgd::trace_metadata_to_json(trace));
      std::printf("trace written: %s/trace.csv (%zu records%s)\n", run_out.c_str(),
                  trace.records.size(), trace.diverged ? ", diverged" : "");
      return trace.diverged ? kExitRuntime : kExitOk;
    }
    if (*tune_cmd) {
      dsgd::ExperimentSpec spec =
          dsgd::experiment_spec_from_json(dsgd::read_json_file(tune_spec_path));
      spec.output_dir = tune_out;
      const dsgd::TuningResult result = dsgd::tune(spec, threads);
      for (const auto& t : result.algorithms)
        std::printf("%-10s chosen eta = %-10g mean metric = %.12g\n",
                    dsgd::algorithm_name(t.algorithm).c_str(), t.chosen_eta,
                    t.chosen_mean_metric);
      return kExitOk;
    }
    if (*rep_cmd) {
      const dsgd::FigureReport report =
          dsgd::reproduce_figure(dsgd::figure_name_from_string(rep_figure), rep_out, threads);
      std::printf("%s verdict: %s\n", rep_figure.c_str(), report.pass ? "pass" : "FAIL");
      std::cout << report.verdict.dump(2) << "\n";
      return report.pass ? kExitOk : kExitRuntime;
    }
    if (*ver_cmd) {
      const dsgd::ProblemInstance p =
          dsgd::generate_problem(dsgd::default_lemma_instance_spec(ver_seed ^ 0xABCDULL));
      const auto results = dsgd::run_lemma_suites(p, ver_draws, ver_seed);
      dsgd::Json j = dsgd::Json::array();
      bool all_ok = true;
      for (const auto& r : results) {
        std::printf("%-34s draws=%-6ld violations=%-4ld worst_slack=%.3e\n",
                    r.lemma.c_str(), r.draws, r.violations, r.worst_slack);
        j.push_back({{"lemma", r.lemma},
                     {"draws", r.draws},
                     {"violations", r.violations},
                     {"worst_slack", r.worst_slack}});
        all_ok = all_ok && r.violations == 0;
      }
      if (!ver_out.empty()) dsgd::write_json_file(ver_out, j);
      return all_ok ? kExitOk : kExitRuntime;
    }
    if (*rate_cmd) {
      const dsgd::RateKind kind = dsgd::rate_kind_from_name(rate_kind);
      const dsgd::Json params_json = parse_params_arg(rate_params);
      const dsgd::RateParams params = rate_params_from_json(params_json);
      const dsgd::RateBound bound = dsgd::rate_bound(kind, params);
      for (const auto& [term, value] : bound.terms)
        std::printf("%-14s %.12g\n", term.c_str(), value);
      std::printf("%-14s %.12g\n", "total", bound.total);
      long T = rate_T;
      if (T == 0 && params_json.contains("T")) T = params_json.at("T").get<long>();
      const bool has_assignment =
          kind == dsgd::RateKind::localsgd_faster || kind == dsgd::RateKind::localsgd_convex ||
          kind == dsgd::RateKind::localsgd_hs || kind == dsgd::RateKind::scaffold_speedup ||
          kind == dsgd::RateKind::scaffold_lipschitz;
      if (has_assignment && T > 0)
        std::printf("%-14s %.12g\n", "stepsize", dsgd::theoretical_stepsize(kind, params, T));
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const dsgd::Json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitValidation;
}
