// Acceptance suite: one pass/fail line per criterion, exit 0 only when
// every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "dsgd/algorithms.hpp"
#include "dsgd/conditioning.hpp"
#include "dsgd/harness.hpp"
#include "dsgd/io.hpp"
#include "dsgd/oracle.hpp"
#include "dsgd/rng.hpp"
#include "dsgd/theory.hpp"
#include "helpers.hpp"

using namespace dsgd;
using namespace dsgd::test;

namespace {

int g_failures = 0;
std::chrono::steady_clock::time_point g_start;

void report(int criterion, const std::string& what, bool ok, const std::string& detail) {
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - g_start).count();
  std::printf("criterion %d: %s — %s (%s) [t=%.1fs]\n", criterion, ok ? "PASS" : "FAIL",
              what.c_str(), detail.c_str(), secs);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

int threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 4 : static_cast<int>(hw);
}

std::string out_root() {
  const auto dir = std::filesystem::current_path() / "acceptance_out";
  return dir.string();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string series_str(const Json& node) {
  std::string s = "[";
  for (const auto& v : node.at("values")) {
    if (s.size() > 1) s += ", ";
    s += fmt(v.get<double>());
  }
  return s + "]";
}

// ---- criteria 1 & 2: figure 1 qualitative reproduction --------------------

void criterion_fig1_left(const std::string& dir) {
  const FigureReport rep = reproduce_figure(FigureName::fig1_left, dir, threads());
  const auto& v = rep.verdict;
  const bool inc = v.at("localsgd").at("strictly_increasing_in_delta").get<bool>();
  const bool spread_ok = v.at("mbsgd").at("within_20_percent").get<bool>();
  report(1, "fig1 left: LocalSGD final metric increases with delta, MbSGD flat",
         inc && spread_ok,
         "localsgd@50 " + series_str(v.at("localsgd")) + ", mbsgd@50 " +
             series_str(v.at("mbsgd")) + ", mbsgd spread " +
             fmt(v.at("mbsgd").at("max_relative_spread").get<double>()));
}

void criterion_fig1_right(const std::string& dir) {
  const FigureReport rep = reproduce_figure(FigureName::fig1_right, dir, threads());
  const auto& v = rep.verdict;
  const bool inc = v.at("scaffold").at("strictly_increasing_in_delta").get<bool>();
  const bool spread_ok = v.at("mbsgd").at("within_20_percent").get<bool>();
  report(2, "fig1 right: SCAFFOLD round-10 metric increases with delta, MbSGD flat",
         inc && spread_ok,
         "scaffold@10 " + series_str(v.at("scaffold")) + ", mbsgd@50 " +
             series_str(v.at("mbsgd")) + ", mbsgd spread " +
             fmt(v.at("mbsgd").at("max_relative_spread").get<double>()));
}

// ---- criterion 3: correlation sweeps ---------------------------------------

void criterion_sweeps(const std::string& root) {
  const FigureReport f2 = reproduce_figure(FigureName::fig2, root + "/fig2", threads());
  const FigureReport f3 = reproduce_figure(FigureName::fig3, root + "/fig3", threads());
  std::string detail;
  bool ok = true;
  for (const char* sweep : {"zeta", "delta", "lambda"}) {
    const double slope = f2.verdict.at("localsgd").at(sweep).at("slope").get<double>();
    ok = ok && slope > 0.0;
    detail += std::string("localsgd/") + sweep + " " + fmt(slope) + "; ";
  }
  for (const char* sweep : {"delta", "lambda"}) {
    const double slope = f3.verdict.at("scaffold").at(sweep).at("slope").get<double>();
    ok = ok && slope > 0.0;
    detail += std::string("scaffold/") + sweep + " " + fmt(slope) + "; ";
  }
  report(3, "appendix sweeps: all five least-squares slopes positive", ok, detail);
}

// ---- criterion 4: lemma property suites ------------------------------------

void criterion_lemmas() {
  const ProblemInstance p = generate_problem(default_lemma_instance_spec(4242));
  const auto results = run_lemma_suites(p, 1000, 7);
  bool ok = results.size() == 6;
  std::string detail;
  for (const auto& r : results) {
    ok = ok && r.violations == 0;
    detail += r.lemma + "=" + std::to_string(r.violations) + " ";
  }
  report(4, "lemma suites: 1000 draws each, zero violations beyond 1e-9", ok, detail);
}

// ---- criterion 5: oracle statistics ----------------------------------------

void criterion_oracle() {
  const ProblemInstance p = random_instance(16, 4, 0.01, 4243);
  OracleConfig cfg;
  cfg.sigma = 0.01;
  cfg.seed = 99;
  const Vector x = Vector::Constant(16, 0.1);
  const Vector truth = local_grad(p, 1, x);
  const long reps = 100000;
  Vector mean = Vector::Zero(16);
  double second = 0.0;
  for (long r = 0; r < reps; ++r) {
    const Vector noise = oracle_noise(cfg, {1, 0, r}, 16);
    mean += truth + noise;
    second += noise.squaredNorm();
  }
  mean /= static_cast<double>(reps);
  second /= static_cast<double>(reps);
  const double bias = (mean - truth).norm();
  const double bias_bound = 3.0 * cfg.sigma / std::sqrt(static_cast<double>(reps));
  const double moment_err = std::abs(second - cfg.sigma * cfg.sigma) / (cfg.sigma * cfg.sigma);
  report(5, "oracle: unbiased within 3 sigma/sqrt(N), second moment within 5%",
         bias <= bias_bound && moment_err <= 0.05,
         "bias " + fmt(bias) + " <= " + fmt(bias_bound) + ", moment rel err " +
             fmt(moment_err));
}

// ---- criterion 6: algorithm equivalences -----------------------------------

void criterion_equivalences() {
  bool ok = true;
  std::string detail;

  // (a) tau = 1: byte-identical traces
  {
    Vector d1(3), d2(3);
    d1 << 1.0, 0.5, 0.2;
    d2 << 0.8, 0.6, 0.3;
    const ProblemInstance p = diag_quadratic_instance({d1, d2}, 0.01);
    RunConfig a;
    a.algorithm = Algorithm::mbsgd;
    a.eta = 0.05;
    a.tau = 1;
    a.rounds = 60;
    a.init = Vector::Constant(3, 0.2);
    a.oracle.sigma = 0.02;
    a.oracle.seed = 111;
    RunConfig b = a;
    b.algorithm = Algorithm::localsgd;
    const Trace ta = run_mbsgd(p, a);
    const Trace tb = run_localsgd(p, b);
    bool same = ta.records.size() == tb.records.size();
    for (std::size_t i = 0; same && i < ta.records.size(); ++i)
      same = ta.records[i].grad_norm_sq == tb.records[i].grad_norm_sq &&
             ta.records[i].f_value == tb.records[i].f_value &&
             ta.records[i].consensus_sq == tb.records[i].consensus_sq;
    same = same && (ta.final_iterate - tb.final_iterate).cwiseAbs().maxCoeff() == 0.0;
    ok = ok && same;
    detail += std::string("tau1 byte-identical=") + (same ? "yes" : "NO") + "; ";
  }

  // (b) homogeneous sigma = 0: localsgd equals sequential GD to 1e-12
  {
    Vector diag(4);
    diag << 1.0, 0.7, 0.4, 0.1;
    const ProblemInstance p = diag_quadratic_instance({diag, diag, diag});
    RunConfig cfg;
    cfg.algorithm = Algorithm::localsgd;
    cfg.eta = 0.3;
    cfg.tau = 5;
    cfg.rounds = 6;
    cfg.init = Vector::Constant(4, 0.15);
    cfg.oracle.noise_kind = NoiseKind::none;
    const Trace tr = run_localsgd(p, cfg);
    const auto gd = reference_gd(p, cfg.init, cfg.eta, 30);
    double worst = 0.0;
    for (std::size_t t = 0; t < tr.records.size(); ++t)
      worst = std::max(worst, std::abs(tr.records[t].grad_norm_sq -
                                       global_grad(p, gd[t]).squaredNorm()));
    worst = std::max(worst, (tr.final_iterate - gd.back()).norm());
    ok = ok && worst <= 1e-12;
    detail += "homogeneous-vs-GD err " + fmt(worst) + "; ";
  }

  // (c) the three hand simulations
  {
    const ProblemInstance p = scalar_huber_instance();
    RunConfig cfg;
    cfg.eta = 0.5;
    cfg.tau = 2;
    cfg.rounds = 1;
    cfg.init = Vector::Constant(1, 1.0);
    cfg.oracle.noise_kind = NoiseKind::none;

    cfg.algorithm = Algorithm::mbsgd;
    const Trace tm = run_mbsgd(p, cfg);
    cfg.algorithm = Algorithm::localsgd;
    const Trace tl = run_localsgd(p, cfg);
    cfg.algorithm = Algorithm::scaffold;
    const Trace ts = run_scaffold(p, cfg);
    const bool hand = tm.final_iterate[0] == 0.0 && metric_avg_grad_norm_sq(tl) == 0.625 &&
                      ts.final_iterate[0] == 0.25 && metric_scaffold_phase2(ts) == 0.625;
    ok = ok && hand;
    detail += std::string("hand sims exact=") + (hand ? "yes" : "NO");
  }

  report(6, "algorithm equivalences and hand simulations", ok, detail);
}

// ---- criterion 7: derivative correctness -----------------------------------

void criterion_derivatives() {
  const ProblemInstance p = random_instance(10, 5, 0.05, 4244);
  CounterRng rng(4245, 1);
  double worst_grad = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int i = rep % p.num_workers;
    const Vector x = 0.8 * rng.normal_vector(p.dimension);
    const Vector fd = fd_gradient([&](const Vector& v) { return local_value(p, i, v); },
                                  x, 1e-5);
    worst_grad =
        std::max(worst_grad, (fd - local_grad(p, i, x)).lpNorm<Eigen::Infinity>());
  }
  double worst_hess = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int i = rep % p.num_workers;
    const Vector x = 0.8 * rng.normal_vector(p.dimension);
    const Matrix fd =
        fd_jacobian([&](const Vector& v) { return local_grad(p, i, v); }, x, 1e-5);
    worst_hess = std::max(worst_hess, (fd - local_hess(p, i, x)).cwiseAbs().maxCoeff());
  }
  report(7, "finite-difference agreement of gradients and hessians",
         worst_grad <= 1e-6 && worst_hess <= 1e-4,
         "grad err " + fmt(worst_grad) + " (tol 1e-6), hess err " + fmt(worst_hess) +
             " (tol 1e-4)");
}

// ---- criterion 8: theory calculators ---------------------------------------

void criterion_theory() {
  bool ok = true;
  std::string detail;

  RateParams worked;
  worked.L = 1.0;
  worked.Delta = 1.0;
  worked.n = 10;
  worked.sigma = 1.0;
  worked.zeta = 1.0;
  worked.rho = 0.0;
  worked.tau = 2;
  const double eta = theoretical_stepsize(RateKind::localsgd_faster, worked, 1000);
  const double eta_expected = 0.052913368398939982;  // independent evaluation
  ok = ok && std::abs(eta - eta_expected) <= 1e-9;
  detail += "stepsize " + fmt(eta) + "; ";

  RateParams mb;
  mb.L = mb.Delta = mb.sigma = 1.0;
  mb.n = 1;
  mb.tau = 1;
  mb.R = 100;
  const double total = rate_bound(RateKind::mbsgd, mb).total;
  ok = ok && std::abs(total - 0.11) <= 1e-9;
  detail += "mbsgd total " + fmt(total) + "; ";

  RateParams faster;
  faster.L = faster.Delta = 1.0;
  faster.tau = 10;
  faster.R = 100;
  const double clean = rate_bound(RateKind::localsgd_faster, faster).total;
  ok = ok && std::abs(clean - 0.001) <= 1e-9;

  // monotonicity over 500 randomized perturbations
  CounterRng rng(4246, 2);
  const RateKind kinds[] = {
      RateKind::mbsgd,        RateKind::localsgd_classic, RateKind::localsgd_convex_prev,
      RateKind::scaffold_classic, RateKind::scaffold_quadratic, RateKind::localsgd_faster,
      RateKind::localsgd_convex,  RateKind::localsgd_hs,    RateKind::scaffold_speedup,
      RateKind::scaffold_lipschitz};
  long bad = 0;
  for (int rep = 0; rep < 500; ++rep) {
    RateParams p;
    p.L = 0.5 + rng.uniform();
    p.Delta = 0.1 + rng.uniform();
    p.sigma = rng.uniform();
    p.zeta = rng.uniform();
    p.zeta_bar = p.zeta + rng.uniform();
    p.delta = 0.4 * rng.uniform() * p.L;
    p.delta_bar = p.delta + 0.5 * rng.uniform() * p.L;
    p.rho = 0.4 * rng.uniform() * p.L;
    p.M = rng.uniform();
    p.D = 0.5 + rng.uniform();
    p.n = 1 + static_cast<long>(rng.uniform() * 30);
    p.tau = 1 + static_cast<long>(rng.uniform() * 40);
    p.R = 2 + static_cast<long>(rng.uniform() * 500);
    const RateKind kind = kinds[rep % 10];
    const double base = rate_bound(kind, p).total;
    RateParams up = p;
    switch (static_cast<int>(rng.uniform() * 8)) {
      case 0: up.sigma *= 1.0 + rng.uniform(); break;
      case 1: up.zeta *= 1.0 + rng.uniform(); break;
      case 2: up.zeta_bar *= 1.0 + rng.uniform(); break;
      case 3: up.delta = std::min(up.delta * (1.0 + rng.uniform()), up.L); break;
      case 4: up.delta_bar = std::min(up.delta_bar * (1.0 + rng.uniform()), 2.0 * up.L); break;
      case 5: up.rho = std::min(up.rho * (1.0 + rng.uniform()), up.L); break;
      case 6: up.M *= 1.0 + rng.uniform(); break;
      case 7: up.Delta *= 1.0 + rng.uniform(); break;
    }
    if (rate_bound(kind, up).total < base - 1e-12 * std::abs(base)) ++bad;
    RateParams more = p;
    more.R = p.R + 1 + static_cast<long>(rng.uniform() * 200);
    if (rate_bound(kind, more).total > base + 1e-12 * std::abs(base)) ++bad;
  }
  ok = ok && bad == 0;
  detail += "monotonicity violations " + std::to_string(bad);
  report(8, "theory calculators: worked examples to 1e-9 and rate monotonicity", ok,
         detail);
}

// ---- criterion 9: pipeline determinism -------------------------------------

void criterion_determinism(const std::string& first_dir) {
  const std::string rerun_dir = out_root() + "/fig1_left_rerun";
  reproduce_figure(FigureName::fig1_left, rerun_dir, threads());
  bool ok = true;
  std::string detail;
  std::vector<std::filesystem::path> rel_files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(first_dir))
    if (entry.is_regular_file())
      rel_files.push_back(std::filesystem::relative(entry.path(), first_dir));
  std::sort(rel_files.begin(), rel_files.end());
  long compared = 0;
  for (const auto& rel : rel_files) {
    const std::string a = read_text_file((first_dir / rel).string());
    const std::string rerun_path = (std::filesystem::path(rerun_dir) / rel).string();
    if (!std::filesystem::exists(rerun_path)) {
      ok = false;
      detail += "missing " + rel.string() + "; ";
      continue;
    }
    if (read_text_file(rerun_path) != a) {
      ok = false;
      detail += "differs " + rel.string() + "; ";
    }
    ++compared;
  }
  report(9, "full fig1_left rerun is byte-identical", ok,
         std::to_string(compared) + " files compared" +
             (detail.empty() ? "" : "; " + detail));
}

}  // namespace

int main() {
  g_start = std::chrono::steady_clock::now();
  const std::string root = out_root();
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root);

  criterion_fig1_left(root + "/fig1_left");
  criterion_fig1_right(root + "/fig1_right");
  criterion_sweeps(root);
  criterion_lemmas();
  criterion_oracle();
  criterion_equivalences();
  criterion_derivatives();
  criterion_theory();
  criterion_determinism(root + "/fig1_left");

  if (g_failures == 0) {
    std::printf("acceptance: all 9 criteria PASS\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return 1;
}
