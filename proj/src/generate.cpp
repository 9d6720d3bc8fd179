#include <cmath>

#include <Eigen/QR>

#include "dsgd/conditioning.hpp"
#include "dsgd/problem.hpp"
#include "dsgd/rng.hpp"

namespace dsgd {

double calibrate_increasing(const std::function<double(double)>& fn,
                            const std::string& knob, double target, double lo,
                            double hi, double rel_tol, int max_iters) {
  const double tol = rel_tol * target;
  double fa = fn(lo);
  if (std::abs(fa - target) <= tol) return lo;
  if (fa > target) throw CalibrationError(knob, target, fa);
  double fb = fn(hi);
  if (std::abs(fb - target) <= tol) return hi;
  if (fb < target) throw CalibrationError(knob, target, fb);

  double a = lo, b = hi;
  double best_x = lo, best_f = fa;
  int side = 0;
  for (int it = 0; it < max_iters; ++it) {
    double x = a + (target - fa) * (b - a) / (fb - fa);
    if (!(x > a && x < b)) x = 0.5 * (a + b);
    const double fx = fn(x);
    if (std::abs(fx - target) < std::abs(best_f - target)) {
      best_x = x;
      best_f = fx;
    }
    if (std::abs(fx - target) <= tol) return x;
    if (fx < target) {
      a = x;
      fa = fx;
      if (side == -1) fb = 0.5 * (fb - target) + target;  // Illinois damping
      side = -1;
    } else {
      b = x;
      fb = fx;
      if (side == +1) fa = 0.5 * (fa - target) + target;
      side = +1;
    }
  }
  if (std::abs(best_f - target) <= tol) return best_x;
  throw CalibrationError(knob, target, best_f);
}

namespace {

struct GenerationParts {
  Matrix base;                  // A = sqrt(Lambda) Q^T
  std::vector<Matrix> noise;    // N_i, mean-centered
  std::vector<Vector> unit_dirs;  // u_i, mean-centered
  std::vector<Vector> top_dirs;   // dominant-curvature eigendirections
};

ProblemInstance assemble(const GenerationSpec& spec, const GenerationParts& parts,
                         double eps, double s) {
  ProblemInstance p;
  p.dimension = spec.dimension;
  p.num_workers = spec.num_workers;
  p.seed = spec.seed;
  p.targets = {spec.target_L, spec.target_zeta, spec.target_delta};
  p.scale_rows = static_cast<double>(spec.num_workers) /
                 (static_cast<double>(spec.num_workers) * spec.dimension);
  p.locals.resize(spec.num_workers);
  for (int i = 0; i < spec.num_workers; ++i) {
    LocalObjective& lo = p.locals[i];
    lo.data_matrix = parts.base + eps * parts.noise[i];
    lo.anchor = s * parts.unit_dirs[i];
    lo.targets = lo.data_matrix * lo.anchor;
    lo.reg_weight = spec.reg_weight;
  }
  return p;
}

}  // namespace

ProblemInstance generate_problem(const GenerationSpec& spec) {
  spec.validate();
  const int d = spec.dimension;
  const int n = spec.num_workers;

  GenerationParts parts;
  {
    // Spectrum: after the n/m = 1/d row weight, the quadratic-regime worker
    // Hessian is (1/d) A^T A, so Lambda carries d times the wanted
    // eigenvalues, linearly spaced on [0, target_L] inclusive.
    Vector eff(d);
    for (int j = 0; j < d; ++j)
      eff[j] = (d == 1) ? spec.target_L
                        : spec.target_L * static_cast<double>(j) / (d - 1);
    CounterRng rng_q(spec.seed, /*stream=*/1);
    const Matrix gauss = rng_q.normal_matrix(d, d);
    Eigen::HouseholderQR<Matrix> qr(gauss);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    parts.base.resize(d, d);
    for (int j = 0; j < d; ++j)
      parts.base.row(j) = std::sqrt(d * eff[j]) * q.col(j).transpose();
    if (d >= 4) {
      parts.top_dirs.push_back(q.col(d - 1));
      parts.top_dirs.push_back(q.col(d - 2));
    }
  }
  {
    CounterRng rng_n(spec.seed, /*stream=*/2);
    parts.noise.resize(n);
    Matrix mean = Matrix::Zero(d, d);
    for (int i = 0; i < n; ++i) {
      parts.noise[i] = rng_n.normal_matrix(d, d);
      mean += parts.noise[i];
    }
    mean /= static_cast<double>(n);
    for (int i = 0; i < n; ++i) parts.noise[i] -= mean;
  }
  {
    CounterRng rng_u(spec.seed, /*stream=*/3);
    parts.unit_dirs.resize(n);
    Vector mean = Vector::Zero(d);
    for (int i = 0; i < n; ++i) {
      Vector g = rng_u.normal_vector(d);
      g /= g.norm();
      parts.unit_dirs[i] = g;
      mean += g;
    }
    mean /= static_cast<double>(n);
    for (int i = 0; i < n; ++i) parts.unit_dirs[i] -= mean;
  }

  const std::uint64_t plan_seed = spec.seed ^ 0xCA11Bull;
  const PowerIterOptions calib_opts{60, 1e-5};
  const PowerIterOptions final_opts{};

  auto measured_delta = [&](double eps, double s, const PowerIterOptions& opts) {
    const ProblemInstance trial = assemble(spec, parts, eps, s);
    return estimate_delta(trial, generation_sample_plan(trial, plan_seed), opts);
  };
  auto measured_zeta = [&](double eps, double s) {
    const ProblemInstance trial = assemble(spec, parts, eps, s);
    return estimate_zeta(trial, generation_sample_plan(trial, plan_seed));
  };

  const double eps_hi = std::sqrt(static_cast<double>(d) * spec.target_L);
  double eps = 0.0, s = 0.0;
  // Alternate the two dials; the coupling is weak (anchors move residuals
  // only slightly), so one refinement pass normally settles both.
  for (int pass = 0; pass < 3; ++pass) {
    if (spec.target_delta > 0.0)
      eps = calibrate_increasing(
          [&](double e) { return measured_delta(e, s, calib_opts); }, "delta",
          spec.target_delta, 0.0, eps_hi, spec.calibration_tolerance,
          spec.calibration_max_iters);
    if (spec.target_zeta > 0.0)
      s = calibrate_increasing([&](double v) { return measured_zeta(eps, v); },
                               "zeta", spec.target_zeta, 0.0, 10.0,
                               spec.calibration_tolerance,
                               spec.calibration_max_iters);
    const bool delta_ok =
        spec.target_delta == 0.0 ||
        std::abs(measured_delta(eps, s, calib_opts) - spec.target_delta) <=
            spec.calibration_tolerance * spec.target_delta;
    const bool zeta_ok =
        spec.target_zeta == 0.0 ||
        std::abs(measured_zeta(eps, s) - spec.target_zeta) <=
            spec.calibration_tolerance * spec.target_zeta;
    if (delta_ok && zeta_ok) break;
  }

  ProblemInstance p = assemble(spec, parts, eps, s);
  const SamplePlan plan = generation_sample_plan(p, plan_seed);
  p.achieved.L = estimate_L(p, plan, final_opts);
  p.achieved.zeta = estimate_zeta(p, plan);
  p.achieved.delta = estimate_delta(p, plan, final_opts);
  p.validate();
  return p;
}

}  // namespace dsgd
