#include "dsgd/theory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "dsgd/conditioning.hpp"
#include "dsgd/rng.hpp"
#include "dsgd/util.hpp"

namespace dsgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSlackTol = 1e-9;

double cbrt_pos(double v) { return std::cbrt(v); }
double fifth_root(double v) { return std::pow(v, 0.2); }

// num / den with the convention that a vanishing denominator factor sends
// the stepsize constraint to +infinity.
double guarded(double num, double den) {
  if (den <= 0.0) return kInf;
  return num / den;
}

double scaled_violation(double failure, double rhs) {
  return failure / std::max(1.0, std::abs(rhs));
}

}  // namespace

void RateParams::validate() const {
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string("RateParams: ") + name +
                                  " must be finite and non-negative");
  };
  nonneg(L, "L");
  nonneg(Delta, "Delta");
  nonneg(sigma, "sigma");
  nonneg(zeta, "zeta");
  nonneg(zeta_bar, "zeta_bar");
  nonneg(delta, "delta");
  nonneg(delta_bar, "delta_bar");
  nonneg(rho, "rho");
  nonneg(M, "M");
  if (n < 1 || tau < 1 || R < 1)
    throw std::invalid_argument("RateParams: n, tau, R must be positive");
  const double tol = 1e-12;
  if (rho > L + tol) throw std::invalid_argument("RateParams: rho > L");
  if (delta > L + tol) throw std::invalid_argument("RateParams: delta > L");
  if (delta_bar > 2.0 * L + tol)
    throw std::invalid_argument("RateParams: delta_bar > 2L");
}

std::string rate_kind_name(RateKind kind) {
  switch (kind) {
    case RateKind::mbsgd: return "mbsgd";
    case RateKind::localsgd_classic: return "localsgd_classic";
    case RateKind::localsgd_convex_prev: return "localsgd_convex_prev";
    case RateKind::scaffold_classic: return "scaffold_classic";
    case RateKind::scaffold_quadratic: return "scaffold_quadratic";
    case RateKind::localsgd_faster: return "localsgd_faster";
    case RateKind::localsgd_convex: return "localsgd_convex";
    case RateKind::localsgd_hs: return "localsgd_hs";
    case RateKind::scaffold_speedup: return "scaffold_speedup";
    case RateKind::scaffold_lipschitz: return "scaffold_lipschitz";
  }
  throw std::logic_error("unknown rate kind");
}

RateKind rate_kind_from_name(const std::string& name) {
  for (RateKind k :
       {RateKind::mbsgd, RateKind::localsgd_classic, RateKind::localsgd_convex_prev,
        RateKind::scaffold_classic, RateKind::scaffold_quadratic,
        RateKind::localsgd_faster, RateKind::localsgd_convex, RateKind::localsgd_hs,
        RateKind::scaffold_speedup, RateKind::scaffold_lipschitz})
    if (rate_kind_name(k) == name) return k;
  throw std::invalid_argument("unknown rate kind: " + name);
}

RateBound rate_bound(RateKind kind, const RateParams& p) {
  p.validate();
  const double n = static_cast<double>(p.n);
  const double tau = static_cast<double>(p.tau);
  const double R = static_cast<double>(p.R);
  const bool needs_D = kind == RateKind::localsgd_convex_prev ||
                       kind == RateKind::localsgd_convex;
  if (needs_D && !std::isfinite(p.D))
    throw std::invalid_argument("rate_bound: this kind requires the distance bound D");

  RateBound out;
  out.kind = kind;
  auto term = [&out](const std::string& name, double value) {
    out.terms.emplace_back(name, value);
  };
  const double noise_sqrt = std::sqrt(p.L * p.Delta * p.sigma * p.sigma / (n * tau * R));
  const double local_noise =
      std::pow(p.L * p.Delta * p.sigma, 2.0 / 3.0) / (std::cbrt(tau) * std::pow(R, 2.0 / 3.0));

  switch (kind) {
    case RateKind::mbsgd:
    case RateKind::scaffold_classic:
      term("optimization", p.L * p.Delta / R);
      term("noise", noise_sqrt);
      break;
    case RateKind::localsgd_classic:
      term("optimization", p.L * p.Delta / R);
      term("noise", noise_sqrt);
      term("heterogeneity", std::pow(p.L * p.Delta * p.zeta / R, 2.0 / 3.0));
      term("local_noise", local_noise);
      break;
    case RateKind::localsgd_faster:
      term("optimization", (p.L / tau + p.rho) * p.Delta / R);
      term("noise", noise_sqrt);
      term("heterogeneity", std::pow(p.L * p.Delta * p.zeta / R, 2.0 / 3.0));
      term("local_noise", local_noise);
      break;
    case RateKind::localsgd_convex_prev:
    case RateKind::localsgd_convex: {
      const double similarity =
          (kind == RateKind::localsgd_convex_prev) ? p.zeta_bar : p.zeta;
      const double D2 = p.D * p.D;
      const double D4 = D2 * D2;
      term("optimization", p.L * D2 / (tau * R));
      term("noise", p.sigma * p.D / std::sqrt(n * tau * R));
      term("heterogeneity", cbrt_pos(p.L * similarity * similarity * D4 / (R * R)));
      term("local_noise", cbrt_pos(p.L * p.sigma * p.sigma * D4 / (tau * R * R)));
      break;
    }
    case RateKind::scaffold_quadratic:
      term("optimization", (p.L / tau + p.delta_bar + p.rho) * p.Delta / R);
      term("noise", noise_sqrt);
      break;
    case RateKind::localsgd_hs:
      term("optimization", p.L * p.Delta / R);
      term("noise", noise_sqrt);
      term("heterogeneity", std::pow(p.delta_bar * p.Delta * p.zeta / R, 2.0 / 3.0));
      term("local_noise", local_noise);
      term("higher_order",
           fifth_root(p.M * p.M * std::pow(p.Delta, 4) * std::pow(p.zeta, 4) /
                      std::pow(R, 4)));
      break;
    case RateKind::scaffold_speedup:
      term("optimization", (p.L / tau + std::sqrt(p.L * p.delta) + p.rho) * p.Delta / R);
      term("noise", noise_sqrt);
      term("local_noise", local_noise);
      break;
    case RateKind::scaffold_lipschitz:
      term("optimization",
           (p.L / tau + std::sqrt(p.delta_bar * p.delta) + p.rho) * p.Delta / R);
      term("noise", noise_sqrt);
      term("local_noise", std::pow(p.delta_bar * p.Delta * p.sigma, 2.0 / 3.0) /
                              (std::cbrt(tau) * std::pow(R, 2.0 / 3.0)));
      break;
  }
  std::vector<double> vals;
  for (const auto& [name, v] : out.terms) vals.push_back(v);
  out.total = pairwise_sum(vals);
  return out;
}

double theoretical_stepsize(RateKind kind, const RateParams& p, long T) {
  p.validate();
  if (T < 1) throw std::invalid_argument("theoretical_stepsize: T must be positive");
  const double n = static_cast<double>(p.n);
  const double tau = static_cast<double>(p.tau);
  const double Tt = static_cast<double>(T);
  const double L = p.L, Delta = p.Delta, sigma = p.sigma, zeta = p.zeta,
               delta_bar = p.delta_bar, delta = p.delta, rho = p.rho, M = p.M;
  std::vector<double> terms;

  switch (kind) {
    case RateKind::localsgd_faster:
      terms = {
          guarded(1.0, L),
          guarded(1.0 - rho / L, 6.0 * rho * (tau - 1.0)),
          std::sqrt(guarded(2.0 * Delta * n, L * sigma * sigma * Tt)),
          cbrt_pos(guarded(4.0 * Delta,
                           27.0 * L * L * (tau - 1.0) * (tau - 1.0) * zeta * zeta * Tt)),
          cbrt_pos(guarded(2.0 * Delta, 9.0 * L * L * (tau - 1.0) * sigma * sigma * Tt)),
      };
      break;
    case RateKind::localsgd_convex: {
      if (!std::isfinite(p.D))
        throw std::invalid_argument("theoretical_stepsize: localsgd_convex requires D");
      const double D2 = p.D * p.D;
      terms = {
          guarded(1.0, 2.0 * L),
          std::sqrt(guarded(n * D2, 3.0 * sigma * sigma * Tt)),
          cbrt_pos(guarded(D2, 3.0 * L * (tau - 1.0) * (tau - 1.0) * zeta * zeta * Tt)),
          cbrt_pos(guarded(D2, 3.0 * L * (tau - 1.0) * sigma * sigma * Tt)),
      };
      break;
    }
    case RateKind::localsgd_hs:
      terms = {
          guarded(1.0, L),
          guarded(1.0, 3.0 * L * (tau - 1.0)),
          std::sqrt(guarded(2.0 * Delta * n, L * sigma * sigma * Tt)),
          cbrt_pos(guarded(Delta, 54.0 * delta_bar * delta_bar * (tau - 1.0) *
                                      (tau - 1.0) * zeta * zeta * Tt)),
          cbrt_pos(guarded(Delta, 9.0 * L * L * (tau - 1.0) * sigma * sigma * Tt)),
          fifth_root(guarded(8.0 * Delta, 81.0 * M * M * std::pow(tau - 1.0, 3) *
                                              (2.0 * tau - 1.0) * std::pow(zeta, 4) * Tt)),
      };
      break;
    case RateKind::scaffold_speedup:
      terms = {
          guarded(1.0, 2.0 * L),
          guarded(1.0 - rho / L, 6.0 * rho * (tau - 1.0)),
          guarded(1.0, 4.0 * std::sqrt(L * delta) * tau),
          std::sqrt(guarded(Delta * n, 2.0 * L * sigma * sigma * Tt)),
          cbrt_pos(guarded(2.0 * Delta, 3.0 * L * L * (tau - 1.0) * sigma * sigma * Tt)),
      };
      break;
    case RateKind::scaffold_lipschitz:
      terms = {
          guarded(1.0, 2.0 * L),
          guarded(1.0 - rho / L, 6.0 * rho * (tau - 1.0)),
          guarded(1.0, 6.0 * std::sqrt(delta_bar * delta) * tau),
          std::sqrt(guarded(2.0 * Delta * n, L * sigma * sigma * Tt)),
          cbrt_pos(guarded(Delta, 12.0 * delta_bar * delta_bar * (tau - 1.0) * sigma *
                                      sigma * Tt)),
      };
      break;
    default:
      throw std::invalid_argument(
          "theoretical_stepsize: no printed assignment for kind " + rate_kind_name(kind));
  }
  double eta = kInf;
  for (double t : terms) eta = std::min(eta, t);
  if (!std::isfinite(eta))
    throw std::invalid_argument("theoretical_stepsize: all constraint terms infinite");
  return eta;
}

CheckResult check_variance_identity(const std::vector<Vector>& points, const Vector& y) {
  if (points.empty()) throw std::invalid_argument("check_variance_identity: no points");
  std::vector<Vector> pts = points;
  const Vector xbar = pairwise_mean(pts);
  double lhs = 0.0, rhs = 0.0;
  for (const auto& x : points) {
    lhs += (x - xbar).squaredNorm();
    rhs += (x - y).squaredNorm();
  }
  lhs /= static_cast<double>(points.size());
  rhs /= static_cast<double>(points.size());
  CheckResult res;
  res.lhs = lhs;
  res.rhs = rhs;
  res.violation = scaled_violation(lhs - rhs, rhs);
  res.ok = lhs <= rhs + 1e-12;
  return res;
}

CheckResult check_weak_convexity_contraction(const ProblemInstance& p, int worker,
                                             const Vector& x, const Vector& y,
                                             double eta, double L, double rho) {
  if (!(L > rho) || rho < 0.0)
    throw std::invalid_argument("check_weak_convexity_contraction: need 0 <= rho < L");
  if (!(eta > 0.0) || eta > 2.0 / (L - rho))
    throw std::invalid_argument("check_weak_convexity_contraction: eta outside (0, 2/(L-rho)]");
  const Vector gx = local_grad(p, worker, x);
  const Vector gy = local_grad(p, worker, y);
  CheckResult res;
  res.lhs = ((x - eta * gx) - (y - eta * gy)).squaredNorm();
  res.rhs = (1.0 + 2.0 * L * rho * eta / (L - rho)) * (x - y).squaredNorm();
  res.violation = scaled_violation(res.lhs - res.rhs, res.rhs);
  res.ok = res.violation <= kSlackTol;
  return res;
}

CheckResult check_smooth_contraction(const ProblemInstance& p, int worker,
                                     const Vector& x, const Vector& y, double eta,
                                     double L) {
  if (!(eta >= 0.0) || !(L >= 0.0))
    throw std::invalid_argument("check_smooth_contraction: eta and L must be non-negative");
  const Vector gx = local_grad(p, worker, x);
  const Vector gy = local_grad(p, worker, y);
  CheckResult res;
  res.lhs = ((x - eta * gx) - (y - eta * gy)).squaredNorm();
  res.rhs = (1.0 + L * eta) * (1.0 + L * eta) * (x - y).squaredNorm();
  res.violation = scaled_violation(res.lhs - res.rhs, res.rhs);
  res.ok = res.violation <= kSlackTol;
  return res;
}

QBoundsResult check_q_bounds(const ProblemInstance& p, const std::vector<Vector>& points,
                             double L, double delta_bar, double M) {
  if (static_cast<int>(points.size()) != p.num_workers)
    throw std::invalid_argument("check_q_bounds: one point per worker required");
  std::vector<Vector> pts = points;
  const Vector xbar = pairwise_mean(pts);
  std::vector<Vector> grads(p.num_workers);
  for (int i = 0; i < p.num_workers; ++i) grads[i] = local_grad(p, i, points[i]);
  const Vector avg_grad = pairwise_mean(grads);

  QBoundsResult res;
  res.q = (avg_grad - global_grad(p, xbar)).squaredNorm();
  double xi = 0.0;
  for (const auto& x : points) xi += (x - xbar).squaredNorm();
  res.xi = xi / p.num_workers;
  res.plain_rhs = L * L * res.xi;
  res.refined_rhs = 8.0 * delta_bar * delta_bar * res.xi + 0.5 * M * M * res.xi * res.xi;
  res.violation_plain = scaled_violation(res.q - res.plain_rhs, res.plain_rhs);
  res.violation_refined = scaled_violation(res.q - res.refined_rhs, res.refined_rhs);
  res.ok = res.violation_plain <= kSlackTol && res.violation_refined <= kSlackTol;
  return res;
}

CheckResult check_smooth_weakly_convex_inequality(const ProblemInstance& p, int worker,
                                                  const Vector& x, const Vector& y,
                                                  double L, double rho) {
  if (!(L > rho) || rho < 0.0)
    throw std::invalid_argument("check_smooth_weakly_convex_inequality: need 0 <= rho < L");
  const Vector diff_g = local_grad(p, worker, x) - local_grad(p, worker, y);
  CheckResult res;
  res.lhs = (L - rho) * (x - y).dot(diff_g);
  res.rhs = diff_g.squaredNorm() - rho * L * (x - y).squaredNorm();
  // >=-type inequality: failure when lhs falls short of rhs.
  res.violation = scaled_violation(res.rhs - res.lhs, res.rhs);
  res.ok = res.violation <= kSlackTol;
  return res;
}

GenerationSpec default_lemma_instance_spec(std::uint64_t seed) {
  GenerationSpec spec;
  spec.dimension = 16;
  spec.num_workers = 5;
  spec.seed = seed;
  spec.target_L = 1.0;
  spec.target_zeta = 0.05;
  spec.target_delta = 0.03;
  spec.reg_weight = 0.01;
  return spec;
}

namespace {

struct EigenProbe {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
};

EigenProbe probe_hessian(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().maxCoeff(), es.eigenvalues().minCoeff()};
}

double spectral_norm_dense(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return std::max(std::abs(es.eigenvalues().maxCoeff()),
                  std::abs(es.eigenvalues().minCoeff()));
}

// Draw a point from the same law the default plan uses.
Vector region_point(const ProblemInstance& p, CounterRng& rng) {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(p.dimension));
  const double pick = rng.uniform();
  if (pick < 0.5) return Vector(1.0 * inv_sqrt_d * rng.normal_vector(p.dimension));
  const int i = static_cast<int>(rng.uniform() * p.num_workers) % p.num_workers;
  return Vector(p.locals[i].anchor + 0.5 * inv_sqrt_d * rng.normal_vector(p.dimension));
}

}  // namespace

std::vector<LemmaSuiteResult> run_lemma_suites(const ProblemInstance& p, long draws,
                                               std::uint64_t seed) {
  if (draws < 1) throw std::invalid_argument("run_lemma_suites: draws must be positive");
  const int n = p.num_workers;
  const int d = p.dimension;

  // Constants: sampled plan maxima, analytic envelopes from h'' in [0, 1]
  // and the regularizer curvature range, and the draw sites themselves.
  const SamplePlan plan = default_sample_plan(p, seed ^ 0x5EEDull);
  double L_max = estimate_L(p, plan);
  double rho_max = estimate_rho(p, plan);
  double db_max = estimate_delta_bar(p, plan);
  double m_max = estimate_M(p, plan);
  for (int i = 0; i < n; ++i) {
    const LocalObjective& lo = p.locals[i];
    double a_norm_sq = 0.0;
    if (lo.data_matrix.rows() > 0)
      a_norm_sq = probe_hessian(lo.data_matrix.transpose() * lo.data_matrix).lambda_max;
    L_max = std::max(L_max, p.scale_rows * a_norm_sq + 2.0 * lo.reg_weight);
    rho_max = std::max(rho_max, 0.5 * lo.reg_weight);
  }

  // Pre-generate q-bound draw sites; they also refine the sampled maxima.
  CounterRng rng_q(seed, /*stream=*/11);
  std::vector<std::vector<Vector>> q_draws;
  q_draws.reserve(draws);
  for (long t = 0; t < draws; ++t) {
    const Vector base = region_point(p, rng_q);
    const double scale =
        1e-3 * std::pow(300.0, rng_q.uniform()) / std::sqrt(static_cast<double>(d));
    std::vector<Vector> pts(n);
    for (int i = 0; i < n; ++i) pts[i] = base + scale * rng_q.normal_vector(d);
    q_draws.push_back(std::move(pts));
  }
  for (const auto& pts : q_draws) {
    std::vector<Vector> copy = pts;
    const Vector xbar = pairwise_mean(copy);
    std::vector<Matrix> h_at;
    std::vector<Vector> sites;
    sites.push_back(xbar);
    for (int i = 0; i < n; ++i) {
      sites.push_back(pts[i]);
      sites.push_back(0.5 * (xbar + pts[i]));
    }
    Matrix mean_at_xbar;
    for (std::size_t s = 0; s < sites.size(); ++s) {
      Matrix mean = Matrix::Zero(d, d);
      for (int i = 0; i < n; ++i) {
        const Matrix h = local_hess(p, i, sites[s]);
        const EigenProbe pr = probe_hessian(h);
        L_max = std::max(L_max, std::max(std::abs(pr.lambda_max), std::abs(pr.lambda_min)));
        rho_max = std::max(rho_max, -pr.lambda_min);
        mean += h;
      }
      mean /= static_cast<double>(n);
      for (int i = 0; i < n; ++i)
        db_max = std::max(db_max, spectral_norm_dense(local_hess(p, i, sites[s]) - mean));
      if (s == 0) {
        mean_at_xbar = mean;
      } else {
        const double dist = (sites[s] - xbar).norm();
        if (dist > 0.0)
          m_max = std::max(m_max, spectral_norm_dense(mean - mean_at_xbar) / dist);
      }
    }
  }

  const double L_infl = 1.05 * L_max;
  const double rho_infl = 1.05 * rho_max;
  const double db_infl = 1.05 * db_max;
  const double m_infl = 1.05 * m_max;

  std::vector<LemmaSuiteResult> results;
  auto run_suite = [&](const std::string& name,
                       const std::function<double(long)>& one_draw) {
    LemmaSuiteResult r;
    r.lemma = name;
    r.draws = draws;
    r.worst_slack = -kInf;
    for (long t = 0; t < draws; ++t) {
      const double v = one_draw(t);
      r.worst_slack = std::max(r.worst_slack, v);
      if (v > kSlackTol) ++r.violations;
    }
    results.push_back(r);
  };

  CounterRng rng_v(seed, /*stream=*/12);
  run_suite("variance_identity", [&](long) {
    std::vector<Vector> pts(n);
    for (int i = 0; i < n; ++i) pts[i] = region_point(p, rng_v);
    return check_variance_identity(pts, region_point(p, rng_v)).violation;
  });

  auto segment_draw = [&](CounterRng& rng, Vector& x, Vector& y, int& worker) {
    worker = static_cast<int>(rng.uniform() * n) % n;
    x = region_point(p, rng);
    const double r = 1e-3 * std::pow(500.0, rng.uniform());
    Vector dir = rng.normal_vector(d);
    dir /= dir.norm();
    y = x + r * dir;
  };

  CounterRng rng_w(seed, /*stream=*/13);
  run_suite("weak_convexity_contraction", [&](long) {
    Vector x, y;
    int worker;
    segment_draw(rng_w, x, y, worker);
    const double eta = rng_w.uniform() * 2.0 / (L_infl - rho_infl);
    return check_weak_convexity_contraction(p, worker, x, y, std::max(eta, 1e-12),
                                            L_infl, rho_infl)
        .violation;
  });

  CounterRng rng_s(seed, /*stream=*/14);
  run_suite("smooth_contraction", [&](long) {
    Vector x, y;
    int worker;
    segment_draw(rng_s, x, y, worker);
    const double eta = 1e-4 * std::pow(2e4 / L_infl, rng_s.uniform());
    return check_smooth_contraction(p, worker, x, y, eta, L_infl).violation;
  });

  {
    LemmaSuiteResult plain, refined;
    plain.lemma = "q_bound_plain";
    refined.lemma = "q_bound_refined";
    plain.draws = refined.draws = draws;
    plain.worst_slack = refined.worst_slack = -kInf;
    for (long t = 0; t < draws; ++t) {
      const QBoundsResult r = check_q_bounds(p, q_draws[t], L_infl, db_infl, m_infl);
      plain.worst_slack = std::max(plain.worst_slack, r.violation_plain);
      refined.worst_slack = std::max(refined.worst_slack, r.violation_refined);
      if (r.violation_plain > kSlackTol) ++plain.violations;
      if (r.violation_refined > kSlackTol) ++refined.violations;
    }
    results.push_back(plain);
    results.push_back(refined);
  }

  CounterRng rng_c(seed, /*stream=*/15);
  run_suite("smooth_weakly_convex_inequality", [&](long) {
    Vector x, y;
    int worker;
    segment_draw(rng_c, x, y, worker);
    return check_smooth_weakly_convex_inequality(p, worker, x, y, L_infl, rho_infl)
        .violation;
  });

  return results;
}

}  // namespace dsgd
