#include "dsgd/conditioning.hpp"

#include <algorithm>
#include <cmath>

#include "dsgd/rng.hpp"
#include "dsgd/util.hpp"

namespace dsgd {

SamplePlan default_sample_plan(const ProblemInstance& p, std::uint64_t seed,
                               int num_points) {
  SamplePlan plan;
  plan.seed = seed;
  plan.radius = 1.0;
  const int d = p.dimension;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  CounterRng rng(seed, /*stream=*/0x5A3Dull);
  plan.points.push_back(Vector::Zero(d));
  for (const auto& lo : p.locals) plan.points.push_back(lo.anchor);

  const int half = num_points / 2;
  for (int s = 0; s < half; ++s)
    plan.points.push_back(1.0 * inv_sqrt_d * rng.normal_vector(d));
  for (int s = 0; s < num_points - half; ++s) {
    const Vector& anchor = p.locals[s % p.num_workers].anchor;
    plan.points.push_back(anchor + 0.5 * inv_sqrt_d * rng.normal_vector(d));
  }

  CounterRng pair_rng(seed, /*stream=*/0x9A17ull);
  for (const auto& x : plan.points) {
    // log-spaced separations across [1e-3, 1e-1]
    const double r = 1e-3 * std::pow(100.0, pair_rng.uniform());
    Vector dir = pair_rng.normal_vector(d);
    dir /= dir.norm();
    plan.pairs.emplace_back(x, x + r * dir);
  }
  return plan;
}

SamplePlan generation_sample_plan(const ProblemInstance& p, std::uint64_t seed,
                                  int num_points) {
  SamplePlan plan;
  plan.seed = seed;
  const int d = p.dimension;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  // Row norms are at most sqrt(d * L); a 0.2-radius cloud keeps residual
  // projections a few tenths at most, inside the quadratic branch.
  const double radius = 0.2;
  plan.radius = radius;

  CounterRng rng(seed, /*stream=*/0x6E4Aull);
  plan.points.push_back(Vector::Zero(d));
  for (const auto& lo : p.locals) plan.points.push_back(lo.anchor);
  for (int s = 0; s < num_points; ++s) {
    const Vector center =
        (s % 2 == 0) ? Vector(Vector::Zero(d)) : p.locals[(s / 2) % p.num_workers].anchor;
    plan.points.push_back(center + radius * inv_sqrt_d * rng.normal_vector(d));
  }

  CounterRng pair_rng(seed, /*stream=*/0x6E4Bull);
  for (const auto& x : plan.points) {
    const double r = 1e-3 * std::pow(50.0, pair_rng.uniform());
    Vector dir = pair_rng.normal_vector(d);
    dir /= dir.norm();
    plan.pairs.emplace_back(x, x + r * dir);
  }
  return plan;
}

double power_iteration(const std::function<Vector(const Vector&)>& apply, int dim,
                       const PowerIterOptions& opts, std::uint64_t seed,
                       bool* converged) {
  CounterRng rng(seed, /*stream=*/0x7011ull);
  Vector v = rng.normal_vector(dim);
  double vnorm = v.norm();
  if (vnorm == 0.0) {
    v.setOnes();
    vnorm = v.norm();
  }
  v /= vnorm;
  double lambda = 0.0;
  bool ok = false;
  for (int it = 0; it < opts.max_iters; ++it) {
    const Vector w = apply(v);
    lambda = v.dot(w);
    const double wnorm = w.norm();
    if (wnorm == 0.0) {  // operator annihilates v: dominant eigenvalue 0
      lambda = 0.0;
      ok = true;
      break;
    }
    const double resid = (w - lambda * v).norm();
    v = w / wnorm;
    if (resid <= opts.tol * std::max(1.0, std::abs(lambda))) {
      ok = true;
      break;
    }
  }
  if (converged) *converged = ok;
  return lambda;
}

namespace {

// All worker Hessians at one point, applied matrix-free through the
// cached h'' residual weights.
struct HessianCache {
  const ProblemInstance& p;
  std::vector<Vector> loss_weights;  // h''(A_i x - y_i) per worker
  std::vector<Vector> reg_diag;

  HessianCache(const ProblemInstance& prob, const Vector& x) : p(prob) {
    loss_weights.reserve(p.num_workers);
    reg_diag.reserve(p.num_workers);
    for (int i = 0; i < p.num_workers; ++i) {
      const LocalObjective& lo = p.locals[i];
      Vector res;
      if (lo.data_matrix.rows() > 0) {
        res = lo.data_matrix * x - lo.targets;
        for (int j = 0; j < res.size(); ++j) res[j] = huber_second_deriv(res[j]);
      }
      loss_weights.push_back(std::move(res));
      reg_diag.push_back(regularizer_hess_diag(lo.reg_weight, x));
    }
  }

  Vector apply(int i, const Vector& v) const {
    const LocalObjective& lo = p.locals[i];
    Vector out = reg_diag[i].cwiseProduct(v);
    if (lo.data_matrix.rows() > 0) {
      const Vector av = lo.data_matrix * v;
      out.noalias() += p.scale_rows *
                       (lo.data_matrix.transpose() * loss_weights[i].cwiseProduct(av));
    }
    return out;
  }

  Vector apply_mean(const Vector& v) const {
    Vector out = apply(0, v);
    for (int i = 1; i < p.num_workers; ++i) out += apply(i, v);
    return out / static_cast<double>(p.num_workers);
  }
};

// Spectral norm of a symmetric operator via power iteration on its square.
double spectral_norm(const std::function<Vector(const Vector&)>& apply, int dim,
                     const PowerIterOptions& opts, std::uint64_t seed, bool* conv) {
  const double lam = power_iteration(
      [&](const Vector& v) { return apply(apply(v)); }, dim, opts, seed, conv);
  return std::sqrt(std::max(0.0, lam));
}

}  // namespace

double estimate_L(const ProblemInstance& p, const SamplePlan& plan,
                  const PowerIterOptions& opts, bool* converged) {
  double best = 0.0;
  bool all_ok = true;
  for (const auto& x : plan.points) {
    const HessianCache cache(p, x);
    for (int i = 0; i < p.num_workers; ++i) {
      bool ok = true;
      const double nrm = spectral_norm(
          [&](const Vector& v) { return cache.apply(i, v); }, p.dimension, opts,
          plan.seed + 17 * (i + 1), &ok);
      all_ok = all_ok && ok;
      best = std::max(best, nrm);
    }
  }
  if (converged) *converged = all_ok;
  return best;
}

double estimate_zeta(const ProblemInstance& p, const SamplePlan& plan) {
  double best = 0.0;
  for (const auto& x : plan.points) {
    const Vector g = global_grad(p, x);
    double acc = 0.0;
    for (int i = 0; i < p.num_workers; ++i)
      acc += (local_grad(p, i, x) - g).squaredNorm();
    best = std::max(best, acc / p.num_workers);
  }
  return std::sqrt(best);
}

double estimate_zeta_bar(const ProblemInstance& p, const SamplePlan& plan) {
  double best = 0.0;
  for (const auto& x : plan.points) {
    const Vector g = global_grad(p, x);
    for (int i = 0; i < p.num_workers; ++i)
      best = std::max(best, (local_grad(p, i, x) - g).squaredNorm());
  }
  return std::sqrt(best);
}

double estimate_delta(const ProblemInstance& p, const SamplePlan& plan,
                      const PowerIterOptions& opts, bool* converged) {
  // Curvature route: largest eigenvalue of (1/n) sum (H_i - H)^2, applied
  // through the identity (1/n) sum H_i^2 v - H(Hv).
  const int n = p.num_workers;
  double best_sq = 0.0;
  bool all_ok = true;
  for (const auto& x : plan.points) {
    const HessianCache cache(p, x);
    bool ok = true;
    const double lam = power_iteration(
        [&](const Vector& v) {
          Vector hv = Vector::Zero(p.dimension);
          Vector out = Vector::Zero(p.dimension);
          std::vector<Vector> hiv(n);
          for (int i = 0; i < n; ++i) {
            hiv[i] = cache.apply(i, v);
            hv += hiv[i];
          }
          hv /= static_cast<double>(n);
          for (int i = 0; i < n; ++i) out += cache.apply(i, hiv[i]);
          out /= static_cast<double>(n);
          out -= cache.apply_mean(hv);
          return out;
        },
        p.dimension, opts, plan.seed + 23, &ok);
    all_ok = all_ok && ok;
    best_sq = std::max(best_sq, std::max(0.0, lam));
  }
  // Finite-difference route over the plan's pairs.
  double best_fd_sq = 0.0;
  for (const auto& [x, y] : plan.pairs) {
    const double dist_sq = (x - y).squaredNorm();
    if (dist_sq == 0.0) continue;
    const Vector gx = global_grad(p, x);
    const Vector gy = global_grad(p, y);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vector diff = (local_grad(p, i, x) - gx) - (local_grad(p, i, y) - gy);
      acc += diff.squaredNorm();
    }
    best_fd_sq = std::max(best_fd_sq, acc / n / dist_sq);
  }
  if (converged) *converged = all_ok;
  return std::sqrt(std::max(best_sq, best_fd_sq));
}

double estimate_delta_bar(const ProblemInstance& p, const SamplePlan& plan,
                          const PowerIterOptions& opts, bool* converged) {
  double best = 0.0;
  bool all_ok = true;
  for (const auto& x : plan.points) {
    const HessianCache cache(p, x);
    for (int i = 0; i < p.num_workers; ++i) {
      bool ok = true;
      const double nrm = spectral_norm(
          [&](const Vector& v) {
            return Vector(cache.apply(i, v) - cache.apply_mean(v));
          },
          p.dimension, opts, plan.seed + 29 * (i + 1), &ok);
      all_ok = all_ok && ok;
      best = std::max(best, nrm);
    }
  }
  double best_fd = 0.0;
  for (const auto& [x, y] : plan.pairs) {
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    const Vector gx = global_grad(p, x);
    const Vector gy = global_grad(p, y);
    for (int i = 0; i < p.num_workers; ++i) {
      const Vector diff = (local_grad(p, i, x) - gx) - (local_grad(p, i, y) - gy);
      best_fd = std::max(best_fd, diff.norm() / dist);
    }
  }
  if (converged) *converged = all_ok;
  return std::max(best, best_fd);
}

double estimate_rho(const ProblemInstance& p, const SamplePlan& plan,
                    const PowerIterOptions& opts, bool* converged) {
  // Smallest eigenvalue via power iteration on (c I - H), c = estimate_L.
  bool l_ok = true;
  const double c = estimate_L(p, plan, opts, &l_ok);
  double min_eig = 0.0;
  bool all_ok = l_ok;
  for (const auto& x : plan.points) {
    const HessianCache cache(p, x);
    for (int i = 0; i < p.num_workers; ++i) {
      bool ok = true;
      const double shifted = power_iteration(
          [&](const Vector& v) { return Vector(c * v - cache.apply(i, v)); },
          p.dimension, opts, plan.seed + 31 * (i + 1), &ok);
      all_ok = all_ok && ok;
      min_eig = std::min(min_eig, c - shifted);
    }
  }
  if (converged) *converged = all_ok;
  return std::max(0.0, -min_eig);
}

double estimate_M(const ProblemInstance& p, const SamplePlan& plan,
                  const PowerIterOptions& opts, bool* converged) {
  // Lipschitz modulus of the averaged Hessian (the choice f_hat = f).
  double best = 0.0;
  bool all_ok = true;
  for (const auto& [x, y] : plan.pairs) {
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    const HessianCache cx(p, x);
    const HessianCache cy(p, y);
    bool ok = true;
    const double nrm = spectral_norm(
        [&](const Vector& v) {
          return Vector(cx.apply_mean(v) - cy.apply_mean(v));
        },
        p.dimension, opts, plan.seed + 37, &ok);
    all_ok = all_ok && ok;
    best = std::max(best, nrm / dist);
  }
  if (converged) *converged = all_ok;
  return best;
}

namespace {

double descend_from(const ProblemInstance& p, Vector x, double eta,
                    const FstarOptions& opts) {
  double best = global_value(p, x);
  for (long t = 0; t < opts.max_steps; ++t) {
    const Vector g = global_grad(p, x);
    const double gsq = g.squaredNorm();
    if (!std::isfinite(gsq) || gsq <= opts.grad_tol) break;
    x -= eta * g;
    const double f = global_value(p, x);
    if (!std::isfinite(f)) break;
    best = std::min(best, f);
  }
  return best;
}

}  // namespace

double approximate_fstar(const ProblemInstance& p, const FstarOptions& opts) {
  const SamplePlan plan = default_sample_plan(p, p.seed ^ 0xF5ull, 16);
  const double L = std::max(1e-12, estimate_L(p, plan));
  const double eta = 0.5 / L;
  double best = descend_from(p, Vector::Zero(p.dimension), eta, opts);
  for (const auto& lo : p.locals)
    best = std::min(best, descend_from(p, lo.anchor, eta, opts));
  return best;
}

double estimate_Delta(const ProblemInstance& p, const Vector& x0) {
  return estimate_Delta(p, x0, approximate_fstar(p));
}

double estimate_Delta(const ProblemInstance& p, const Vector& x0, double fstar) {
  return std::max(0.0, global_value(p, x0) - fstar);
}

void ConditioningReport::validate() const {
  const double tol = 1e-9;
  if (zeta > zeta_bar + tol) throw std::logic_error("ConditioningReport: zeta > zeta_bar");
  if (delta > delta_bar + tol) throw std::logic_error("ConditioningReport: delta > delta_bar");
  if (delta_bar > 2.0 * L + tol) throw std::logic_error("ConditioningReport: delta_bar > 2L");
  if (rho > L + tol) throw std::logic_error("ConditioningReport: rho > L");
  if (Delta < 0.0) throw std::logic_error("ConditioningReport: Delta < 0");
}

ConditioningReport estimate_all(const ProblemInstance& p, std::uint64_t sampler_seed,
                                double sigma, const Vector& x0) {
  const SamplePlan plan = default_sample_plan(p, sampler_seed);
  ConditioningReport r;
  bool ok = true, all_ok = true;
  r.L = estimate_L(p, plan, {}, &ok);
  all_ok = all_ok && ok;
  r.sigma = sigma;
  r.zeta = estimate_zeta(p, plan);
  r.zeta_bar = estimate_zeta_bar(p, plan);
  r.delta = estimate_delta(p, plan, {}, &ok);
  all_ok = all_ok && ok;
  r.delta_bar = estimate_delta_bar(p, plan, {}, &ok);
  all_ok = all_ok && ok;
  r.rho = estimate_rho(p, plan, {}, &ok);
  all_ok = all_ok && ok;
  r.M = estimate_M(p, plan, {}, &ok);
  all_ok = all_ok && ok;
  r.fstar_estimate = approximate_fstar(p);
  r.Delta = estimate_Delta(p, x0, r.fstar_estimate);
  r.sample_points = static_cast<long>(plan.points.size());
  r.sample_radius = plan.radius;
  r.seed = sampler_seed;
  r.approximate = !all_ok;
  r.validate();
  return r;
}

}  // namespace dsgd
