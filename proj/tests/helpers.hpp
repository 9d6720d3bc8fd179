#ifndef DSGD_TESTS_HELPERS_HPP
#define DSGD_TESTS_HELPERS_HPP

#include <functional>
#include <utility>
#include <vector>

#include "dsgd/conditioning.hpp"
#include "dsgd/problem.hpp"
#include "dsgd/rng.hpp"

namespace dsgd::test {

// f(x) = h(x): one worker, one unit row, zero target.  Behaves as x^2/2
// while |x| <= 1.
inline ProblemInstance scalar_huber_instance() {
  ProblemInstance p;
  p.dimension = 1;
  p.num_workers = 1;
  p.scale_rows = 1.0;
  LocalObjective lo;
  lo.data_matrix = Matrix::Constant(1, 1, 1.0);
  lo.targets = Vector::Zero(1);
  lo.anchor = Vector::Zero(1);
  p.locals.push_back(lo);
  p.validate();
  return p;
}

// n workers on the line: f_i(x) = h(x - c_i), optional shared regularizer.
inline ProblemInstance shifted_huber_instance(const std::vector<double>& centers,
                                              double lambda = 0.0) {
  ProblemInstance p;
  p.dimension = 1;
  p.num_workers = static_cast<int>(centers.size());
  p.scale_rows = 1.0;  // n/m with one row per worker
  for (double c : centers) {
    LocalObjective lo;
    lo.data_matrix = Matrix::Constant(1, 1, 1.0);
    lo.anchor = Vector::Constant(1, c);
    lo.targets = Vector::Constant(1, c);
    lo.reg_weight = lambda;
    p.locals.push_back(lo);
  }
  p.validate();
  return p;
}

// Quadratic-regime instance: worker i's loss Hessian equals
// diag(hessian_diags[i]) wherever all residuals stay within |u| <= 1.
inline ProblemInstance diag_quadratic_instance(const std::vector<Vector>& hessian_diags,
                                               double lambda = 0.0) {
  ProblemInstance p;
  p.num_workers = static_cast<int>(hessian_diags.size());
  p.dimension = static_cast<int>(hessian_diags[0].size());
  const int d = p.dimension;
  p.scale_rows = 1.0 / d;  // n/m with d rows per worker
  for (const auto& diag : hessian_diags) {
    LocalObjective lo;
    lo.data_matrix = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j) lo.data_matrix(j, j) = std::sqrt(d * diag[j]);
    lo.targets = Vector::Zero(d);
    lo.anchor = Vector::Zero(d);
    lo.reg_weight = lambda;
    p.locals.push_back(lo);
  }
  p.validate();
  return p;
}

// No loss rows at all: the regularizer alone.
inline ProblemInstance reg_only_instance(int d, double lambda, int workers = 1) {
  ProblemInstance p;
  p.dimension = d;
  p.num_workers = workers;
  p.scale_rows = 1.0;
  for (int i = 0; i < workers; ++i) {
    LocalObjective lo;
    lo.data_matrix = Matrix::Zero(0, d);
    lo.targets = Vector::Zero(0);
    lo.anchor = Vector::Zero(d);
    lo.reg_weight = lambda;
    p.locals.push_back(lo);
  }
  p.validate();
  return p;
}

// Unstructured random instance for derivative checks.
inline ProblemInstance random_instance(int d, int n, double lambda, std::uint64_t seed,
                                       double row_scale = 1.0) {
  ProblemInstance p;
  p.dimension = d;
  p.num_workers = n;
  p.scale_rows = 1.0 / d;
  CounterRng rng(seed, 0xABCull);
  for (int i = 0; i < n; ++i) {
    LocalObjective lo;
    lo.data_matrix = row_scale * rng.normal_matrix(d, d);
    lo.anchor = rng.normal_vector(d) / std::sqrt(static_cast<double>(d));
    lo.targets = lo.data_matrix * lo.anchor;
    lo.reg_weight = lambda;
    p.locals.push_back(lo);
  }
  p.validate();
  return p;
}

inline SamplePlan plan_from_points(std::vector<Vector> points,
                                   std::vector<std::pair<Vector, Vector>> pairs = {}) {
  SamplePlan plan;
  plan.points = std::move(points);
  plan.pairs = std::move(pairs);
  return plan;
}

inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h) {
  Vector g(x.size());
  for (int j = 0; j < x.size(); ++j) {
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g[j] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& g, const Vector& x,
                          double h) {
  Matrix jac(x.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (g(xp) - g(xm)) / (2.0 * h);
  }
  return jac;
}

// Plain single-machine gradient descent on the global objective; returns
// all iterates including the start.
inline std::vector<Vector> reference_gd(const ProblemInstance& p, Vector x, double eta,
                                        int steps) {
  std::vector<Vector> iterates{x};
  for (int t = 0; t < steps; ++t) {
    x -= eta * global_grad(p, x);
    iterates.push_back(x);
  }
  return iterates;
}

}  // namespace dsgd::test

#endif
