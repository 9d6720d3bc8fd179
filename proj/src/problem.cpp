#include "dsgd/problem.hpp"

#include <cmath>

#include "dsgd/util.hpp"

namespace dsgd {

double huber_value(double u) {
  const double a = std::abs(u);
  if (a <= 1.0) return 0.5 * u * u;
  if (a <= 2.0) return -(a - 1.0) * (a - 1.0) * (a - 1.0) / 6.0 + 0.5 * u * u;
  return 1.5 * a - 7.0 / 6.0;
}

double huber_deriv(double u) {
  const double a = std::abs(u);
  const double s = (u >= 0.0) ? 1.0 : -1.0;
  if (a <= 1.0) return u;
  if (a <= 2.0) return s * (-(a - 1.0) * (a - 1.0) / 2.0) + u;
  return 1.5 * s;
}

double huber_second_deriv(double u) {
  const double a = std::abs(u);
  if (a <= 1.0) return 1.0;
  if (a <= 2.0) return 2.0 - a;
  return 0.0;
}

double regularizer_value(double lambda, const Vector& x) {
  double s = 0.0;
  for (int l = 0; l < x.size(); ++l) {
    const double t = x[l] * x[l];
    s += t / (1.0 + t);
  }
  return lambda * s;
}

Vector regularizer_grad(double lambda, const Vector& x) {
  Vector g(x.size());
  for (int l = 0; l < x.size(); ++l) {
    const double d = 1.0 + x[l] * x[l];
    g[l] = lambda * 2.0 * x[l] / (d * d);
  }
  return g;
}

Vector regularizer_hess_diag(double lambda, const Vector& x) {
  Vector h(x.size());
  for (int l = 0; l < x.size(); ++l) {
    const double t = x[l] * x[l];
    const double d = 1.0 + t;
    h[l] = lambda * 2.0 * (1.0 - 3.0 * t) / (d * d * d);
  }
  return h;
}

void ProblemInstance::validate() const {
  if (dimension <= 0) throw std::invalid_argument("ProblemInstance: dimension must be positive");
  if (num_workers <= 0) throw std::invalid_argument("ProblemInstance: num_workers must be positive");
  if (static_cast<int>(locals.size()) != num_workers)
    throw std::invalid_argument("ProblemInstance: locals size mismatch");
  for (const auto& lo : locals) {
    if (lo.data_matrix.cols() != dimension || lo.anchor.size() != dimension ||
        lo.targets.size() != lo.data_matrix.rows())
      throw std::invalid_argument("ProblemInstance: inconsistent worker shapes");
    if (lo.reg_weight < 0.0)
      throw std::invalid_argument("ProblemInstance: reg_weight must be non-negative");
  }
}

namespace {

void check_worker(const ProblemInstance& p, int worker) {
  if (worker < 0 || worker >= p.num_workers)
    throw std::out_of_range("worker index out of range");
}

}  // namespace

double local_value(const ProblemInstance& p, int worker, const Vector& x) {
  check_worker(p, worker);
  const LocalObjective& lo = p.locals[worker];
  double loss = 0.0;
  if (lo.data_matrix.rows() > 0) {
    const Vector res = lo.data_matrix * x - lo.targets;
    for (int j = 0; j < res.size(); ++j) loss += huber_value(res[j]);
    loss *= p.scale_rows;
  }
  return loss + regularizer_value(lo.reg_weight, x);
}

Vector local_grad(const ProblemInstance& p, int worker, const Vector& x) {
  check_worker(p, worker);
  const LocalObjective& lo = p.locals[worker];
  Vector g = regularizer_grad(lo.reg_weight, x);
  if (lo.data_matrix.rows() > 0) {
    Vector res = lo.data_matrix * x - lo.targets;
    for (int j = 0; j < res.size(); ++j) res[j] = huber_deriv(res[j]);
    g.noalias() += p.scale_rows * (lo.data_matrix.transpose() * res);
  }
  return g;
}

Matrix local_hess(const ProblemInstance& p, int worker, const Vector& x) {
  check_worker(p, worker);
  const LocalObjective& lo = p.locals[worker];
  Matrix h = regularizer_hess_diag(lo.reg_weight, x).asDiagonal();
  if (lo.data_matrix.rows() > 0) {
    Vector res = lo.data_matrix * x - lo.targets;
    for (int j = 0; j < res.size(); ++j) res[j] = huber_second_deriv(res[j]);
    h.noalias() +=
        p.scale_rows * (lo.data_matrix.transpose() * res.asDiagonal() * lo.data_matrix);
  }
  return h;
}

Vector local_hess_apply(const ProblemInstance& p, int worker, const Vector& x,
                        const Vector& v) {
  check_worker(p, worker);
  const LocalObjective& lo = p.locals[worker];
  Vector out = regularizer_hess_diag(lo.reg_weight, x).cwiseProduct(v);
  if (lo.data_matrix.rows() > 0) {
    Vector res = lo.data_matrix * x - lo.targets;
    for (int j = 0; j < res.size(); ++j) res[j] = huber_second_deriv(res[j]);
    Vector av = lo.data_matrix * v;
    out.noalias() += p.scale_rows * (lo.data_matrix.transpose() * res.cwiseProduct(av));
  }
  return out;
}

double global_value(const ProblemInstance& p, const Vector& x) {
  std::vector<double> vals(p.num_workers);
  for (int i = 0; i < p.num_workers; ++i) vals[i] = local_value(p, i, x);
  return pairwise_mean(vals);
}

Vector global_grad(const ProblemInstance& p, const Vector& x) {
  std::vector<Vector> grads(p.num_workers);
  for (int i = 0; i < p.num_workers; ++i) grads[i] = local_grad(p, i, x);
  return pairwise_mean(grads);
}

void GenerationSpec::validate() const {
  if (dimension <= 0 || num_workers <= 0)
    throw std::invalid_argument("GenerationSpec: dimension and num_workers must be positive");
  if (target_L <= 0.0) throw std::invalid_argument("GenerationSpec: target_L must be positive");
  if (target_zeta < 0.0 || target_delta < 0.0 || reg_weight < 0.0)
    throw std::invalid_argument("GenerationSpec: similarity targets must be non-negative");
  if (target_delta > target_L)
    throw std::invalid_argument("GenerationSpec: target_delta must not exceed target_L");
  if (calibration_tolerance <= 0.0 || calibration_max_iters <= 0)
    throw std::invalid_argument("GenerationSpec: calibration knobs must be positive");
}

CalibrationError::CalibrationError(const std::string& knob_, double target_, double achieved_)
    : std::runtime_error("calibration failed for " + knob_ + ": target " +
                         std::to_string(target_) + ", best achieved " +
                         std::to_string(achieved_)),
      knob(knob_),
      target(target_),
      achieved(achieved_) {}

}  // namespace dsgd
