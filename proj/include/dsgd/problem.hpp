#ifndef DSGD_PROBLEM_HPP
#define DSGD_PROBLEM_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dsgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Smoothed Huber loss: quadratic core, cubic blend, linear tail.  C^2 with
// 0 <= h'' <= 1 and |h'| <= 3/2, and h'' is 1-Lipschitz.
// ---------------------------------------------------------------------------
double huber_value(double u);
double huber_deriv(double u);
double huber_second_deriv(double u);

// Bounded non-convex regularizer lambda * sum_l x_l^2 / (1 + x_l^2).
double regularizer_value(double lambda, const Vector& x);
Vector regularizer_grad(double lambda, const Vector& x);
Vector regularizer_hess_diag(double lambda, const Vector& x);

/// One worker's data: rows of the design matrix, the targets produced at
/// generation time (targets = data_matrix * anchor), and the anchor kept
/// for diagnostics.
struct LocalObjective {
  Matrix data_matrix;  // m_i x d
  Vector targets;      // m_i
  double reg_weight = 0.0;
  Vector anchor;       // d
};

struct ConditioningTargets {
  double L = 0.0;
  double zeta = 0.0;
  double delta = 0.0;
};

/// The full synthetic instance.  Immutable after construction; all
/// evaluation entry points are pure.
struct ProblemInstance {
  int dimension = 0;
  int num_workers = 0;
  std::vector<LocalObjective> locals;
  std::uint64_t seed = 0;
  ConditioningTargets targets;   // requested at generation
  ConditioningTargets achieved;  // measured on the finished instance
  double scale_rows = 1.0;       // n/m weight on the loss term

  void validate() const;
};

double local_value(const ProblemInstance& p, int worker, const Vector& x);
Vector local_grad(const ProblemInstance& p, int worker, const Vector& x);
Matrix local_hess(const ProblemInstance& p, int worker, const Vector& x);

/// Applies local_hess(p, worker, x) to v without forming the matrix.
Vector local_hess_apply(const ProblemInstance& p, int worker, const Vector& x,
                        const Vector& v);

double global_value(const ProblemInstance& p, const Vector& x);
Vector global_grad(const ProblemInstance& p, const Vector& x);

struct GenerationSpec {
  int dimension = 0;
  int num_workers = 0;
  std::uint64_t seed = 0;
  double target_L = 1.0;
  double target_zeta = 0.0;
  double target_delta = 0.0;
  double reg_weight = 0.0;
  double calibration_tolerance = 0.05;  // relative
  int calibration_max_iters = 60;

  void validate() const;
};

/// Raised when bisection cannot reach the requested similarity target.
struct CalibrationError : std::runtime_error {
  CalibrationError(const std::string& knob_, double target_, double achieved_);
  std::string knob;
  double target;
  double achieved;
};

/// Builds the synthetic family: spectrum-controlled base matrix, per-worker
/// noise calibrated against estimate_delta, mean-centered anchors calibrated
/// against estimate_zeta, targets y_i = A_i x*_i.
///
/// Calibration and the recorded achieved values use the quadratic-regime
/// plan below: the similarity dials of this family control the worker
/// Hessians where all residuals sit in the |u| <= 1 branch, and there the
/// sampled estimates equal the dialed matrix quantities.
ProblemInstance generate_problem(const GenerationSpec& spec);

/// Solves fn(x) = target for an increasing fn on [lo, hi] by bracketed
/// regula falsi (Illinois).  Throws CalibrationError when the bracket or
/// the iteration budget fails; `knob` names the dial in the message.
double calibrate_increasing(const std::function<double(double)>& fn,
                            const std::string& knob, double target, double lo,
                            double hi, double rel_tol, int max_iters);

}  // namespace dsgd

#endif
