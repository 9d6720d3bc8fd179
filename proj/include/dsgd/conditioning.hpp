#ifndef DSGD_CONDITIONING_HPP
#define DSGD_CONDITIONING_HPP

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "dsgd/problem.hpp"

namespace dsgd {

/// A frozen set of evaluation sites.  All estimators are running maxima
/// over these sites, so enlarging a plan never decreases an estimate.
struct SamplePlan {
  std::vector<Vector> points;
  std::vector<std::pair<Vector, Vector>> pairs;  // small separations
  std::uint64_t seed = 0;
  double radius = 1.0;
};

/// Default plan: the origin and every anchor, plus Gaussian clouds of the
/// stated radii around them (expected squared distance radius^2).  Pairs
/// are nearby-point couples with separations in [1e-3, 1e-1].
SamplePlan default_sample_plan(const ProblemInstance& p, std::uint64_t seed,
                               int num_points = 64);

/// Tight plan around the anchors and the origin, radius small enough that
/// every loss residual stays within the quadratic branch of the smoothed
/// Huber loss.  generate_problem calibrates and records its achieved
/// similarity values against this plan.
SamplePlan generation_sample_plan(const ProblemInstance& p, std::uint64_t seed,
                                  int num_points = 16);

struct PowerIterOptions {
  int max_iters = 100;
  double tol = 1e-8;
};

/// Largest-magnitude eigenvalue of a symmetric PSD operator given by its
/// matvec.  Sets *converged when the relative residual met tol.
double power_iteration(const std::function<Vector(const Vector&)>& apply, int dim,
                       const PowerIterOptions& opts, std::uint64_t seed,
                       bool* converged = nullptr);

double estimate_L(const ProblemInstance& p, const SamplePlan& plan,
                  const PowerIterOptions& opts = {}, bool* converged = nullptr);
double estimate_zeta(const ProblemInstance& p, const SamplePlan& plan);
double estimate_zeta_bar(const ProblemInstance& p, const SamplePlan& plan);
double estimate_delta(const ProblemInstance& p, const SamplePlan& plan,
                      const PowerIterOptions& opts = {}, bool* converged = nullptr);
double estimate_delta_bar(const ProblemInstance& p, const SamplePlan& plan,
                          const PowerIterOptions& opts = {}, bool* converged = nullptr);
double estimate_rho(const ProblemInstance& p, const SamplePlan& plan,
                    const PowerIterOptions& opts = {}, bool* converged = nullptr);
double estimate_M(const ProblemInstance& p, const SamplePlan& plan,
                  const PowerIterOptions& opts = {}, bool* converged = nullptr);

struct FstarOptions {
  long max_steps = 100000;
  double grad_tol = 1e-14;  // early exit once ||grad||^2 stalls below this
};

/// Best objective value reached by deterministic gradient descent started
/// from the origin and from every anchor, stepsize 0.5 / estimate_L.
double approximate_fstar(const ProblemInstance& p, const FstarOptions& opts = {});

/// f(x0) - fstar, floored at zero.  The cached overload avoids repeating
/// the descent when scanning many starting points.
double estimate_Delta(const ProblemInstance& p, const Vector& x0);
double estimate_Delta(const ProblemInstance& p, const Vector& x0, double fstar);

/// Every assumption constant in one record, measured on one plan.
struct ConditioningReport {
  double L = 0.0;
  double sigma = 0.0;
  double zeta = 0.0;
  double zeta_bar = 0.0;
  double delta = 0.0;
  double delta_bar = 0.0;
  double rho = 0.0;
  double M = 0.0;
  double Delta = 0.0;
  long sample_points = 0;
  double sample_radius = 0.0;
  double fstar_estimate = 0.0;
  std::uint64_t seed = 0;
  bool approximate = false;  // some power iteration hit its cap

  void validate() const;  // ordering constraints up to 1e-9
};

ConditioningReport estimate_all(const ProblemInstance& p, std::uint64_t sampler_seed,
                                double sigma, const Vector& x0);

}  // namespace dsgd

#endif
