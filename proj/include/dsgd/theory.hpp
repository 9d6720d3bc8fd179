#ifndef DSGD_THEORY_HPP
#define DSGD_THEORY_HPP

#include <limits>
#include <string>
#include <vector>

#include "dsgd/problem.hpp"

namespace dsgd {

/// Every symbol that appears in a rate expression.  D is the initial
/// distance bound used only by the convex results; NaN marks it unset.
struct RateParams {
  double L = 0.0;
  double Delta = 0.0;
  double sigma = 0.0;
  double zeta = 0.0;
  double zeta_bar = 0.0;
  double delta = 0.0;
  double delta_bar = 0.0;
  double rho = 0.0;
  double M = 0.0;
  double D = std::numeric_limits<double>::quiet_NaN();
  long n = 1;
  long tau = 1;
  long R = 1;

  void validate() const;
};

enum class RateKind {
  mbsgd,
  localsgd_classic,
  localsgd_convex_prev,
  scaffold_classic,
  scaffold_quadratic,
  localsgd_faster,
  localsgd_convex,
  localsgd_hs,
  scaffold_speedup,
  scaffold_lipschitz,
};

std::string rate_kind_name(RateKind kind);
RateKind rate_kind_from_name(const std::string& name);

/// A rate evaluated term by term with unit leading constants: a
/// comparison tool, not a certified bound.
struct RateBound {
  RateKind kind;
  std::vector<std::pair<std::string, double>> terms;
  double total = 0.0;
};

RateBound rate_bound(RateKind kind, const RateParams& params);

/// The printed min-of-terms stepsize assignment from the proof of the
/// given theorem.  Terms with a zero factor in the denominator count as
/// +infinity; if every term is infinite the parameters are degenerate.
/// Valid kinds: localsgd_faster, localsgd_convex, localsgd_hs,
/// scaffold_speedup, scaffold_lipschitz.
double theoretical_stepsize(RateKind kind, const RateParams& params, long T);

/// One evaluated inequality.  `violation` is the (positive) amount by
/// which the inequality fails, scaled by max(|rhs|, 1); ok means the
/// violation stays within 1e-9.
struct CheckResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double violation = 0.0;
  bool ok = true;
};

/// (1/n) sum ||x^i - xbar||^2 <= (1/n) sum ||x^i - y||^2 + 1e-12.
CheckResult check_variance_identity(const std::vector<Vector>& points, const Vector& y);

/// ||(x - eta grad f_i(x)) - (y - eta grad f_i(y))||^2
///   <= (1 + 2 L rho eta / (L - rho)) ||x - y||^2, for eta <= 2/(L - rho).
CheckResult check_weak_convexity_contraction(const ProblemInstance& p, int worker,
                                             const Vector& x, const Vector& y,
                                             double eta, double L, double rho);

/// Same left side <= (1 + L eta)^2 ||x - y||^2, any eta >= 0.
CheckResult check_smooth_contraction(const ProblemInstance& p, int worker,
                                     const Vector& x, const Vector& y, double eta,
                                     double L);

/// Q = ||(1/n) sum grad f_i(x^i) - grad f(xbar)||^2 against both the plain
/// bound L^2 Xi and the refined bound 8 delta_bar^2 Xi + (M^2/2) Xi^2.
struct QBoundsResult {
  double q = 0.0;
  double xi = 0.0;
  double plain_rhs = 0.0;
  double refined_rhs = 0.0;
  double violation_plain = 0.0;
  double violation_refined = 0.0;
  bool ok = true;
};

QBoundsResult check_q_bounds(const ProblemInstance& p, const std::vector<Vector>& points,
                             double L, double delta_bar, double M);

/// (L - rho) <x - y, grad f_i(x) - grad f_i(y)>
///   >= ||grad f_i(x) - grad f_i(y)||^2 - rho L ||x - y||^2.
CheckResult check_smooth_weakly_convex_inequality(const ProblemInstance& p, int worker,
                                                  const Vector& x, const Vector& y,
                                                  double L, double rho);

/// Randomized sweep of one lemma's inequality.
struct LemmaSuiteResult {
  std::string lemma;
  long draws = 0;
  long violations = 0;
  double worst_slack = 0.0;  // most positive scaled violation seen
};

/// Runs all five checkers (q-bounds counted as two) with `draws` random
/// draws each on the given instance, using 5%-inflated constants sampled
/// over both a dense plan and the draw sites themselves.
std::vector<LemmaSuiteResult> run_lemma_suites(const ProblemInstance& p, long draws,
                                               std::uint64_t seed);

/// The instance the verify-lemmas command exercises by default.
GenerationSpec default_lemma_instance_spec(std::uint64_t seed);

}  // namespace dsgd

#endif
