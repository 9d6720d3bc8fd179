#ifndef DSGD_ORACLE_HPP
#define DSGD_ORACLE_HPP

#include <cstdint>

#include "dsgd/problem.hpp"

namespace dsgd {

enum class NoiseKind { gaussian_isotropic, none };

/// Stochastic first-order oracle law: unbiased local gradients with
/// E||noise||^2 = sigma^2 exactly (isotropic Gaussian, per-coordinate
/// standard deviation sigma/sqrt(d)).
struct OracleConfig {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  NoiseKind noise_kind = NoiseKind::gaussian_isotropic;

  void validate() const;
};

/// Identifies a single oracle draw; (worker, iteration) pairs are never
/// reused within a run, replica distinguishes extra draws in tests.
struct QueryKey {
  int worker = 0;
  long iteration = 0;
  long replica = 0;
};

/// The noise component alone: a pure function of (cfg.seed, key) via the
/// counter generator, independent of x and of evaluation order.
Vector oracle_noise(const OracleConfig& cfg, const QueryKey& key, int dimension);

/// local_grad(p, key.worker, x) plus keyed noise.
Vector sample_gradient(const ProblemInstance& p, const OracleConfig& cfg,
                       const QueryKey& key, const Vector& x);

}  // namespace dsgd

#endif
