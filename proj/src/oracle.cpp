#include "dsgd/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "dsgd/rng.hpp"

namespace dsgd {

void OracleConfig::validate() const {
  if (sigma < 0.0) throw std::invalid_argument("OracleConfig: sigma must be non-negative");
}

Vector oracle_noise(const OracleConfig& cfg, const QueryKey& key, int dimension) {
  Vector noise = Vector::Zero(dimension);
  const double sigma = (cfg.noise_kind == NoiseKind::none) ? 0.0 : cfg.sigma;
  if (sigma == 0.0) return noise;
  // Key schedule: seed ^ hash(worker, iteration, replica), then one
  // counter position per coordinate.
  std::uint64_t h = mix64(cfg.seed);
  h = combine64(h, static_cast<std::uint64_t>(key.worker) + 1);
  h = combine64(h, static_cast<std::uint64_t>(key.iteration) + 1);
  h = combine64(h, static_cast<std::uint64_t>(key.replica) + 1);
  const double scale = sigma / std::sqrt(static_cast<double>(dimension));
  for (int j = 0; j < dimension; ++j) {
    const std::uint64_t bits = mix64(h ^ mix64(static_cast<std::uint64_t>(j)));
    noise[j] = scale * normal_inv_cdf(uniform_from_bits(bits));
  }
  return noise;
}

Vector sample_gradient(const ProblemInstance& p, const OracleConfig& cfg,
                       const QueryKey& key, const Vector& x) {
  Vector g = local_grad(p, key.worker, x);
  if (cfg.noise_kind != NoiseKind::none && cfg.sigma > 0.0)
    g += oracle_noise(cfg, key, p.dimension);
  return g;
}

}  // namespace dsgd
