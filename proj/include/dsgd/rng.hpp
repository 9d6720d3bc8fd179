#ifndef DSGD_RNG_HPP
#define DSGD_RNG_HPP

#include <cstdint>

#include <Eigen/Core>

namespace dsgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// SplitMix64 finalizer.  Used as the avalanche step of the keyed
/// counter generator; every random number in this project is a pure
/// function of (seed, stream, counter) through this mixer.
std::uint64_t mix64(std::uint64_t z);

/// Combines key components into a single 64-bit state.
std::uint64_t combine64(std::uint64_t h, std::uint64_t v);

/// Maps 64 random bits to a uniform double in the open interval (0, 1).
double uniform_from_bits(std::uint64_t bits);

/// Inverse of the standard normal CDF (Wichura's AS241, PPND16).
/// Pure rational arithmetic plus sqrt/log in the tails, so replays are
/// bit-exact for a given libm.
double normal_inv_cdf(double p);

/// Counter-based generator: a keyed stream of doubles.  Stateless in
/// the sense that the k-th draw depends only on (seed, stream, k);
/// instances merely track the counter for convenience.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_bits();
  double uniform();            // (0, 1)
  double normal();             // N(0, 1)
  Vector normal_vector(int d); // i.i.d. N(0, 1) entries
  Matrix normal_matrix(int rows, int cols);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dsgd

#endif
