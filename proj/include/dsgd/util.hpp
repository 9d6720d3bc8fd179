#ifndef DSGD_UTIL_HPP
#define DSGD_UTIL_HPP

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace dsgd {

using Vector = Eigen::VectorXd;

/// Pairwise (tree) sum over a worker-indexed list of vectors, ascending
/// index order.  Fixed reduction order keeps multi-threaded drivers
/// bit-reproducible.
Vector pairwise_sum(const std::vector<Vector>& items);
Vector pairwise_mean(const std::vector<Vector>& items);
double pairwise_sum(const std::vector<double>& items);
double pairwise_mean(const std::vector<double>& items);

/// Runs fn(i) for i in [0, count) on a fixed-size pool.  Each task owns
/// its output slot, so the result is identical for any thread count.
void parallel_for_indexed(int count, const std::function<void(int)>& fn, int threads);

}  // namespace dsgd

#endif
