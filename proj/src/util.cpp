#include "dsgd/util.hpp"

#include <atomic>
#include <stdexcept>
#include <thread>

namespace dsgd {

namespace {

template <typename T>
T pairwise_sum_range(const std::vector<T>& items, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return items[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum_range(items, lo, mid) + pairwise_sum_range(items, mid, hi);
}

}  // namespace

Vector pairwise_sum(const std::vector<Vector>& items) {
  if (items.empty()) throw std::invalid_argument("pairwise_sum: empty list");
  return pairwise_sum_range(items, 0, items.size());
}

Vector pairwise_mean(const std::vector<Vector>& items) {
  return pairwise_sum(items) / static_cast<double>(items.size());
}

double pairwise_sum(const std::vector<double>& items) {
  if (items.empty()) throw std::invalid_argument("pairwise_sum: empty list");
  return pairwise_sum_range(items, 0, items.size());
}

double pairwise_mean(const std::vector<double>& items) {
  return pairwise_sum(items) / static_cast<double>(items.size());
}

void parallel_for_indexed(int count, const std::function<void(int)>& fn, int threads) {
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  const int pool = std::min(threads, count);
  std::vector<std::thread> all;
  all.reserve(pool);
  for (int i = 0; i < pool; ++i) all.emplace_back(worker);
  for (auto& t : all) t.join();
}

}  // namespace dsgd
