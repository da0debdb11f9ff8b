#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fbz {

// Neumaier-compensated accumulator. Deterministic for a fixed add order.
struct KahanSum {
  double s = 0.0;
  double c = 0.0;

  void add(double x) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

// Fixed-chunk parallel sum over [0, n). The chunk plan is a function of n and
// chunk_size only, partials are combined in chunk order, and each chunk is
// summed sequentially by `chunk_sum(begin, end)`. The result is bit-identical
// for any thread count.
template <typename F>
double parallel_sum(std::size_t n, int n_threads, F&& chunk_sum,
                    std::size_t chunk_size = 1024) {
  if (n == 0) return 0.0;
  const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  std::vector<double> partial(n_chunks, 0.0);
  if (n_threads <= 1 || n_chunks == 1) {
    for (std::size_t k = 0; k < n_chunks; ++k) {
      std::size_t b = k * chunk_size;
      partial[k] = chunk_sum(b, std::min(n, b + chunk_size));
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        std::size_t k = next.fetch_add(1);
        if (k >= n_chunks) return;
        std::size_t b = k * chunk_size;
        partial[k] = chunk_sum(b, std::min(n, b + chunk_size));
      }
    };
    std::vector<std::thread> pool;
    int nt = std::min<std::size_t>(n_threads, n_chunks);
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  KahanSum acc;
  for (double p : partial) acc.add(p);
  return acc.value();
}

// Thrown by iterative solvers that exhaust their iteration budget.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

inline double relative_gap(double a, double b) {
  double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// FNV-1a, used to fingerprint configs in reports.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

#ifndef FBZ_VERSION
#define FBZ_VERSION "0.1.0"
#endif

inline const char* version() { return FBZ_VERSION; }

}  // namespace fbz
