#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kfp {

// Monte Carlo estimates carry their own uncertainty everywhere in this
// library; a value without a std_error is not an estimate.
struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;
  uint64_t n = 0;
  uint64_t seed = 0;
};

inline int default_workers() { return 4; }

namespace detail {
constexpr uint64_t kChunk = 2048;
}

// Runs per_sample(i, out) for i in [0,n), out pointing at ncomp doubles.
// Work is split into fixed-size chunks; worker threads grab chunks off an
// atomic counter, and the per-chunk partial sums are reduced in chunk order
// afterwards. Result is therefore bit-identical for any worker count.
template <class Fn>
void mc_accumulate(uint64_t n, int ncomp, int workers, Fn&& per_sample,
                   std::vector<double>& sum, std::vector<double>& sumsq) {
  const uint64_t nchunks = (n + detail::kChunk - 1) / detail::kChunk;
  std::vector<double> csum(nchunks * ncomp, 0.0), csumsq(nchunks * ncomp, 0.0);

  std::atomic<uint64_t> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex err_mu;

  auto work = [&]() {
    std::vector<double> out(ncomp);
    try {
      for (;;) {
        uint64_t c = next.fetch_add(1);
        if (c >= nchunks) break;
        uint64_t lo = c * detail::kChunk;
        uint64_t hi = std::min(n, lo + detail::kChunk);
        double* s = &csum[c * ncomp];
        double* s2 = &csumsq[c * ncomp];
        for (uint64_t i = lo; i < hi; ++i) {
          per_sample(i, out.data());
          for (int k = 0; k < ncomp; ++k) {
            s[k] += out[k];
            s2[k] += out[k] * out[k];
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> g(err_mu);
      if (!first_error) first_error = std::current_exception();
    }
  };

  int w = std::max(1, std::min<int>(workers, static_cast<int>(nchunks)));
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (int t = 0; t < w; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  sum.assign(ncomp, 0.0);
  sumsq.assign(ncomp, 0.0);
  for (uint64_t c = 0; c < nchunks; ++c)
    for (int k = 0; k < ncomp; ++k) {
      sum[k] += csum[c * ncomp + k];
      sumsq[k] += csumsq[c * ncomp + k];
    }
}

// Mean and standard error of one component out of an accumulated pass.
inline MCEstimate reduce_mean(double sum, double sumsq, uint64_t n, uint64_t seed) {
  MCEstimate e;
  e.n = n;
  e.seed = seed;
  if (n == 0) return e;
  e.value = sum / static_cast<double>(n);
  if (n > 1) {
    double var = (sumsq - sum * sum / static_cast<double>(n)) /
                 static_cast<double>(n - 1);
    e.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
  }
  return e;
}

template <class Fn>
MCEstimate mc_mean(uint64_t n, int workers, uint64_t seed, Fn&& per_sample_scalar) {
  std::vector<double> s, s2;
  mc_accumulate(n, 1, workers,
                [&](uint64_t i, double* out) { out[0] = per_sample_scalar(i); },
                s, s2);
  return reduce_mean(s[0], s2[0], n, seed);
}

}  // namespace kfp
