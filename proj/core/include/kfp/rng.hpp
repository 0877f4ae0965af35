#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace kfp {

// Philox4x32-10 block cipher: 128-bit counter, 64-bit key, 128-bit output.
// Counter-based, so every sample of a Monte Carlo run owns an independent,
// reproducible substream addressed by (seed, stream, sample index) with no
// state shared between workers.
std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter,
                                   const std::array<uint32_t, 2>& key);

uint64_t splitmix64(uint64_t x);

class RandomStream {
 public:
  RandomStream(uint64_t seed, uint64_t stream, uint64_t sample);

  // Uniform on [0,1), 53-bit resolution.
  double u01();

  // Standard normal via Box-Muller (rejection-free, keeps draw positions
  // deterministic).
  double normal();

  void fill_normal(Eigen::Ref<Eigen::VectorXd> v);

 private:
  void refill();

  std::array<uint32_t, 2> key_;
  std::array<uint32_t, 2> sample_ctr_;
  uint64_t block_ = 0;
  double ubuf_[2];
  int uleft_ = 0;
  double nspare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace kfp
