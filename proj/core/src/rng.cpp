#include "kfp/rng.hpp"

#include <cmath>

namespace kfp {

namespace {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kW0 = 0x9E3779B9u;  // golden ratio
constexpr uint32_t kW1 = 0xBB67AE85u;  // sqrt(3) - 1

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

}  // namespace

std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter,
                                   const std::array<uint32_t, 2>& key) {
  std::array<uint32_t, 4> c = counter;
  uint32_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    k0 += kW0;
    k1 += kW1;
  }
  return c;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(uint64_t seed, uint64_t stream, uint64_t sample) {
  uint64_t k = splitmix64(seed ^ splitmix64(stream));
  key_ = {static_cast<uint32_t>(k), static_cast<uint32_t>(k >> 32)};
  sample_ctr_ = {static_cast<uint32_t>(sample), static_cast<uint32_t>(sample >> 32)};
}

void RandomStream::refill() {
  std::array<uint32_t, 4> ctr = {static_cast<uint32_t>(block_),
                                 static_cast<uint32_t>(block_ >> 32),
                                 sample_ctr_[0], sample_ctr_[1]};
  ++block_;
  std::array<uint32_t, 4> r = philox4x32(ctr, key_);
  uint64_t a = (static_cast<uint64_t>(r[0]) << 32) | r[1];
  uint64_t b = (static_cast<uint64_t>(r[2]) << 32) | r[3];
  ubuf_[0] = static_cast<double>(a >> 11) * 0x1.0p-53;
  ubuf_[1] = static_cast<double>(b >> 11) * 0x1.0p-53;
  uleft_ = 2;
}

double RandomStream::u01() {
  if (uleft_ == 0) refill();
  return ubuf_[--uleft_];
}

double RandomStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return nspare_;
  }
  // 1-u keeps the log argument in (0,1].
  double r = std::sqrt(-2.0 * std::log(1.0 - u01()));
  double theta = 2.0 * M_PI * u01();
  nspare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

void RandomStream::fill_normal(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal();
}

}  // namespace kfp
