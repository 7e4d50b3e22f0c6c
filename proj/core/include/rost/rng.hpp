#pragma once

// Counter-based random number generation.
//
// Every random quantity in the library is drawn from a Philox4x32-10 stream
// addressed by (master seed, stream id).  Streams are statistically
// independent, cheap to construct, and do not depend on each other's draw
// order, so replicas can be generated on any number of worker threads and
// still produce byte-identical results.  Distribution samplers are
// implemented here explicitly (instead of through <random> distributions,
// whose output is implementation-defined) so that a fixed seed yields the
// same bytes on every platform.

#include <cmath>
#include <cstdint>

namespace rost {

// SplitMix64 finalizer, used to mix stream labels into well-spread ids.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Combines a parent stream id with a child label.  Used to address
// per-replica and per-purpose substreams from one master seed.
inline std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t child) {
  return mix64(parent ^ mix64(child + 0x8000000000000000ULL));
}

class RngStream {
 public:
  RngStream(std::uint64_t key, std::uint64_t stream) {
    key_[0] = static_cast<std::uint32_t>(key);
    key_[1] = static_cast<std::uint32_t>(key >> 32);
    ctr_[0] = 0;
    ctr_[1] = 0;
    ctr_[2] = static_cast<std::uint32_t>(stream);
    ctr_[3] = static_cast<std::uint32_t>(stream >> 32);
  }

  std::uint64_t next_u64() {
    if (have_block_) {
      have_block_ = false;
      return block_hi_;
    }
    std::uint32_t c0 = ctr_[0], c1 = ctr_[1], c2 = ctr_[2], c3 = ctr_[3];
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ULL * c0;
      const std::uint64_t p1 = 0xCD9E8D57ULL * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    // Advance the 64-bit per-stream counter.
    if (++ctr_[0] == 0) ++ctr_[1];
    block_hi_ = (static_cast<std::uint64_t>(c2) << 32) | c3;
    have_block_ = true;
    return (static_cast<std::uint64_t>(c0) << 32) | c1;
  }

  // Uniform on [0,1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1]; safe as a log() argument.
  double next_unit_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double next_exp() { return -std::log(next_unit_pos()); }

  // Standard normal via Marsaglia polar.  The spare value is cached, so a
  // stream's normal sequence is a deterministic function of its uint64s.
  double next_normal() {
    if (have_normal_) {
      have_normal_ = false;
      return spare_normal_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_unit() - 1.0;
      v = 2.0 * next_unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * m;
    have_normal_ = true;
    return u * m;
  }

  // One-sided alpha-stable with Laplace transform exp(-u^alpha), alpha in
  // (0,1), by Kanter's representation.
  double next_stable_positive(double alpha) {
    const double pi = 3.14159265358979323846;
    const double u = pi * next_unit_pos();
    const double e = next_exp();
    const double a = std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha);
    const double b = std::sin((1.0 - alpha) * u) / e;
    return a * std::pow(b, (1.0 - alpha) / alpha);
  }

 private:
  std::uint32_t key_[2];
  std::uint32_t ctr_[4];
  std::uint64_t block_hi_ = 0;
  bool have_block_ = false;
  double spare_normal_ = 0.0;
  bool have_normal_ = false;
};

}  // namespace rost
