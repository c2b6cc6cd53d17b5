#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string_view>

namespace dpfl {

namespace detail {

// SplitMix64 finalizer; used both to seed streams and to mix derivation labels.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t bits_of(double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, sizeof(u));
  return u;
}

inline std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Seedable random stream. Every sampling operation in the library takes an
// explicit RngStream; independent streams are derived from a master seed by
// hashing, so adding a consumer never perturbs the draws of another.
//
// The normal transform is done by hand (Box-Muller on an explicit u64->double
// mapping) rather than std::normal_distribution, whose algorithm is
// implementation-defined; this keeps runs bit-identical across standard
// libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(detail::mix64(seed)), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Child stream keyed by a label and optional numeric context.
  RngStream derive(std::string_view label) const {
    return RngStream(detail::mix64(seed_ ^ detail::hash_label(label)));
  }
  RngStream derive(std::string_view label, std::uint64_t k) const {
    return RngStream(detail::mix64(detail::mix64(seed_ ^ detail::hash_label(label)) ^ k));
  }

  // Stream for a sweep cell: mixes the grid coordinates so inserting cells
  // leaves existing ones unchanged.
  static RngStream for_cell(std::uint64_t master, double snr, double epsilon,
                            std::uint64_t seed_index) {
    std::uint64_t h = detail::mix64(master);
    h = detail::mix64(h ^ detail::bits_of(snr));
    h = detail::mix64(h ^ detail::bits_of(epsilon));
    h = detail::mix64(h ^ seed_index);
    return RngStream(h);
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in (0,1); 53-bit mantissa, never returns 0.
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = uniform01();
    const double v = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 2.0 * M_PI * v;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  // +1 or -1 with equal probability.
  int rademacher() { return (gen_() >> 63) ? 1 : -1; }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace dpfl
