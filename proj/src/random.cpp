#include "simlr/random.hpp"

#include <cmath>

namespace simlr {

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Rng make(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

}  // namespace

Rng substream(std::uint64_t seed, std::string_view name) { return make(seed, fnv1a(name), 0); }

Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  return make(seed, fnv1a(name), index + 1);
}

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  // Box-Muller by hand: std::normal_distribution differs between standard
  // libraries, and outputs must not.
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  Eigen::MatrixXd out(rows, cols);
  double* data = out.data();  // column-major fill order is part of the contract
  const Eigen::Index total = out.size();
  for (Eigen::Index t = 0; t < total; t += 2) {
    const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    data[t] = radius * std::cos(kTwoPi * u2);
    if (t + 1 < total) data[t + 1] = radius * std::sin(kTwoPi * u2);
  }
  return out;
}

}  // namespace simlr
