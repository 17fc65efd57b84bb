#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace simlr {

using Rng = std::mt19937_64;

// Independent generator for a named purpose ("init", "simulate", "split",
// "perm", ...) derived from a single user seed.
Rng substream(std::uint64_t seed, std::string_view name);

// Same as above with an extra integer index, e.g. one stream per run.
Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index);

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace simlr
