#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace simlr_test {

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

// Central differences of f around v, entry by entry.
inline Eigen::MatrixXd numeric_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                                        const Eigen::MatrixXd& v, double h = 1e-6) {
  Eigen::MatrixXd g(v.rows(), v.cols());
  Eigen::MatrixXd probe = v;
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      probe(i, j) = v(i, j) + h;
      const double up = f(probe);
      probe(i, j) = v(i, j) - h;
      const double down = f(probe);
      probe(i, j) = v(i, j);
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

// max |a - b| / max(max |b|, tiny): relative to the gradient's scale so a
// vanishing component does not blow up the ratio.
inline double max_relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric) {
  const double scale = std::max(numeric.cwiseAbs().maxCoeff(), 1e-300);
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

}  // namespace simlr_test
