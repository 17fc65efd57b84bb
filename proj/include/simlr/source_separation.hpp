#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace simlr {

enum class SeparationMethod { Svd, Ica };

// Low-rank n x k basis summarising a stack of embeddings.
struct BasisMatrix {
  Eigen::MatrixXd u_tilde;
  SeparationMethod method = SeparationMethod::Svd;
  bool converged = true;  // ICA only; false when the iteration cap was hit
  int iterations = 0;
};

// First k left singular vectors of `stack` by descending singular value, each
// flipped so its largest-magnitude entry is positive.  Throws RankDeficient
// when fewer than k singular values exceed 1e-12 times the largest.
BasisMatrix svd_basis(const Eigen::MatrixXd& stack, Eigen::Index k);

struct IcaOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;
};

// Symmetric fastICA (logcosh contrast, g = tanh) on the column-centred stack,
// whitened to k dimensions through its SVD.  Returns k source columns with
// zero mean and unit sample variance, sign-normalised like svd_basis.
// Non-convergence is reported through `converged`, never thrown.
BasisMatrix ica_basis(const Eigen::MatrixXd& stack, Eigen::Index k, std::uint64_t seed,
                      const IcaOptions& options = {});

BasisMatrix separate(const Eigen::MatrixXd& stack, Eigen::Index k, SeparationMethod method,
                     std::uint64_t seed);

}  // namespace simlr
