#include "simlr/source_separation.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "simlr/error.hpp"
#include "simlr/random.hpp"

namespace simlr {

namespace {

void flip_to_positive_peak(Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index arg = 0;
    m.col(j).cwiseAbs().maxCoeff(&arg);
    if (m(arg, j) < 0.0) m.col(j) = -m.col(j);
  }
}

void check_rank_request(const Eigen::MatrixXd& stack, Eigen::Index k) {
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "rank k must be positive");
  if (k > std::min(stack.rows(), stack.cols()))
    throw Error(ErrorCode::RankDeficient, "rank k=" + std::to_string(k) + " exceeds stack dimensions " +
                                              std::to_string(stack.rows()) + "x" + std::to_string(stack.cols()));
  if (!stack.allFinite()) throw Error(ErrorCode::InvalidConfig, "stack has non-finite entries");
}

void check_spectrum(const Eigen::VectorXd& sv, Eigen::Index k) {
  const double largest = sv.size() ? sv(0) : 0.0;
  if (!(largest > 0.0) || sv(k - 1) < 1e-12 * largest)
    throw Error(ErrorCode::RankDeficient,
                "stack has fewer than " + std::to_string(k) + " non-negligible singular values");
}

// Inverse square root of W W^T applied on the left: rows become orthonormal.
Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w * w.transpose());
  const Eigen::VectorXd inv_sqrt = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose() * w;
}

}  // namespace

BasisMatrix svd_basis(const Eigen::MatrixXd& stack, Eigen::Index k) {
  check_rank_request(stack, k);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(stack, Eigen::ComputeThinU);
  check_spectrum(svd.singularValues(), k);
  BasisMatrix basis;
  basis.method = SeparationMethod::Svd;
  basis.u_tilde = svd.matrixU().leftCols(k);
  flip_to_positive_peak(basis.u_tilde);
  return basis;
}

BasisMatrix ica_basis(const Eigen::MatrixXd& stack, Eigen::Index k, std::uint64_t seed,
                      const IcaOptions& options) {
  check_rank_request(stack, k);
  const Eigen::Index n = stack.rows();
  if (n < k + 1) throw Error(ErrorCode::RankDeficient, "ICA needs at least k+1 rows");

  const Eigen::MatrixXd centered = stack.rowwise() - stack.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  check_spectrum(svd.singularValues(), k);
  // Whitened scores: uncorrelated, unit sample variance.
  const Eigen::MatrixXd z = svd.matrixU().leftCols(k) * std::sqrt(static_cast<double>(n - 1));

  Rng rng = substream(seed, "ica");
  Eigen::MatrixXd w = symmetric_decorrelation(standard_normal(k, k, rng));

  BasisMatrix basis;
  basis.method = SeparationMethod::Ica;
  basis.converged = false;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Eigen::MatrixXd projected = z * w.transpose();  // n x k
    const Eigen::MatrixXd g = projected.array().tanh().matrix();
    const Eigen::RowVectorXd g_prime_mean = (1.0 - g.array().square()).matrix().colwise().mean();
    Eigen::MatrixXd w_next = (g.transpose() * z) * inv_n - g_prime_mean.transpose().asDiagonal() * w;
    w_next = symmetric_decorrelation(w_next);

    const double change = ((w_next * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = std::move(w_next);
    basis.iterations = it;
    if (change < options.tolerance) {
      basis.converged = true;
      break;
    }
  }

  Eigen::MatrixXd sources = z * w.transpose();
  for (Eigen::Index j = 0; j < k; ++j) {
    auto col = sources.col(j);
    col.array() -= col.mean();
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n - 1));
    if (sd > 0.0) col /= sd;
  }
  flip_to_positive_peak(sources);
  basis.u_tilde = std::move(sources);
  return basis;
}

BasisMatrix separate(const Eigen::MatrixXd& stack, Eigen::Index k, SeparationMethod method,
                     std::uint64_t seed) {
  return method == SeparationMethod::Svd ? svd_basis(stack, k) : ica_basis(stack, k, seed);
}

}  // namespace simlr
