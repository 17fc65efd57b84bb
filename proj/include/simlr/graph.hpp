#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace simlr {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Row-stochastic p x p smoothing operator applied to feature vectors before
// thresholding.  Immutable once built; rows sum to one, weights are
// non-negative and every row carries a positive diagonal.
class RegularizationGraph {
 public:
  RegularizationGraph() = default;

  // Validates the invariants above; throws InvalidConfig otherwise.
  explicit RegularizationGraph(SparseRowMatrix weights);

  Eigen::Index dim() const { return weights_.rows(); }
  const SparseRowMatrix& weights() const { return weights_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& v) const;

  // Edge list "row,col,weight" (0-based) preceded by a "dim=<p>" line.
  std::string to_edge_list() const;
  static RegularizationGraph from_edge_list(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static RegularizationGraph load(const std::filesystem::path& path);

 private:
  SparseRowMatrix weights_;
};

enum class KnnMetric { Correlation, Euclidean };

RegularizationGraph identity_graph(Eigen::Index p);

// Exact neighbour search over the predictor columns of x.  Each row holds
// itself plus its k nearest columns with weight 1/(k+1).  Correlation
// ranks by |corr| (undefined correlation counts as 0); ties go to the lower
// column index.
RegularizationGraph knn_graph(const Eigen::MatrixXd& x, Eigen::Index k,
                              KnnMetric metric = KnnMetric::Correlation);

// Default neighbour count: max(1, round(0.025 p)), capped at p - 1.
Eigen::Index default_knn_k(Eigen::Index p);

// Row j holds j and every column with |corr| >= tau, uniformly weighted.
RegularizationGraph correlation_threshold_graph(const Eigen::MatrixXd& x, double tau);

// Pearson correlation between columns; pairs involving a constant column
// are reported as 0 (the diagonal stays 1 for non-constant columns).
Eigen::MatrixXd column_correlation(const Eigen::MatrixXd& x);

}  // namespace simlr
