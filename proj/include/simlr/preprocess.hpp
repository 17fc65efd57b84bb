#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace simlr {

// One modality as loaded from disk: samples in rows, predictors in columns.
struct RawMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  // Checks shape/id invariants and rejects non-finite cells.
  void validate() const;

  // Builds a matrix with generated ids ("r1".., "c1"..).
  static RawMatrix from_values(Eigen::MatrixXd values);
};

// Column statistics captured on one matrix so that other rows (held-out
// samples) can be mapped into exactly the same standardized space.
struct ColumnScaling {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd sd;  // zero for constant columns
  double divisor = 1.0;   // n * p of the matrix the statistics came from

  static ColumnScaling fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

// Center, scale to unit sample sd (n-1), then divide by n*p.  Constant
// columns become zero.  Throws MissingValueError on NaN/inf cells.
Eigen::MatrixXd standardize(const Eigen::MatrixXd& x);
Eigen::MatrixXd standardize(const RawMatrix& raw);

struct AlignResult {
  std::vector<RawMatrix> views;
  std::vector<std::string> dropped;  // ids missing from at least one view
};

// Restricts every view to the sample ids present in all of them, ordered as
// in the first view.
AlignResult align_views(const std::vector<RawMatrix>& views);

// Delimited text: first row holds column ids (leading corner cell), first
// column holds row ids.  Delimiter is detected from the header (tab wins
// over comma).  Empty / NA / NaN cells raise MissingValueError.
RawMatrix read_matrix(const std::filesystem::path& path);
RawMatrix parse_matrix(const std::string& text);

void write_matrix(const std::filesystem::path& path, const RawMatrix& m);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  const std::string& row_prefix = "r", const std::string& col_prefix = "c");
std::string format_matrix(const RawMatrix& m, char delimiter = ',');

// Shortest text that parses back to exactly the same double.
std::string format_real(double value);

}  // namespace simlr
