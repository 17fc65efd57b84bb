#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "simlr/graph.hpp"

namespace simlr {

// A standardized modality ready for the solver.
struct DataView {
  Eigen::MatrixXd x;           // n x p, output of standardize()
  RegularizationGraph graph;   // p x p
  double sparseness = 0.5;     // fraction of each feature column zeroed
  std::string name;

  Eigen::Index samples() const { return x.rows(); }
  Eigen::Index predictors() const { return x.cols(); }
};

// Throws ShapeMismatch / InvalidConfig when the collection is unusable: fewer
// than two views, differing n, graph of the wrong size, sparseness outside
// [0, 1).
void validate_views(const std::vector<DataView>& views);

}  // namespace simlr
