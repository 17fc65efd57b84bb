#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "simlr/data_view.hpp"
#include "simlr/energy.hpp"
#include "simlr/source_separation.hpp"

namespace simlr {

enum class Initialization { JointSvd, JointIca, Random, Provided };

struct SimlrConfig {
  Eigen::Index k = 2;
  Similarity similarity = Similarity::Recon;
  SeparationMethod separation = SeparationMethod::Svd;
  SparsityNorm norm = SparsityNorm::L0;
  int max_iterations = 100;
  double tolerance = 1e-6;
  Initialization initialization = Initialization::JointSvd;
  std::uint64_t seed = 0;
  // Per-view sparseness; when empty each DataView's own value is used.
  std::vector<double> sparseness;
  // Starting feature matrices for Initialization::Provided.
  std::vector<Eigen::MatrixXd> provided;
  // Warm-start line-search steps per view (e.g. a previous result's
  // step_sizes when resuming); empty starts from 1 / max|gradient|.
  std::vector<double> initial_steps;

  // Throws InvalidConfig (k against n, tolerance, sparseness range).
  void validate(Eigen::Index n, std::size_t view_count) const;
};

// One accepted sweep over the views.
struct IterationRecord {
  int iteration = 0;
  EnergyReport energy;
  std::vector<bool> accepted;  // per view
  std::vector<double> step;    // accepted step size per view (0 when rejected)
};

struct SimlrResult {
  std::vector<Eigen::MatrixXd> vs;  // p_i x k
  std::vector<Eigen::MatrixXd> us;  // n x k, X_i V_i
  std::vector<BasisMatrix> bases;   // basis each view was last scored against
  EnergyReport initial_energy;
  std::vector<IterationRecord> trace;
  int iterations = 0;
  bool converged = false;
  std::vector<double> step_sizes;  // final warm-start step per view
};

// Number of entries a column keeps: ceil((1 - gamma) p), at least 1.
Eigen::Index keep_count(Eigen::Index p, double gamma);

// Smooth with G, keep the largest-|.| keep_count entries (hard threshold for
// l0, soft threshold at the first dropped magnitude for l1), then zero the
// sign with the smaller absolute mass.  An all-zero outcome restores the
// largest smoothed entry.
Eigen::VectorXd project(const Eigen::VectorXd& v, const RegularizationGraph& g, double gamma,
                        SparsityNorm norm = SparsityNorm::L0);
Eigen::MatrixXd project_columns(const Eigen::MatrixXd& v, const RegularizationGraph& g, double gamma,
                                SparsityNorm norm = SparsityNorm::L0);

std::vector<Eigen::MatrixXd> initialize(const std::vector<DataView>& views, const SimlrConfig& config);

// n x k basis for every view, each from the embeddings of the other views.
std::vector<BasisMatrix> compute_bases(const std::vector<Eigen::MatrixXd>& embeddings, const SimlrConfig& config);

SimlrResult fit(const std::vector<DataView>& views, const SimlrConfig& config);

const char* to_string(Similarity s);
const char* to_string(SeparationMethod s);
const char* to_string(SparsityNorm s);
const char* to_string(Initialization s);
std::optional<Similarity> parse_similarity(const std::string& text);
std::optional<SeparationMethod> parse_separation(const std::string& text);
std::optional<SparsityNorm> parse_norm(const std::string& text);
std::optional<Initialization> parse_initialization(const std::string& text);

}  // namespace simlr
