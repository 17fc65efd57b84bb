#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "simlr/evaluation.hpp"
#include "simlr/optimizer.hpp"
#include "simlr/preprocess.hpp"

namespace simlr {

struct SimulationSpec {
  Eigen::Index n = 100;
  std::vector<Eigen::Index> p{300, 400, 500};
  Eigen::Index k_true = 4;
  Eigen::Index n_latent_eval = 1;
  // Moving-average window per view as a fraction of p_j.
  std::vector<double> smoothing_widths{0.02, 0.02, 0.02};
  // Per-view fraction of columns replaced by noise; empty draws each
  // uniformly from [0.1, 0.9].
  std::vector<double> corruption_fractions;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  // Throws InvalidSpec.
  void validate() const;
};

struct SimulationData {
  std::vector<RawMatrix> views;                             // M_j, n x p_j
  Eigen::MatrixXd b_true;                                   // n x K
  std::vector<Eigen::MatrixXd> s_true;                      // smoothed K x p_j
  std::vector<double> corruption_fractions;                 // as applied
  std::vector<std::vector<Eigen::Index>> corrupted_columns;  // sorted per view
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
};

// Centered moving average over a row with symmetric reflection at the ends.
Eigen::RowVectorXd moving_average(const Eigen::RowVectorXd& row, Eigen::Index window);

SimulationData generate(const SimulationSpec& spec);

enum class GraphKind { Knn, Identity };

// How the harness turns training rows into solver input.
struct HarnessOptions {
  GraphKind graph = GraphKind::Knn;
  Eigen::Index graph_k = 0;  // 0: default_knn_k(p)
  Eigen::Index rank = 0;     // SiMLR k; 0: use the spec's k_true
  double sparseness = 0.5;
};

// Training views standardized on the train rows, with graphs attached.
struct TrainingSet {
  std::vector<DataView> views;
  std::vector<ColumnScaling> scaling;
};

TrainingSet prepare_training(const SimulationData& data, const HarnessOptions& options);

struct RecoveryScore {
  double train_r2 = 0.0;
  double test_r2 = 0.0;
};

// OLS of beta_target on the column-bound training embeddings, scored on the
// held-out rows mapped through the training column statistics.
RecoveryScore recovery_score(const SimlrResult& result, const SimulationData& data, Eigen::Index target);

// Same scoring from explicit feature matrices and data (rows of `views` in
// the original order).  Used directly by tests and permutation runs.
RecoveryScore recovery_score(const std::vector<Eigen::MatrixXd>& vs, const std::vector<RawMatrix>& views,
                             const Eigen::MatrixXd& b_true, const std::vector<Eigen::Index>& train_rows,
                             const std::vector<Eigen::Index>& test_rows, Eigen::Index target);

// Full pipeline for one simulated data set: prepare, fit, score every
// evaluated latent column.
struct MethodOutcome {
  std::vector<RecoveryScore> scores;  // one per evaluated beta
  int iterations = 0;
  bool converged = false;
  double seconds = 0.0;
};

MethodOutcome run_method(const SimulationData& data, const SimulationSpec& spec, SimlrConfig config,
                         const HarnessOptions& options);

// Null distribution of test R^2 for beta_target when the rows of every view
// are shuffled independently.  `identity_permutation` leaves rows in place
// (test hook).
std::vector<double> permutation_baseline(const SimulationData& data, const SimulationSpec& spec,
                                         const SimlrConfig& config, const HarnessOptions& options, int n_perms,
                                         std::uint64_t seed, Eigen::Index target = 0,
                                         bool identity_permutation = false);

struct SensitivityReport {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  double f_statistic = 0.0;
  double p_value = 1.0;
  double r2 = 0.0;
};

// OLS of scores on the per-view corruption fractions with an overall F test.
SensitivityReport corruption_sensitivity(const std::vector<double>& scores,
                                         const std::vector<std::vector<double>>& fractions);

// Ranges the batch study draws each run's spec from.
struct StudyDesign {
  Eigen::Index n = 100;
  std::vector<Eigen::Index> p{300, 400, 500};
  Eigen::Index k_min = 3;
  Eigen::Index k_max = 6;
  Eigen::Index n_latent_eval = 1;
  double smoothing_min = 0.01;
  double smoothing_max = 0.05;
  std::vector<double> corruption;  // empty: uniform [0.1, 0.9] per view
  double train_fraction = 0.8;
};

SimulationSpec draw_spec(const StudyDesign& design, std::uint64_t seed, int run);

struct MethodTag {
  Similarity similarity = Similarity::Recon;
  SeparationMethod separation = SeparationMethod::Svd;

  std::string label() const;
  static std::optional<MethodTag> parse(const std::string& text);
};

std::vector<MethodTag> all_methods();

struct StudyRow {
  int run = 0;
  std::uint64_t seed = 0;
  SimulationSpec spec;
  MethodTag method;
  std::vector<RecoveryScore> scores;
  int iterations = 0;
  bool converged = false;
  double seconds = 0.0;
};

struct StudyOptions {
  int runs = 30;
  std::uint64_t seed = 1;
  std::vector<MethodTag> methods = all_methods();
  HarnessOptions harness;
  SimlrConfig base_config;  // k, similarity, separation and seed are set per run
  int jobs = 1;
};

// Rows ordered by run then method, independent of `jobs`.
std::vector<StudyRow> run_study(const StudyDesign& design, const StudyOptions& options);

}  // namespace simlr
