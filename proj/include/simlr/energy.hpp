#pragma once

#include <vector>

#include <Eigen/Dense>

#include "simlr/data_view.hpp"
#include "simlr/graph.hpp"
#include "simlr/source_separation.hpp"

namespace simlr {

enum class Similarity { Recon, Acc };
enum class SparsityNorm { L0, L1 };

// Entries at or below this magnitude do not count toward the l0 norm.
inline constexpr double kL0Threshold = 1e-12;

// ||X - U V^T||_F^2
double recon_similarity(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u_tilde, const Eigen::MatrixXd& v);

// -2 (X^T - V U^T) U
Eigen::MatrixXd recon_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u_tilde, const Eigen::MatrixXd& v);

// Absolute canonical covariance tr|U^T X V| / (||U|| ||X V||), where only the
// diagonal of the k x k product enters the trace.  A quality to maximise.
double acc_similarity(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u_tilde, const Eigen::MatrixXd& v);

// d acc / dV.  With A = U^T X V, c = ||U|| ||XV||:
//   (1/c) X^T U diag(sign(A_jj))  -  tr|A| / (c ||XV||^2) X^T X V
// sign(0) is taken as 0.
Eigen::MatrixXd acc_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u_tilde, const Eigen::MatrixXd& v);

// Similarity as the solver minimises it: recon as-is, acc negated.
double similarity_energy(Similarity s, const Eigen::MatrixXd& x, const Eigen::MatrixXd& u_tilde,
                         const Eigen::MatrixXd& v);
Eigen::MatrixXd similarity_energy_gradient(Similarity s, const Eigen::MatrixXd& x, const Eigen::MatrixXd& u_tilde,
                                           const Eigen::MatrixXd& v);

// sum_k gamma ||G v_k||, l0 counting entries above kL0Threshold, l1 summing
// magnitudes.
double regularization_term(const Eigen::MatrixXd& v, const RegularizationGraph& g, double gamma,
                           SparsityNorm norm);

struct EnergyReport {
  std::vector<double> per_view_similarity;
  std::vector<double> regularization;
  double total = 0.0;

  double similarity_sum() const;
  double regularization_sum() const;
};

EnergyReport total_energy(const std::vector<DataView>& views, const std::vector<Eigen::MatrixXd>& vs,
                          const std::vector<BasisMatrix>& bases, Similarity similarity, SparsityNorm norm);

}  // namespace simlr
