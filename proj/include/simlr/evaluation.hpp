#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace simlr {

struct SplitPlan {
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
  std::uint64_t seed = 0;
};

// Seeded uniform shuffle of 0..n-1; the first round(fraction * n) rows train,
// clamped so each side keeps at least one row.  Throws DegenerateSplit for a
// fraction outside (0, 1) or fewer than two rows.
SplitPlan make_split(Eigen::Index n, double train_fraction, std::uint64_t seed);

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows);

// x_new * v.  x_new must already be standardized with training statistics.
Eigen::MatrixXd project_embeddings(const Eigen::MatrixXd& v, const Eigen::MatrixXd& x_new);

// Ordinary least squares with intercept, solved through a complete
// orthogonal decomposition so singular designs give the minimum-norm fit.
struct LinearFit {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  int rank = 0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& design) const;
};

LinearFit fit_linear(const Eigen::MatrixXd& design, const Eigen::VectorXd& target);

// 1 - SSE/SST.  Not clamped, so it can be negative.  SST = 0 yields 1 when
// the prediction is exact and 0 otherwise.
double r_squared(const Eigen::VectorXd& truth, const Eigen::VectorXd& prediction);

struct ComparisonReport {
  std::vector<double> method_a_scores;
  std::vector<double> method_b_scores;
  double mean_diff = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
  bool degenerate = false;  // zero variance in the differences

  std::string summary_line(const std::string& label_a, const std::string& label_b) const;
};

// Two-sided paired t-test on a - b.  All-zero differences give t = 0, p = 1;
// constant non-zero differences give t = +-inf, p = 0 and set `degenerate`.
ComparisonReport paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction,
// relative tolerance 1e-12.
double incomplete_beta(double a, double b, double x);

// Two-sided tail P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

// Upper tail P(F >= f) for the F distribution.
double f_upper_tail(double f, double dof1, double dof2);

}  // namespace simlr
