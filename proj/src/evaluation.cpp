#include "simlr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "simlr/error.hpp"
#include "simlr/preprocess.hpp"
#include "simlr/random.hpp"

namespace simlr {

SplitPlan make_split(Eigen::Index n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCode::DegenerateSplit, "train fraction must lie in (0, 1)");
  if (n < 2) throw Error(ErrorCode::DegenerateSplit, "split needs at least 2 rows, got " + std::to_string(n));
  // Rounding may land on 0 or n for extreme fractions; both sides keep a row.
  const auto rounded = static_cast<Eigen::Index>(std::lround(train_fraction * static_cast<double>(n)));
  const Eigen::Index n_train = std::clamp<Eigen::Index>(rounded, 1, n - 1);

  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  Rng rng = substream(seed, "split");
  // Explicit Fisher-Yates: std::shuffle's draw pattern is library specific.
  for (std::size_t i = rows.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(rows[i], rows[j]);
  }
  SplitPlan plan;
  plan.seed = seed;
  plan.train_rows.assign(rows.begin(), rows.begin() + n_train);
  plan.test_rows.assign(rows.begin() + n_train, rows.end());
  return plan;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

Eigen::MatrixXd project_embeddings(const Eigen::MatrixXd& v, const Eigen::MatrixXd& x_new) {
  if (x_new.cols() != v.rows())
    throw Error(ErrorCode::ShapeMismatch, "data has " + std::to_string(x_new.cols()) +
                                              " columns but feature matrix has " + std::to_string(v.rows()) +
                                              " rows");
  return x_new * v;
}

Eigen::VectorXd LinearFit::predict(const Eigen::MatrixXd& design) const {
  if (design.cols() != coefficients.size()) throw Error(ErrorCode::ShapeMismatch, "design width differs from fit");
  return (design * coefficients).array() + intercept;
}

LinearFit fit_linear(const Eigen::MatrixXd& design, const Eigen::VectorXd& target) {
  if (design.rows() != target.size()) throw Error(ErrorCode::LengthMismatch, "design rows differ from target");
  if (design.rows() < 1) throw Error(ErrorCode::EmptyMatrix, "no observations");
  // Centring removes the intercept column from the solve.
  const Eigen::RowVectorXd col_mean = design.colwise().mean();
  const double target_mean = target.mean();
  const Eigen::MatrixXd centered = design.rowwise() - col_mean;
  const Eigen::VectorXd y = target.array() - target_mean;

  LinearFit fit;
  if (design.cols() == 0) {
    fit.intercept = target_mean;
    return fit;
  }
  // Scale columns so the rank threshold is relative to each predictor.
  Eigen::VectorXd scale = centered.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    if (!(scale(j) > 0.0)) scale(j) = 1.0;
  const Eigen::MatrixXd scaled = centered * scale.cwiseInverse().asDiagonal();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(scaled);
  cod.setThreshold(1e-10);
  fit.coefficients = (cod.solve(y).array() / scale.array()).matrix();
  fit.rank = static_cast<int>(cod.rank());
  fit.intercept = target_mean - col_mean.dot(fit.coefficients);
  return fit;
}

double r_squared(const Eigen::VectorXd& truth, const Eigen::VectorXd& prediction) {
  if (truth.size() != prediction.size()) throw Error(ErrorCode::LengthMismatch, "prediction length differs");
  const double sse = (truth - prediction).squaredNorm();
  const double sst = (truth.array() - truth.mean()).square().sum();
  if (sst == 0.0) return sse == 0.0 ? 1.0 : 0.0;
  return 1.0 - sse / sst;
}

std::string ComparisonReport::summary_line(const std::string& label_a, const std::string& label_b) const {
  return label_a + "," + label_b + "," + std::to_string(method_a_scores.size()) + "," + format_real(mean_diff) +
         "," + format_real(t_statistic) + "," + format_real(p_value) + "," + std::to_string(dof) + "," +
         (degenerate ? "1" : "0");
}

ComparisonReport paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "paired samples differ in length");
  if (a.size() < 2) throw Error(ErrorCode::LengthMismatch, "paired t-test needs at least two pairs");
  ComparisonReport report;
  report.method_a_scores = a;
  report.method_b_scores = b;
  const auto n = static_cast<double>(a.size());
  report.dof = static_cast<int>(a.size()) - 1;

  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  report.mean_diff = mean;

  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) {
    if (mean == 0.0) {
      report.t_statistic = 0.0;
      report.p_value = 1.0;
    } else {
      report.t_statistic = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
      report.p_value = 0.0;
      report.degenerate = true;
    }
    return report;
  }
  report.t_statistic = mean / (sd / std::sqrt(n));
  report.p_value = student_t_two_sided_p(report.t_statistic, n - 1.0);
  return report;
}

namespace {

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxTerms = 10000;
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-12;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw Error(ErrorCode::InvalidConfig, "incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) return 1.0;
  const double x = dof / (dof + t * t);
  return std::clamp(incomplete_beta(0.5 * dof, 0.5, x), 0.0, 1.0);
}

double f_upper_tail(double f, double dof1, double dof2) {
  if (std::isinf(f)) return 0.0;
  if (!(f > 0.0)) return 1.0;
  const double x = dof2 / (dof2 + dof1 * f);
  return std::clamp(incomplete_beta(0.5 * dof2, 0.5 * dof1, x), 0.0, 1.0);
}

}  // namespace simlr
