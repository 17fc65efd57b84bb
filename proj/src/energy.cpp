#include "simlr/energy.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "simlr/error.hpp"

namespace simlr {

namespace {

void check_shapes(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
  if (u.rows() != x.rows() || v.rows() != x.cols() || v.cols() != u.cols())
    throw Error(ErrorCode::ShapeMismatch, "expected X n x p, U n x k, V p x k; got X " + std::to_string(x.rows()) +
                                              "x" + std::to_string(x.cols()) + ", U " + std::to_string(u.rows()) +
                                              "x" + std::to_string(u.cols()) + ", V " + std::to_string(v.rows()) +
                                              "x" + std::to_string(v.cols()));
}

double sign_of(double a) { return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); }

}  // namespace

void validate_views(const std::vector<DataView>& views) {
  if (views.size() < 2) throw Error(ErrorCode::InvalidConfig, "need at least two views");
  const Eigen::Index n = views.front().samples();
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& v = views[i];
    if (v.samples() != n) throw Error(ErrorCode::ShapeMismatch, "view " + std::to_string(i) + " has a different n");
    if (v.predictors() < 1) throw Error(ErrorCode::EmptyMatrix, "view " + std::to_string(i) + " has no columns");
    if (v.graph.dim() != v.predictors())
      throw Error(ErrorCode::ShapeMismatch, "graph of view " + std::to_string(i) + " does not match its columns");
    if (!(v.sparseness >= 0.0 && v.sparseness < 1.0))
      throw Error(ErrorCode::InvalidConfig, "sparseness of view " + std::to_string(i) + " must lie in [0, 1)");
  }
}

double recon_similarity(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u_tilde, const Eigen::MatrixXd& v) {
  check_shapes(x, u_tilde, v);
  return (x - u_tilde * v.transpose()).squaredNorm();
}

Eigen::MatrixXd recon_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u_tilde, const Eigen::MatrixXd& v) {
  check_shapes(x, u_tilde, v);
  return -2.0 * (x.transpose() * u_tilde - v * (u_tilde.transpose() * u_tilde));
}

double acc_similarity(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u_tilde, const Eigen::MatrixXd& v) {
  check_shapes(x, u_tilde, v);
  const Eigen::MatrixXd xv = x * v;
  const double xv_norm = xv.norm();
  const double u_norm = u_tilde.norm();
  if (xv_norm < 1e-300) throw Error(ErrorCode::DegenerateEmbedding, "embedding X V is all zero");
  if (u_norm <= 0.0) throw Error(ErrorCode::DegenerateEmbedding, "basis is all zero");
  const Eigen::MatrixXd a = u_tilde.transpose() * xv;
  return a.diagonal().cwiseAbs().sum() / (u_norm * xv_norm);
}

Eigen::MatrixXd acc_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u_tilde, const Eigen::MatrixXd& v) {
  check_shapes(x, u_tilde, v);
  const Eigen::MatrixXd xv = x * v;
  const double xv_norm = xv.norm();
  const double u_norm = u_tilde.norm();
  if (xv_norm < 1e-300) throw Error(ErrorCode::DegenerateEmbedding, "embedding X V is all zero");
  if (u_norm <= 0.0) throw Error(ErrorCode::DegenerateEmbedding, "basis is all zero");

  const Eigen::MatrixXd a = u_tilde.transpose() * xv;
  Eigen::VectorXd signs(a.rows());
  for (Eigen::Index j = 0; j < a.rows(); ++j) signs(j) = sign_of(a(j, j));
  const double trace_abs = a.diagonal().cwiseAbs().sum();
  const double c = u_norm * xv_norm;

  Eigen::MatrixXd grad = (x.transpose() * u_tilde) * signs.asDiagonal();
  grad /= c;
  grad -= (trace_abs / (c * xv_norm * xv_norm)) * (x.transpose() * xv);
  return grad;
}

double similarity_energy(Similarity s, const Eigen::MatrixXd& x, const Eigen::MatrixXd& u_tilde,
                         const Eigen::MatrixXd& v) {
  return s == Similarity::Recon ? recon_similarity(x, u_tilde, v) : -acc_similarity(x, u_tilde, v);
}

Eigen::MatrixXd similarity_energy_gradient(Similarity s, const Eigen::MatrixXd& x, const Eigen::MatrixXd& u_tilde,
                                           const Eigen::MatrixXd& v) {
  return s == Similarity::Recon ? recon_gradient(x, u_tilde, v) : Eigen::MatrixXd(-acc_gradient(x, u_tilde, v));
}

double regularization_term(const Eigen::MatrixXd& v, const RegularizationGraph& g, double gamma,
                           SparsityNorm norm) {
  if (v.rows() != g.dim()) throw Error(ErrorCode::ShapeMismatch, "feature matrix rows differ from graph dim");
  const Eigen::MatrixXd smoothed = g.apply(v);
  double total = 0.0;
  for (Eigen::Index k = 0; k < smoothed.cols(); ++k) {
    const auto col = smoothed.col(k);
    const double norm_value = norm == SparsityNorm::L0
                                  ? static_cast<double>((col.array().abs() > kL0Threshold).count())
                                  : col.cwiseAbs().sum();
    total += gamma * norm_value;
  }
  return total;
}

double EnergyReport::similarity_sum() const {
  return std::accumulate(per_view_similarity.begin(), per_view_similarity.end(), 0.0);
}

double EnergyReport::regularization_sum() const {
  return std::accumulate(regularization.begin(), regularization.end(), 0.0);
}

EnergyReport total_energy(const std::vector<DataView>& views, const std::vector<Eigen::MatrixXd>& vs,
                          const std::vector<BasisMatrix>& bases, Similarity similarity, SparsityNorm norm) {
  if (vs.size() != views.size() || bases.size() != views.size())
    throw Error(ErrorCode::ShapeMismatch, "views, feature matrices and bases differ in count");
  EnergyReport report;
  for (std::size_t i = 0; i < views.size(); ++i) {
    report.per_view_similarity.push_back(similarity_energy(similarity, views[i].x, bases[i].u_tilde, vs[i]));
    report.regularization.push_back(regularization_term(vs[i], views[i].graph, views[i].sparseness, norm));
  }
  report.total = report.similarity_sum() + report.regularization_sum();
  return report;
}

}  // namespace simlr
