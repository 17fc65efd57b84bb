#include "simlr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "simlr/error.hpp"
#include "simlr/preprocess.hpp"

namespace simlr {

namespace {

using Triplet = Eigen::Triplet<double>;

RegularizationGraph from_supports(Eigen::Index p, const std::vector<std::vector<Eigen::Index>>& support) {
  std::vector<Triplet> triplets;
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& row = support[static_cast<std::size_t>(j)];
    const double w = 1.0 / static_cast<double>(row.size());
    for (Eigen::Index c : row) triplets.emplace_back(j, c, w);
  }
  SparseRowMatrix g(p, p);
  g.setFromTriplets(triplets.begin(), triplets.end());
  return RegularizationGraph(std::move(g));
}

}  // namespace

RegularizationGraph::RegularizationGraph(SparseRowMatrix weights) : weights_(std::move(weights)) {
  weights_.makeCompressed();
  if (weights_.rows() != weights_.cols() || weights_.rows() == 0)
    throw Error(ErrorCode::InvalidConfig, "regularization graph must be square and non-empty");
  for (Eigen::Index r = 0; r < weights_.outerSize(); ++r) {
    double sum = 0.0;
    double diag = 0.0;
    for (SparseRowMatrix::InnerIterator it(weights_, r); it; ++it) {
      if (it.value() < 0.0 || !std::isfinite(it.value()))
        throw Error(ErrorCode::InvalidConfig, "negative or non-finite weight in row " + std::to_string(r));
      sum += it.value();
      if (it.col() == r) diag = it.value();
    }
    if (diag <= 0.0) throw Error(ErrorCode::InvalidConfig, "row " + std::to_string(r) + " has no diagonal");
    if (std::abs(sum - 1.0) > 1e-10)
      throw Error(ErrorCode::InvalidConfig, "row " + std::to_string(r) + " does not sum to one");
  }
}

Eigen::VectorXd RegularizationGraph::apply(const Eigen::VectorXd& v) const {
  if (v.size() != dim()) throw Error(ErrorCode::ShapeMismatch, "vector length differs from graph dim");
  return weights_ * v;
}

Eigen::MatrixXd RegularizationGraph::apply(const Eigen::MatrixXd& v) const {
  if (v.rows() != dim()) throw Error(ErrorCode::ShapeMismatch, "matrix rows differ from graph dim");
  return weights_ * v;
}

std::string RegularizationGraph::to_edge_list() const {
  std::string out = "dim=" + std::to_string(dim()) + "\n";
  for (Eigen::Index r = 0; r < weights_.outerSize(); ++r)
    for (SparseRowMatrix::InnerIterator it(weights_, r); it; ++it)
      out += std::to_string(r) + "," + std::to_string(it.col()) + "," + format_real(it.value()) + "\n";
  return out;
}

namespace {

long parse_index(const std::string& text, const std::string& line) {
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw Error(ErrorCode::Parse, "bad edge line '" + line + "'");
  return value;
}

double parse_weight(const std::string& text, const std::string& line) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') throw Error(ErrorCode::Parse, "bad edge line '" + line + "'");
  return value;
}

}  // namespace

RegularizationGraph RegularizationGraph::from_edge_list(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_line = [&]() {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line() || line.rfind("dim=", 0) != 0)
    throw Error(ErrorCode::Parse, "graph file must start with dim=<p>");
  const long p = parse_index(line.substr(4), line);
  if (p <= 0) throw Error(ErrorCode::Parse, "graph dim must be positive");
  std::vector<Triplet> triplets;
  while (next_line()) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), '\t', ',');
    std::istringstream row(line);
    std::string a, b, w;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, w, ','))
      throw Error(ErrorCode::Parse, "bad edge line '" + line + "'");
    const long r = parse_index(a, line), c = parse_index(b, line);
    if (r < 0 || c < 0 || r >= p || c >= p) throw Error(ErrorCode::Parse, "edge index out of range");
    triplets.emplace_back(r, c, parse_weight(w, line));
  }
  SparseRowMatrix g(p, p);
  g.setFromTriplets(triplets.begin(), triplets.end());
  return RegularizationGraph(std::move(g));
}

void RegularizationGraph::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_edge_list();
}

RegularizationGraph RegularizationGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_edge_list(buf.str());
}

RegularizationGraph identity_graph(Eigen::Index p) {
  if (p < 1) throw Error(ErrorCode::InvalidConfig, "identity graph needs p >= 1");
  SparseRowMatrix g(p, p);
  g.setIdentity();
  return RegularizationGraph(std::move(g));
}

Eigen::Index default_knn_k(Eigen::Index p) {
  const auto k = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::lround(0.025 * static_cast<double>(p))));
  return std::min(k, std::max<Eigen::Index>(1, p - 1));
}

Eigen::MatrixXd column_correlation(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::VectorXd norms = centered.colwise().norm();
  const double scale = norms.size() ? std::max(1.0, norms.maxCoeff()) : 1.0;
  Eigen::MatrixXd scaled = centered;
  std::vector<bool> constant(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    constant[static_cast<std::size_t>(j)] = norms(j) <= 1e-300 || norms(j) <= 1e-14 * scale;
    if (constant[static_cast<std::size_t>(j)]) scaled.col(j).setZero();
    else scaled.col(j) /= norms(j);
  }
  Eigen::MatrixXd corr = scaled.transpose() * scaled;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    corr(j, j) = constant[static_cast<std::size_t>(j)] ? 0.0 : 1.0;
  return corr;
}

RegularizationGraph knn_graph(const Eigen::MatrixXd& x, Eigen::Index k, KnnMetric metric) {
  const Eigen::Index p = x.cols();
  if (x.rows() < 2) throw Error(ErrorCode::InvalidConfig, "knn graph needs at least 2 rows");
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "knn graph needs k >= 1");
  if (k >= p)
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " must be below p=" + std::to_string(p));

  // score(j, c): larger is nearer.
  Eigen::MatrixXd score;
  if (metric == KnnMetric::Correlation) {
    score = column_correlation(x).cwiseAbs();
  } else {
    const Eigen::VectorXd sq = x.colwise().squaredNorm();
    const Eigen::MatrixXd gram = x.transpose() * x;
    score.resize(p, p);
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index c = 0; c < p; ++c) score(j, c) = -std::max(0.0, sq(j) + sq(c) - 2.0 * gram(j, c));
  }

  std::vector<std::vector<Eigen::Index>> support(static_cast<std::size_t>(p));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p - 1));
  for (Eigen::Index j = 0; j < p; ++j) {
    std::size_t t = 0;
    for (Eigen::Index c = 0; c < p; ++c)
      if (c != j) order[t++] = c;
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (score(j, a) != score(j, b)) return score(j, a) > score(j, b);
      return a < b;
    });
    auto& row = support[static_cast<std::size_t>(j)];
    row.push_back(j);
    row.insert(row.end(), order.begin(), order.begin() + k);
  }
  return from_supports(p, support);
}

RegularizationGraph correlation_threshold_graph(const Eigen::MatrixXd& x, double tau) {
  if (x.rows() < 2) throw Error(ErrorCode::InvalidConfig, "correlation graph needs at least 2 rows");
  if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorCode::InvalidConfig, "tau must lie in (0, 1]");
  const Eigen::MatrixXd corr = column_correlation(x);
  const Eigen::Index p = x.cols();
  std::vector<std::vector<Eigen::Index>> support(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    auto& row = support[static_cast<std::size_t>(j)];
    for (Eigen::Index c = 0; c < p; ++c)
      // 1e-12 slack so duplicated columns clear tau = 1 despite rounding.
      if (c == j || std::abs(corr(j, c)) >= tau - 1e-12) row.push_back(c);
  }
  return from_supports(p, support);
}

}  // namespace simlr
