#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "simlr/error.hpp"
#include "simlr/graph.hpp"
#include "support.hpp"

using namespace simlr;

namespace {

// Data whose column correlation matrix is exactly `r` (up to round-off):
// orthonormal centred columns mixed by the Cholesky factor of r.
Eigen::MatrixXd with_correlation(const Eigen::MatrixXd& r, Eigen::Index n, std::uint64_t seed) {
  Eigen::MatrixXd z = simlr_test::gaussian(n, r.cols(), seed);
  z = z.rowwise() - z.colwise().mean();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, r.cols());
  const Eigen::MatrixXd l = r.llt().matrixL();
  return q * l.transpose();
}

double naive_corr(const Eigen::MatrixXd& x, Eigen::Index a, Eigen::Index b) {
  const Eigen::Index n = x.rows();
  double ma = 0.0, mb = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    ma += x(i, a);
    mb += x(i, b);
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    sab += (x(i, a) - ma) * (x(i, b) - mb);
    saa += (x(i, a) - ma) * (x(i, a) - ma);
    sbb += (x(i, b) - mb) * (x(i, b) - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double naive_distance(const Eigen::MatrixXd& x, Eigen::Index a, Eigen::Index b) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) d += (x(i, a) - x(i, b)) * (x(i, a) - x(i, b));
  return d;
}

// O(p^2) neighbour search: rank every other column, keep the k best.
std::vector<std::set<Eigen::Index>> brute_force_knn(const Eigen::MatrixXd& x, Eigen::Index k, KnnMetric metric) {
  const Eigen::Index p = x.cols();
  std::vector<std::set<Eigen::Index>> out(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<std::pair<double, Eigen::Index>> ranked;
    for (Eigen::Index c = 0; c < p; ++c) {
      if (c == j) continue;
      const double s = metric == KnnMetric::Correlation ? std::abs(naive_corr(x, j, c)) : -naive_distance(x, j, c);
      ranked.emplace_back(-s, c);
    }
    std::sort(ranked.begin(), ranked.end());
    out[static_cast<std::size_t>(j)].insert(j);
    for (Eigen::Index t = 0; t < k; ++t) out[static_cast<std::size_t>(j)].insert(ranked[static_cast<std::size_t>(t)].second);
  }
  return out;
}

std::set<Eigen::Index> row_support(const RegularizationGraph& g, Eigen::Index row) {
  std::set<Eigen::Index> s;
  for (SparseRowMatrix::InnerIterator it(g.weights(), row); it; ++it)
    if (it.value() != 0.0) s.insert(it.col());
  return s;
}

void check_graph_invariants(const RegularizationGraph& g) {
  const Eigen::MatrixXd dense = Eigen::MatrixXd(g.weights());
  for (Eigen::Index r = 0; r < g.dim(); ++r) {
    CHECK(std::abs(dense.row(r).sum() - 1.0) < 1e-10);
    CHECK(dense(r, r) > 0.0);
  }
  CHECK(dense.minCoeff() >= 0.0);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.dim());
  CHECK((g.apply(ones) - ones).cwiseAbs().maxCoeff() < 1e-12);
}

}  // namespace

TEST_CASE("knn picks the strongly correlated partner") {
  Eigen::MatrixXd r(3, 3);
  r << 1.0, 0.99, 0.1, 0.99, 1.0, 0.1, 0.1, 0.1, 1.0;
  const Eigen::MatrixXd x = with_correlation(r, 50, 3);
  CHECK(naive_corr(x, 0, 1) == doctest::Approx(0.99).epsilon(1e-10));

  const RegularizationGraph g = knn_graph(x, 1);
  CHECK(row_support(g, 0) == std::set<Eigen::Index>{0, 1});
  CHECK(g.weights().coeff(0, 0) == doctest::Approx(0.5));
  CHECK(g.weights().coeff(0, 1) == doctest::Approx(0.5));
  CHECK(row_support(g, 1) == std::set<Eigen::Index>{0, 1});
  // Column 3 ties between its two partners; the lower index wins.
  CHECK(row_support(g, 2) == std::set<Eigen::Index>{0, 2});
}

TEST_CASE("knn with two predictors links each to the other") {
  const RegularizationGraph g = knn_graph(simlr_test::gaussian(5, 2, 8), 1);
  const Eigen::MatrixXd dense = Eigen::MatrixXd(g.weights());
  CHECK(dense.isApprox(Eigen::MatrixXd::Constant(2, 2, 0.5)));
}

TEST_CASE("knn rejects k >= p") {
  try {
    knn_graph(simlr_test::gaussian(5, 3, 1), 5);
    FAIL("expected KTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::KTooLarge);
  }
  CHECK_THROWS_AS(knn_graph(simlr_test::gaussian(5, 3, 1), 3), Error);
  CHECK_THROWS_AS(knn_graph(simlr_test::gaussian(5, 3, 1), 0), Error);
  CHECK_THROWS_AS(knn_graph(simlr_test::gaussian(1, 3, 1), 1), Error);
}

TEST_CASE("knn equals brute-force search") {
  int instances = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const Eigen::Index p = 2 + static_cast<Eigen::Index>((seed * 37) % 199);  // 2..200
    const Eigen::Index n = 3 + static_cast<Eigen::Index>(seed % 17);
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(seed % std::min<Eigen::Index>(p - 1, 9));
    const Eigen::MatrixXd x = simlr_test::gaussian(n, p, seed);
    for (KnnMetric metric : {KnnMetric::Correlation, KnnMetric::Euclidean}) {
      const RegularizationGraph g = knn_graph(x, k, metric);
      const auto oracle = brute_force_knn(x, k, metric);
      bool same = true;
      for (Eigen::Index j = 0; j < p; ++j) same = same && row_support(g, j) == oracle[static_cast<std::size_t>(j)];
      CHECK(same);
      check_graph_invariants(g);
      const Eigen::MatrixXd dense = Eigen::MatrixXd(g.weights());
      CHECK((dense.array() == 0.0 || (dense.array() - 1.0 / static_cast<double>(k + 1)).abs() < 1e-15).all());
      ++instances;
    }
  }
  CHECK(instances == 80);
}

TEST_CASE("constant columns never displace defined correlations") {
  Eigen::MatrixXd x = simlr_test::gaussian(10, 4, 5);
  x.col(0).setConstant(3.0);
  const RegularizationGraph g = knn_graph(x, 2);
  for (Eigen::Index j = 1; j < 4; ++j) CHECK(row_support(g, j).count(0) == 0);
  // The constant column itself scores 0 against everyone: lowest indices win.
  CHECK(row_support(g, 0) == std::set<Eigen::Index>{0, 1, 2});
}

TEST_CASE("default neighbour count") {
  CHECK(default_knn_k(2) == 1);
  CHECK(default_knn_k(40) == 1);
  CHECK(default_knn_k(100) == 3);  // round(2.5) away from zero
  CHECK(default_knn_k(300) == 8);
  CHECK(default_knn_k(400) == 10);
  CHECK(default_knn_k(500) == 13);
}

TEST_CASE("identity graph") {
  const RegularizationGraph g = identity_graph(3);
  CHECK(Eigen::MatrixXd(g.weights()).isApprox(Eigen::MatrixXd::Identity(3, 3)));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Eigen::VectorXd v = simlr_test::gaussian(7, 1, seed);
    CHECK(identity_graph(7).apply(v) == v);
  }
  const Eigen::MatrixXd dense = Eigen::MatrixXd(identity_graph(9).weights());
  for (Eigen::Index r = 0; r < 9; ++r) CHECK(dense.row(r).sum() == 1.0);
  CHECK_THROWS_AS(identity_graph(0), Error);
}

TEST_CASE("threshold graph at tau 1 is the identity without duplicate columns") {
  const RegularizationGraph g = correlation_threshold_graph(simlr_test::gaussian(8, 5, 2), 1.0);
  CHECK(Eigen::MatrixXd(g.weights()).isApprox(Eigen::MatrixXd::Identity(5, 5)));
}

TEST_CASE("threshold graph pairs identical columns") {
  Eigen::MatrixXd x = simlr_test::gaussian(12, 4, 6);
  x.col(3) = x.col(1);
  const RegularizationGraph g = correlation_threshold_graph(x, 0.9);
  CHECK(row_support(g, 1) == std::set<Eigen::Index>{1, 3});
  CHECK(row_support(g, 3) == std::set<Eigen::Index>{1, 3});
  CHECK(g.weights().coeff(1, 3) == doctest::Approx(0.5));
  CHECK(g.weights().coeff(3, 3) == doctest::Approx(0.5));
  check_graph_invariants(g);
}

TEST_CASE("threshold graph matches the thresholded oracle correlation matrix") {
  Eigen::MatrixXd r(4, 4);
  r << 1.0, 0.7, 0.2, -0.6,  //
      0.7, 1.0, 0.45, -0.3,  //
      0.2, 0.45, 1.0, 0.1,   //
      -0.6, -0.3, 0.1, 1.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Eigen::MatrixXd x = simlr_test::gaussian(30, 4, seed);
    const Eigen::MatrixXd y = with_correlation(r, 30, seed);
    for (const Eigen::MatrixXd* m : {&x, &y}) {
      const RegularizationGraph g = correlation_threshold_graph(*m, 0.5);
      for (Eigen::Index j = 0; j < 4; ++j) {
        std::set<Eigen::Index> expect;
        for (Eigen::Index c = 0; c < 4; ++c)
          if (c == j || std::abs(naive_corr(*m, j, c)) >= 0.5) expect.insert(c);
        CHECK(row_support(g, j) == expect);
        for (Eigen::Index c : expect)
          CHECK(g.weights().coeff(j, c) == doctest::Approx(1.0 / static_cast<double>(expect.size())));
      }
      check_graph_invariants(g);
    }
  }
  CHECK_THROWS_AS(correlation_threshold_graph(simlr_test::gaussian(5, 3, 1), 0.0), Error);
  CHECK_THROWS_AS(correlation_threshold_graph(simlr_test::gaussian(5, 3, 1), 1.5), Error);
}

TEST_CASE("graph invariants are enforced on construction") {
  SparseRowMatrix bad(2, 2);
  bad.insert(0, 0) = 0.5;
  bad.insert(1, 1) = 1.0;
  CHECK_THROWS_AS(RegularizationGraph{bad}, Error);  // row 0 sums to 0.5

  SparseRowMatrix no_diag(2, 2);
  no_diag.insert(0, 1) = 1.0;
  no_diag.insert(1, 1) = 1.0;
  CHECK_THROWS_AS(RegularizationGraph{no_diag}, Error);

  SparseRowMatrix negative(2, 2);
  negative.insert(0, 0) = 1.5;
  negative.insert(0, 1) = -0.5;
  negative.insert(1, 1) = 1.0;
  CHECK_THROWS_AS(RegularizationGraph{negative}, Error);

  CHECK_THROWS_AS(RegularizationGraph{SparseRowMatrix(2, 3)}, Error);
}

TEST_CASE("applying a graph smooths and keeps dimensions") {
  const Eigen::MatrixXd x = simlr_test::gaussian(20, 30, 12);
  const RegularizationGraph g = knn_graph(x, 3);
  const Eigen::VectorXd v = simlr_test::gaussian(30, 1, 13);
  const Eigen::VectorXd w = g.apply(v);
  CHECK(w.size() == 30);
  const Eigen::MatrixXd dense = Eigen::MatrixXd(g.weights());
  CHECK((w - dense * v).cwiseAbs().maxCoeff() < 1e-14);
  const Eigen::MatrixXd vm = simlr_test::gaussian(30, 4, 14);
  CHECK((g.apply(vm) - dense * vm).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(g.apply(Eigen::VectorXd(Eigen::VectorXd::Ones(29))), Error);
}

TEST_CASE("edge list round trip") {
  const RegularizationGraph g = knn_graph(simlr_test::gaussian(15, 12, 4), 2);
  const std::string text = g.to_edge_list();
  CHECK(text.rfind("dim=12\n", 0) == 0);
  const RegularizationGraph back = RegularizationGraph::from_edge_list(text);
  CHECK(back.dim() == 12);
  CHECK(Eigen::MatrixXd(back.weights()) == Eigen::MatrixXd(g.weights()));
  CHECK(back.to_edge_list() == text);

  CHECK_THROWS_AS(RegularizationGraph::from_edge_list("0,0,1\n"), Error);
  CHECK_THROWS_AS(RegularizationGraph::from_edge_list("dim=2\n0,0,1\n1,5,1\n"), Error);
  CHECK_THROWS_AS(RegularizationGraph::from_edge_list("dim=2\n0,0,1\n1,x,1\n"), Error);
}
