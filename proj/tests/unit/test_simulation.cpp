#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <boost/math/distributions/fisher_f.hpp>

#include "simlr/error.hpp"
#include "simlr/simulation.hpp"
#include "support.hpp"

using namespace simlr;

namespace {

SimulationSpec small_spec(std::uint64_t seed) {
  SimulationSpec spec;
  spec.n = 80;
  spec.p = {60, 80};
  spec.k_true = 2;
  spec.smoothing_widths = {0.05, 0.05};
  spec.corruption_fractions = {0.0, 0.0};
  spec.seed = seed;
  return spec;
}

SimlrConfig quick_config() {
  SimlrConfig config;
  config.max_iterations = 20;
  return config;
}

}  // namespace

TEST_CASE("moving average") {
  Eigen::RowVectorXd row(5);
  row << 1, 2, 3, 4, 5;
  CHECK(moving_average(row, 1) == row);
  CHECK(moving_average(row, 0) == row);
  const Eigen::RowVectorXd three = moving_average(row, 3);
  // Reflection repeats the edge value: (1 + 1 + 2) / 3 at the left end.
  CHECK(three(0) == doctest::Approx(4.0 / 3.0));
  CHECK(three(2) == doctest::Approx(3.0));
  CHECK(three(4) == doctest::Approx(14.0 / 3.0));
  const Eigen::RowVectorXd flat = moving_average(Eigen::RowVectorXd::Constant(7, 2.5), 4);
  CHECK((flat.array() - 2.5).abs().maxCoeff() < 1e-15);
}

TEST_CASE("zero corruption without smoothing gives rank K views") {
  SimulationSpec spec = small_spec(3);
  spec.smoothing_widths = {1e-6, 1e-6};
  spec.k_true = 3;
  const SimulationData data = generate(spec);
  for (const auto& view : data.views) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(view.values);
    const Eigen::VectorXd s = svd.singularValues();
    CHECK(s(2) > 1e-3 * s(0));
    for (Eigen::Index i = 3; i < s.size(); ++i) CHECK(s(i) < 1e-10 * s(0));
  }
  for (const auto& cols : data.corrupted_columns) CHECK(cols.empty());
}

TEST_CASE("corrupted column counts and clean columns") {
  SimulationSpec spec = small_spec(5);
  spec.p = {100, 100, 37};
  spec.smoothing_widths = {0.02, 0.03, 0.1};
  spec.corruption_fractions = {0.5, 0.5, 0.3};
  const SimulationData data = generate(spec);
  CHECK(data.corrupted_columns[0].size() == 50);
  CHECK(data.corrupted_columns[1].size() == 50);
  CHECK(data.corrupted_columns[2].size() == 11);
  for (std::size_t j = 0; j < data.views.size(); ++j) {
    const auto& cols = data.corrupted_columns[j];
    CHECK(std::is_sorted(cols.begin(), cols.end()));
    CHECK(std::adjacent_find(cols.begin(), cols.end()) == cols.end());
    const Eigen::MatrixXd clean = data.b_true * data.s_true[j];
    const std::set<Eigen::Index> bad(cols.begin(), cols.end());
    for (Eigen::Index c = 0; c < clean.cols(); ++c) {
      if (bad.count(c)) {
        CHECK(data.views[j].values.col(c) != clean.col(c));
      } else {
        CHECK(data.views[j].values.col(c) == clean.col(c));
      }
    }
  }
}

TEST_CASE("random corruption fractions stay in range") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SimulationSpec spec = small_spec(seed);
    spec.corruption_fractions.clear();
    const SimulationData data = generate(spec);
    REQUIRE(data.corruption_fractions.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) {
      const double f = data.corruption_fractions[j];
      CHECK(f >= 0.1);
      CHECK(f <= 0.9);
      CHECK(static_cast<double>(data.corrupted_columns[j].size()) ==
            std::round(f * static_cast<double>(spec.p[j])));
    }
  }
}

TEST_CASE("generation is deterministic for a seed") {
  SimulationSpec spec = small_spec(11);
  spec.corruption_fractions.clear();
  const SimulationData a = generate(spec);
  const SimulationData b = generate(spec);
  for (std::size_t j = 0; j < a.views.size(); ++j) CHECK(a.views[j].values == b.views[j].values);
  CHECK(a.b_true == b.b_true);
  CHECK(a.train_rows == b.train_rows);
  CHECK(a.corrupted_columns == b.corrupted_columns);
  spec.seed = 12;
  CHECK(generate(spec).b_true != a.b_true);
}

TEST_CASE("train and test rows partition the samples") {
  const SimulationData data = generate(small_spec(2));
  CHECK(data.train_rows.size() == 64);
  CHECK(data.test_rows.size() == 16);
  std::vector<Eigen::Index> all = data.train_rows;
  all.insert(all.end(), data.test_rows.begin(), data.test_rows.end());
  std::sort(all.begin(), all.end());
  std::vector<Eigen::Index> expect(80);
  std::iota(expect.begin(), expect.end(), Eigen::Index{0});
  CHECK(all == expect);
}

TEST_CASE("spec validation") {
  SimulationSpec spec = small_spec(1);
  CHECK_NOTHROW(spec.validate());
  auto rejects = [](SimulationSpec s) {
    try {
      s.validate();
      return false;
    } catch (const Error& e) {
      return e.code() == ErrorCode::InvalidSpec;
    }
  };
  SimulationSpec bad = spec;
  bad.p = {60};
  bad.smoothing_widths = {0.05};
  bad.corruption_fractions = {0.0};
  CHECK(rejects(bad));
  bad = spec;
  bad.n_latent_eval = 3;
  CHECK(rejects(bad));
  bad = spec;
  bad.corruption_fractions = {0.2, 1.2};
  CHECK(rejects(bad));
  bad = spec;
  bad.smoothing_widths = {0.05, 0.0};
  CHECK(rejects(bad));
  bad = spec;
  bad.train_fraction = 1.0;
  CHECK(rejects(bad));
  CHECK_THROWS_AS(generate(bad), Error);
}

TEST_CASE("recovery score of a perfect predictor is one") {
  const SimulationData data = generate(small_spec(4));
  // A view whose first column is beta itself, selected by an indicator.
  std::vector<RawMatrix> views;
  Eigen::MatrixXd first(data.b_true.rows(), 3);
  first << data.b_true.col(0), simlr_test::gaussian(data.b_true.rows(), 2, 1);
  views.push_back(RawMatrix::from_values(first));
  views.push_back(RawMatrix::from_values(simlr_test::gaussian(data.b_true.rows(), 4, 2)));
  Eigen::MatrixXd v0 = Eigen::MatrixXd::Zero(3, 1);
  v0(0, 0) = 1.0;
  const std::vector<Eigen::MatrixXd> vs{v0, Eigen::MatrixXd::Zero(4, 1)};
  const RecoveryScore score = recovery_score(vs, views, data.b_true, data.train_rows, data.test_rows, 0);
  CHECK(score.train_r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(score.test_r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(recovery_score(vs, views, data.b_true, data.train_rows, data.test_rows, 5), Error);
}

TEST_CASE("recovery score on row-permuted beta is near zero") {
  const Eigen::Index n = 100;
  std::vector<Eigen::Index> train(80), test(20);
  std::iota(train.begin(), train.end(), Eigen::Index{0});
  std::iota(test.begin(), test.end(), Eigen::Index{80});
  int low = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::MatrixXd beta = simlr_test::gaussian(n, 1, 1000 + static_cast<std::uint64_t>(trial));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(static_cast<std::uint64_t>(trial));
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::MatrixXd permuted(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) permuted(i, 0) = beta(order[static_cast<std::size_t>(i)], 0);
    const std::vector<RawMatrix> views{RawMatrix::from_values(permuted),
                                       RawMatrix::from_values(simlr_test::gaussian(n, 1, 5000 + trial))};
    const std::vector<Eigen::MatrixXd> vs{Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
    if (recovery_score(vs, views, beta, train, test, 0).test_r2 <= 0.1) ++low;
  }
  CHECK(low >= trials * 95 / 100);
}

TEST_CASE("planted noiseless instance is recovered") {
  const SimulationSpec spec = small_spec(7);
  const SimulationData data = generate(spec);
  HarnessOptions options;
  options.sparseness = 0.0;
  const MethodOutcome outcome = run_method(data, spec, quick_config(), options);
  REQUIRE(outcome.scores.size() == 1);
  CHECK(outcome.scores[0].test_r2 > 0.95);
}

TEST_CASE("permutation baseline") {
  const SimulationSpec spec = small_spec(9);
  const SimulationData data = generate(spec);
  const SimlrConfig config = quick_config();
  const HarnessOptions options;
  CHECK(permutation_baseline(data, spec, config, options, 0, 1).empty());

  const double observed = run_method(data, spec, config, options).scores[0].test_r2;
  const std::vector<double> same = permutation_baseline(data, spec, config, options, 1, 1, 0, true);
  REQUIRE(same.size() == 1);
  CHECK(same[0] == observed);

  const std::vector<double> null = permutation_baseline(data, spec, config, options, 10, 1);
  REQUIRE(null.size() == 10);
  CHECK(*std::max_element(null.begin(), null.end()) < observed);
  CHECK(permutation_baseline(data, spec, config, options, 2, 1) ==
        std::vector<double>(null.begin(), null.begin() + 2));
}

TEST_CASE("corruption sensitivity on constant scores") {
  std::vector<std::vector<double>> fractions;
  for (int i = 0; i < 12; ++i) fractions.push_back({0.1 + 0.05 * i, 0.9 - 0.03 * i, 0.5 + 0.02 * (i % 3)});
  const SensitivityReport r = corruption_sensitivity(std::vector<double>(12, 0.4), fractions);
  CHECK(r.coefficients.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.intercept == doctest::Approx(0.4));
  CHECK(r.f_statistic == 0.0);
  CHECK(r.p_value == 1.0);
}

TEST_CASE("corruption sensitivity on an exact linear response") {
  std::vector<std::vector<double>> fractions;
  std::vector<double> scores;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (int i = 0; i < 15; ++i) {
    fractions.push_back({u(rng), u(rng), u(rng)});
    scores.push_back(0.9 - 0.7 * fractions.back()[0]);
  }
  const SensitivityReport r = corruption_sensitivity(scores, fractions);
  CHECK(std::abs(r.coefficients(0) + 0.7) < 1e-8);
  CHECK(std::abs(r.coefficients(1)) < 1e-8);
  CHECK(std::abs(r.coefficients(2)) < 1e-8);
  CHECK(r.p_value < 1e-12);
}

TEST_CASE("corruption sensitivity F test against boost") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::vector<std::vector<double>> fractions;
    std::vector<double> scores;
    for (int i = 0; i < 30; ++i) {
      fractions.push_back({u(rng), u(rng), u(rng)});
      scores.push_back(0.8 - 0.2 * (fractions.back()[0] + fractions.back()[1]) + noise(rng));
    }
    const SensitivityReport r = corruption_sensitivity(scores, fractions);
    const boost::math::fisher_f dist(3.0, 26.0);
    const double ref = boost::math::cdf(boost::math::complement(dist, r.f_statistic));
    CHECK(std::abs(r.p_value - ref) < 1e-10);
    CHECK(r.r2 >= 0.0);
    CHECK(r.r2 <= 1.0);
    // F from R^2 identity.
    CHECK(r.f_statistic == doctest::Approx((r.r2 / 3.0) / ((1.0 - r.r2) / 26.0)).epsilon(1e-9));
  }
}

TEST_CASE("corruption sensitivity input checks") {
  std::vector<std::vector<double>> fractions(9, std::vector<double>{0.1, 0.2, 0.3});
  CHECK_THROWS_AS(corruption_sensitivity(std::vector<double>(9, 0.0), fractions), Error);
  fractions.resize(10, {0.1, 0.2, 0.3});
  CHECK_THROWS_AS(corruption_sensitivity(std::vector<double>(11, 0.0), fractions), Error);
  fractions.back() = {0.1, 0.2};
  CHECK_THROWS_AS(corruption_sensitivity(std::vector<double>(10, 0.0), fractions), Error);
}

TEST_CASE("study design draws") {
  StudyDesign design;
  std::set<Eigen::Index> ks;
  for (int run = 0; run < 60; ++run) {
    const SimulationSpec spec = draw_spec(design, 5, run);
    CHECK_NOTHROW(spec.validate());
    CHECK(spec.k_true >= 3);
    CHECK(spec.k_true <= 6);
    ks.insert(spec.k_true);
    CHECK(spec.p == design.p);
    CHECK(spec.n == 100);
    for (double w : spec.smoothing_widths) {
      CHECK(w >= 0.01);
      CHECK(w <= 0.05);
    }
    CHECK(spec.corruption_fractions.empty());
    const SimulationSpec again = draw_spec(design, 5, run);
    CHECK(again.seed == spec.seed);
    CHECK(again.smoothing_widths == spec.smoothing_widths);
  }
  CHECK(ks.size() == 4);
  CHECK(draw_spec(design, 5, 0).seed != draw_spec(design, 5, 1).seed);
}

TEST_CASE("method tags") {
  const auto methods = all_methods();
  REQUIRE(methods.size() == 4);
  std::set<std::string> labels;
  for (const auto& m : methods) {
    labels.insert(m.label());
    const auto back = MethodTag::parse(m.label());
    REQUIRE(back.has_value());
    CHECK(back->similarity == m.similarity);
    CHECK(back->separation == m.separation);
  }
  CHECK(labels == std::set<std::string>{"recon-svd", "recon-ica", "acc-svd", "acc-ica"});
  CHECK_FALSE(MethodTag::parse("recon").has_value());
  CHECK_FALSE(MethodTag::parse("cca-svd").has_value());
  CHECK_FALSE(MethodTag::parse("recon-pca").has_value());
}

TEST_CASE("study rows do not depend on the job count") {
  StudyDesign design;
  design.n = 60;
  design.p = {40, 50};
  design.k_min = 2;
  design.k_max = 3;
  StudyOptions options;
  options.runs = 3;
  options.seed = 7;
  options.methods = {{Similarity::Recon, SeparationMethod::Svd}, {Similarity::Acc, SeparationMethod::Svd}};
  options.base_config = quick_config();
  options.jobs = 1;
  const auto serial = run_study(design, options);
  options.jobs = 3;
  const auto parallel = run_study(design, options);
  REQUIRE(serial.size() == 6);
  REQUIRE(parallel.size() == 6);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].run == static_cast<int>(i / 2));
    CHECK(serial[i].method.label() == options.methods[i % 2].label());
    CHECK(parallel[i].run == serial[i].run);
    CHECK(parallel[i].seed == serial[i].seed);
    CHECK(parallel[i].scores[0].test_r2 == serial[i].scores[0].test_r2);
    CHECK(parallel[i].iterations == serial[i].iterations);
    CHECK(serial[i].spec.corruption_fractions.size() == 2);
  }
}

TEST_CASE("study failures propagate") {
  StudyDesign design;
  design.n = 60;
  design.p = {40, 50};
  StudyOptions options;
  options.runs = 2;
  options.jobs = 2;
  options.methods = {{Similarity::Recon, SeparationMethod::Svd}};
  options.harness.rank = 100;  // exceeds n - 1
  CHECK_THROWS_AS(run_study(design, options), Error);
}
