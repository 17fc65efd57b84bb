#include "simlr/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "simlr/error.hpp"
#include "simlr/graph.hpp"
#include "simlr/random.hpp"

namespace simlr {

namespace {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Eigen::Index uniform_int(Rng& rng, Eigen::Index lo, Eigen::Index hi) {
  return lo + static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

Eigen::Index reflect(Eigen::Index idx, Eigen::Index p) {
  const Eigen::Index period = 2 * p;
  idx %= period;
  if (idx < 0) idx += period;
  return idx < p ? idx : period - idx - 1;
}

std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace

void SimulationSpec::validate() const {
  const std::size_t m = p.size();
  if (m < 2) throw Error(ErrorCode::InvalidSpec, "need at least two views");
  if (n < 4) throw Error(ErrorCode::InvalidSpec, "need at least 4 samples");
  for (auto pj : p)
    if (pj < 2) throw Error(ErrorCode::InvalidSpec, "each view needs at least 2 predictors");
  if (k_true < 1) throw Error(ErrorCode::InvalidSpec, "latent rank must be positive");
  if (n_latent_eval < 1 || n_latent_eval > k_true)
    throw Error(ErrorCode::InvalidSpec, "n_latent_eval must lie in [1, k_true]");
  if (smoothing_widths.size() != m) throw Error(ErrorCode::InvalidSpec, "need one smoothing width per view");
  for (double w : smoothing_widths)
    if (!(w > 0.0)) throw Error(ErrorCode::InvalidSpec, "smoothing widths must be positive");
  if (!corruption_fractions.empty()) {
    if (corruption_fractions.size() != m) throw Error(ErrorCode::InvalidSpec, "need one corruption fraction per view");
    for (double f : corruption_fractions)
      if (!(f >= 0.0 && f <= 1.0)) throw Error(ErrorCode::InvalidSpec, "corruption fractions must lie in [0, 1]");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCode::InvalidSpec, "train fraction must lie in (0, 1)");
}

Eigen::RowVectorXd moving_average(const Eigen::RowVectorXd& row, Eigen::Index window) {
  const Eigen::Index p = row.size();
  window = std::max<Eigen::Index>(1, window);
  if (window == 1) return row;
  const Eigen::Index left = (window - 1) / 2;
  Eigen::RowVectorXd out(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double sum = 0.0;
    for (Eigen::Index o = 0; o < window; ++o) sum += row(reflect(j - left + o, p));
    out(j) = sum / static_cast<double>(window);
  }
  return out;
}

SimulationData generate(const SimulationSpec& spec) {
  spec.validate();
  const std::size_t m = spec.p.size();
  Rng rng = substream(spec.seed, "simulate");
  SimulationData data;

  for (std::size_t j = 0; j < m; ++j) {
    Eigen::MatrixXd s = standard_normal(spec.k_true, spec.p[j], rng);
    const auto window = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::lround(spec.smoothing_widths[j] * static_cast<double>(spec.p[j]))));
    for (Eigen::Index r = 0; r < s.rows(); ++r) s.row(r) = moving_average(s.row(r), window);
    data.s_true.push_back(std::move(s));
  }
  data.b_true = standard_normal(spec.n, spec.k_true, rng);

  data.corruption_fractions = spec.corruption_fractions;
  if (data.corruption_fractions.empty())
    for (std::size_t j = 0; j < m; ++j) data.corruption_fractions.push_back(0.1 + 0.8 * uniform01(rng));

  for (std::size_t j = 0; j < m; ++j) {
    Eigen::MatrixXd values = data.b_true * data.s_true[j];
    const auto count = static_cast<Eigen::Index>(
        std::lround(data.corruption_fractions[j] * static_cast<double>(spec.p[j])));
    auto order = shuffled_indices(spec.p[j], rng);
    std::vector<Eigen::Index> chosen(order.begin(), order.begin() + count);
    std::sort(chosen.begin(), chosen.end());
    const Eigen::MatrixXd noise = standard_normal(spec.n, count, rng);
    for (std::size_t c = 0; c < chosen.size(); ++c) values.col(chosen[c]) = noise.col(static_cast<Eigen::Index>(c));
    data.corrupted_columns.push_back(std::move(chosen));
    RawMatrix raw = RawMatrix::from_values(std::move(values));
    data.views.push_back(std::move(raw));
  }

  const SplitPlan split = make_split(spec.n, spec.train_fraction, spec.seed);
  data.train_rows = split.train_rows;
  data.test_rows = split.test_rows;
  return data;
}

TrainingSet prepare_training(const SimulationData& data, const HarnessOptions& options) {
  TrainingSet set;
  for (std::size_t j = 0; j < data.views.size(); ++j) {
    const Eigen::MatrixXd train = select_rows(data.views[j].values, data.train_rows);
    set.scaling.push_back(ColumnScaling::fit(train));
    DataView view;
    view.x = set.scaling.back().apply(train);
    const Eigen::Index p = view.x.cols();
    if (options.graph == GraphKind::Knn && p > 1)
      view.graph = knn_graph(view.x, options.graph_k > 0 ? std::min(options.graph_k, p - 1) : default_knn_k(p));
    else
      view.graph = identity_graph(p);
    view.sparseness = options.sparseness;
    view.name = "view" + std::to_string(j + 1);
    set.views.push_back(std::move(view));
  }
  return set;
}

RecoveryScore recovery_score(const std::vector<Eigen::MatrixXd>& vs, const std::vector<RawMatrix>& views,
                             const Eigen::MatrixXd& b_true, const std::vector<Eigen::Index>& train_rows,
                             const std::vector<Eigen::Index>& test_rows, Eigen::Index target) {
  if (vs.size() != views.size()) throw Error(ErrorCode::ShapeMismatch, "one feature matrix per view expected");
  if (target < 0 || target >= b_true.cols()) throw Error(ErrorCode::InvalidConfig, "target column out of range");
  Eigen::Index width = 0;
  for (const auto& v : vs) width += v.cols();
  Eigen::MatrixXd train_design(static_cast<Eigen::Index>(train_rows.size()), width);
  Eigen::MatrixXd test_design(static_cast<Eigen::Index>(test_rows.size()), width);
  Eigen::Index at = 0;
  for (std::size_t j = 0; j < views.size(); ++j) {
    const Eigen::MatrixXd train = select_rows(views[j].values, train_rows);
    const ColumnScaling scaling = ColumnScaling::fit(train);
    train_design.middleCols(at, vs[j].cols()) = project_embeddings(vs[j], scaling.apply(train));
    test_design.middleCols(at, vs[j].cols()) =
        project_embeddings(vs[j], scaling.apply(select_rows(views[j].values, test_rows)));
    at += vs[j].cols();
  }
  const Eigen::VectorXd beta = b_true.col(target);
  const Eigen::VectorXd beta_train = select_rows(beta, train_rows);
  const Eigen::VectorXd beta_test = select_rows(beta, test_rows);
  const LinearFit model = fit_linear(train_design, beta_train);
  RecoveryScore score;
  score.train_r2 = r_squared(beta_train, model.predict(train_design));
  score.test_r2 = r_squared(beta_test, model.predict(test_design));
  return score;
}

RecoveryScore recovery_score(const SimlrResult& result, const SimulationData& data, Eigen::Index target) {
  return recovery_score(result.vs, data.views, data.b_true, data.train_rows, data.test_rows, target);
}

MethodOutcome run_method(const SimulationData& data, const SimulationSpec& spec, SimlrConfig config,
                         const HarnessOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  config.k = options.rank > 0 ? options.rank : spec.k_true;
  const TrainingSet set = prepare_training(data, options);
  const SimlrResult result = fit(set.views, config);
  MethodOutcome outcome;
  for (Eigen::Index t = 0; t < spec.n_latent_eval; ++t) outcome.scores.push_back(recovery_score(result, data, t));
  outcome.iterations = result.iterations;
  outcome.converged = result.converged;
  outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return outcome;
}

std::vector<double> permutation_baseline(const SimulationData& data, const SimulationSpec& spec,
                                         const SimlrConfig& config, const HarnessOptions& options, int n_perms,
                                         std::uint64_t seed, Eigen::Index target, bool identity_permutation) {
  std::vector<double> null;
  for (int perm = 0; perm < n_perms; ++perm) {
    Rng rng = substream(seed, "perm", static_cast<std::uint64_t>(perm));
    SimulationData shuffled = data;
    if (!identity_permutation) {
      for (auto& view : shuffled.views) {
        const auto order = shuffled_indices(view.rows(), rng);
        view.values = select_rows(view.values, order);
      }
    }
    const MethodOutcome outcome = run_method(shuffled, spec, config, options);
    null.push_back(outcome.scores.at(static_cast<std::size_t>(target)).test_r2);
  }
  return null;
}

SensitivityReport corruption_sensitivity(const std::vector<double>& scores,
                                         const std::vector<std::vector<double>>& fractions) {
  if (scores.size() != fractions.size()) throw Error(ErrorCode::LengthMismatch, "one fraction vector per score");
  if (scores.size() < 10) throw Error(ErrorCode::LengthMismatch, "sensitivity regression needs at least 10 runs");
  const auto n = static_cast<Eigen::Index>(scores.size());
  const auto q = static_cast<Eigen::Index>(fractions.front().size());
  Eigen::MatrixXd design(n, q);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = fractions[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(f.size()) != q) throw Error(ErrorCode::LengthMismatch, "ragged fraction vectors");
    for (Eigen::Index j = 0; j < q; ++j) design(i, j) = f[static_cast<std::size_t>(j)];
    y(i) = scores[static_cast<std::size_t>(i)];
  }

  const LinearFit model = fit_linear(design, y);
  SensitivityReport report;
  report.intercept = model.intercept;
  report.coefficients = model.coefficients;

  const Eigen::VectorXd fitted = model.predict(design);
  const double sst = (y.array() - y.mean()).square().sum();
  const double sse = (y - fitted).squaredNorm();
  const double ssr = std::max(0.0, sst - sse);
  const double dof1 = static_cast<double>(std::max(model.rank, 1));
  const double dof2 = static_cast<double>(n) - dof1 - 1.0;
  report.r2 = sst > 0.0 ? 1.0 - sse / sst : 0.0;
  // Round-off residue relative to the total spread is treated as exact zero.
  if (sst <= 0.0 || ssr <= 1e-14 * sst) {
    report.f_statistic = 0.0;
    report.p_value = 1.0;
  } else if (sse <= 1e-24 * sst || dof2 <= 0.0) {
    report.f_statistic = std::numeric_limits<double>::infinity();
    report.p_value = 0.0;
  } else {
    report.f_statistic = (ssr / dof1) / (sse / dof2);
    report.p_value = f_upper_tail(report.f_statistic, dof1, dof2);
  }
  return report;
}

SimulationSpec draw_spec(const StudyDesign& design, std::uint64_t seed, int run) {
  Rng rng = substream(seed, "design", static_cast<std::uint64_t>(run));
  SimulationSpec spec;
  spec.n = design.n;
  spec.p = design.p;
  spec.k_true = uniform_int(rng, design.k_min, design.k_max);
  spec.n_latent_eval = design.n_latent_eval;
  spec.smoothing_widths.clear();
  for (std::size_t j = 0; j < design.p.size(); ++j)
    spec.smoothing_widths.push_back(design.smoothing_min +
                                    (design.smoothing_max - design.smoothing_min) * uniform01(rng));
  spec.corruption_fractions = design.corruption;
  spec.train_fraction = design.train_fraction;
  spec.seed = rng();
  return spec;
}

std::string MethodTag::label() const {
  return std::string(to_string(similarity)) + "-" + to_string(separation);
}

std::optional<MethodTag> MethodTag::parse(const std::string& text) {
  const auto dash = text.find('-');
  if (dash == std::string::npos) return std::nullopt;
  const auto s = parse_similarity(text.substr(0, dash));
  const auto sep = parse_separation(text.substr(dash + 1));
  if (!s || !sep) return std::nullopt;
  return MethodTag{*s, *sep};
}

std::vector<MethodTag> all_methods() {
  return {{Similarity::Recon, SeparationMethod::Svd},
          {Similarity::Recon, SeparationMethod::Ica},
          {Similarity::Acc, SeparationMethod::Svd},
          {Similarity::Acc, SeparationMethod::Ica}};
}

std::vector<StudyRow> run_study(const StudyDesign& design, const StudyOptions& options) {
  const std::size_t per_run = options.methods.size();
  std::vector<StudyRow> rows(static_cast<std::size_t>(options.runs) * per_run);

  auto run_one = [&](int run) {
    const SimulationSpec spec = draw_spec(design, options.seed, run);
    const SimulationData data = generate(spec);
    for (std::size_t mi = 0; mi < per_run; ++mi) {
      SimlrConfig config = options.base_config;
      config.similarity = options.methods[mi].similarity;
      config.separation = options.methods[mi].separation;
      config.seed = spec.seed;
      const MethodOutcome outcome = run_method(data, spec, config, options.harness);
      StudyRow& row = rows[static_cast<std::size_t>(run) * per_run + mi];
      row.run = run;
      row.seed = spec.seed;
      row.spec = spec;
      row.spec.corruption_fractions = data.corruption_fractions;
      row.method = options.methods[mi];
      row.scores = outcome.scores;
      row.iterations = outcome.iterations;
      row.converged = outcome.converged;
      row.seconds = outcome.seconds;
    }
  };

  std::atomic<int> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (int run = next++; run < options.runs; run = next++) {
      try {
        run_one(run);
      } catch (...) {
        // Stop handing out runs; the first failure is rethrown below.
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = options.runs;
      }
    }
  };

  const int jobs = std::max(1, std::min(options.jobs, options.runs));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace simlr
