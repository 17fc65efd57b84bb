#include "simlr/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "simlr/error.hpp"
#include "simlr/random.hpp"

namespace simlr {

namespace {

constexpr int kHalvings = 20;

// Everything the line search needs to score the current iterate.
struct State {
  std::vector<Eigen::MatrixXd> vs;
  std::vector<Eigen::MatrixXd> us;
  std::vector<BasisMatrix> bases;
  std::vector<double> similarity;
  std::vector<double> regularization;
  double total = 0.0;

  EnergyReport report() const {
    EnergyReport r;
    r.per_view_similarity = similarity;
    r.regularization = regularization;
    r.total = total;
    return r;
  }
};

Eigen::MatrixXd stack_without(const std::vector<Eigen::MatrixXd>& embeddings, std::size_t skip) {
  const Eigen::Index n = embeddings.front().rows();
  Eigen::Index cols = 0;
  for (std::size_t j = 0; j < embeddings.size(); ++j)
    if (j != skip) cols += embeddings[j].cols();
  Eigen::MatrixXd stack(n, cols);
  Eigen::Index at = 0;
  for (std::size_t j = 0; j < embeddings.size(); ++j) {
    if (j == skip) continue;
    stack.middleCols(at, embeddings[j].cols()) = embeddings[j];
    at += embeddings[j].cols();
  }
  return stack;
}

BasisMatrix basis_for(const std::vector<Eigen::MatrixXd>& embeddings, std::size_t view, const SimlrConfig& config) {
  return separate(stack_without(embeddings, view), config.k, config.separation, config.seed);
}

std::vector<double> sparseness_of(const std::vector<DataView>& views, const SimlrConfig& config) {
  std::vector<double> gammas;
  for (std::size_t i = 0; i < views.size(); ++i)
    gammas.push_back(config.sparseness.empty() ? views[i].sparseness : config.sparseness[i]);
  return gammas;
}

State make_state(const std::vector<DataView>& views, std::vector<Eigen::MatrixXd> vs, const SimlrConfig& config,
                 const std::vector<double>& gammas) {
  State s;
  s.vs = std::move(vs);
  for (std::size_t i = 0; i < views.size(); ++i) s.us.push_back(views[i].x * s.vs[i]);
  s.bases = compute_bases(s.us, config);
  s.total = 0.0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    s.similarity.push_back(similarity_energy(config.similarity, views[i].x, s.bases[i].u_tilde, s.vs[i]));
    s.regularization.push_back(regularization_term(s.vs[i], views[i].graph, gammas[i], config.norm));
    s.total += s.similarity.back() + s.regularization.back();
  }
  return s;
}

// Full objective after replacing V_i: the bases of every other view are
// rebuilt from the new embedding.  Returns nullopt when the candidate makes
// a basis rank deficient or an embedding degenerate.
std::optional<State> try_candidate(const std::vector<DataView>& views, const State& current, std::size_t i,
                                   Eigen::MatrixXd v_new, const SimlrConfig& config,
                                   const std::vector<double>& gammas) {
  State next = current;
  try {
    next.us[i] = views[i].x * v_new;
    next.vs[i] = std::move(v_new);
    for (std::size_t j = 0; j < views.size(); ++j) {
      if (j != i) next.bases[j] = basis_for(next.us, j, config);
    }
    next.total = 0.0;
    for (std::size_t j = 0; j < views.size(); ++j) {
      if (j != i) {
        next.similarity[j] = similarity_energy(config.similarity, views[j].x, next.bases[j].u_tilde, next.vs[j]);
      }
    }
    next.similarity[i] = similarity_energy(config.similarity, views[i].x, next.bases[i].u_tilde, next.vs[i]);
    next.regularization[i] = regularization_term(next.vs[i], views[i].graph, gammas[i], config.norm);
    for (std::size_t j = 0; j < views.size(); ++j) next.total += next.similarity[j] + next.regularization[j];
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RankDeficient || e.code() == ErrorCode::DegenerateEmbedding) return std::nullopt;
    throw;
  }
  if (!std::isfinite(next.total)) return std::nullopt;
  return next;
}

}  // namespace

void SimlrConfig::validate(Eigen::Index n, std::size_t view_count) const {
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be positive");
  if (k > n - 1)
    throw Error(ErrorCode::InvalidConfig, "k=" + std::to_string(k) + " exceeds n-1=" + std::to_string(n - 1));
  if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidConfig, "tolerance must be positive");
  if (max_iterations < 0) throw Error(ErrorCode::InvalidConfig, "max_iterations must be non-negative");
  if (!sparseness.empty()) {
    if (sparseness.size() != view_count)
      throw Error(ErrorCode::InvalidConfig, "need one sparseness value per view");
    for (double g : sparseness)
      if (!(g >= 0.0 && g < 1.0)) throw Error(ErrorCode::InvalidConfig, "sparseness must lie in [0, 1)");
  }
  if (!initial_steps.empty()) {
    if (initial_steps.size() != view_count) throw Error(ErrorCode::InvalidConfig, "need one initial step per view");
    for (double e : initial_steps)
      if (!(e > 0.0) || !std::isfinite(e)) throw Error(ErrorCode::InvalidConfig, "initial steps must be positive");
  }
  if (initialization == Initialization::Provided && provided.size() != view_count)
    throw Error(ErrorCode::InvalidConfig, "provided initialization needs one matrix per view");
}

Eigen::Index keep_count(Eigen::Index p, double gamma) {
  // The slack keeps products like (1 - 0.7) * 10 from rounding up to 4.
  const double target = std::ceil((1.0 - gamma) * static_cast<double>(p) - 1e-9);
  return std::clamp<Eigen::Index>(static_cast<Eigen::Index>(target), 1, p);
}

Eigen::VectorXd project(const Eigen::VectorXd& v, const RegularizationGraph& g, double gamma, SparsityNorm norm) {
  const Eigen::VectorXd w = g.apply(v);
  const Eigen::Index p = w.size();
  const Eigen::Index keep = keep_count(p, gamma);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(w(a)) > std::abs(w(b)); });

  const double cut = keep < p ? std::abs(w(order[static_cast<std::size_t>(keep)])) : 0.0;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
  double positive = 0.0, negative = 0.0;
  for (Eigen::Index t = 0; t < keep; ++t) {
    const Eigen::Index j = order[static_cast<std::size_t>(t)];
    double value = w(j);
    if (norm == SparsityNorm::L1) value = value > 0.0 ? std::max(0.0, value - cut) : std::min(0.0, value + cut);
    out(j) = value;
    if (value > 0.0) positive += value;
    else negative -= value;
  }
  if (positive >= negative) out = out.cwiseMax(0.0);
  else out = out.cwiseMin(0.0);

  if ((out.array() == 0.0).all()) out(order.front()) = w(order.front());
  return out;
}

Eigen::MatrixXd project_columns(const Eigen::MatrixXd& v, const RegularizationGraph& g, double gamma,
                                SparsityNorm norm) {
  Eigen::MatrixXd out(v.rows(), v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) out.col(c) = project(v.col(c), g, gamma, norm);
  return out;
}

std::vector<BasisMatrix> compute_bases(const std::vector<Eigen::MatrixXd>& embeddings, const SimlrConfig& config) {
  std::vector<BasisMatrix> bases;
  bases.reserve(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) bases.push_back(basis_for(embeddings, i, config));
  return bases;
}

std::vector<Eigen::MatrixXd> initialize(const std::vector<DataView>& views, const SimlrConfig& config) {
  validate_views(views);
  config.validate(views.front().samples(), views.size());
  const auto gammas = sparseness_of(views, config);

  std::vector<Eigen::MatrixXd> raw;
  switch (config.initialization) {
    case Initialization::JointSvd:
    case Initialization::JointIca: {
      Eigen::Index total = 0;
      for (const auto& v : views) total += v.predictors();
      Eigen::MatrixXd joint(views.front().samples(), total);
      Eigen::Index at = 0;
      for (const auto& v : views) {
        joint.middleCols(at, v.predictors()) = v.x;
        at += v.predictors();
      }
      const auto method =
          config.initialization == Initialization::JointSvd ? SeparationMethod::Svd : SeparationMethod::Ica;
      const Eigen::MatrixXd w = separate(joint, config.k, method, config.seed).u_tilde;
      for (const auto& v : views) raw.push_back(v.x.transpose() * w);
      break;
    }
    case Initialization::Random: {
      for (std::size_t i = 0; i < views.size(); ++i) {
        Rng rng = substream(config.seed, "init", i);
        raw.push_back(standard_normal(views[i].predictors(), config.k, rng));
      }
      break;
    }
    case Initialization::Provided: {
      for (std::size_t i = 0; i < views.size(); ++i) {
        const auto& m = config.provided[i];
        if (m.rows() != views[i].predictors() || m.cols() != config.k)
          throw Error(ErrorCode::ShapeMismatch, "provided matrix " + std::to_string(i) + " is " +
                                                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                                    ", expected " + std::to_string(views[i].predictors()) + "x" +
                                                    std::to_string(config.k));
        if (!m.allFinite()) throw Error(ErrorCode::InvalidConfig, "provided matrix has non-finite entries");
        raw.push_back(m);
      }
      break;
    }
  }

  std::vector<Eigen::MatrixXd> vs;
  for (std::size_t i = 0; i < views.size(); ++i)
    vs.push_back(project_columns(raw[i], views[i].graph, gammas[i], config.norm));
  return vs;
}

SimlrResult fit(const std::vector<DataView>& views, const SimlrConfig& config) {
  const auto gammas = sparseness_of(views, config);
  State state = make_state(views, initialize(views, config), config, gammas);
  const std::size_t m = views.size();

  SimlrResult result;
  result.initial_energy = state.report();
  result.step_sizes.assign(m, 0.0);
  std::vector<bool> step_known(m, false);
  if (!config.initial_steps.empty()) {
    result.step_sizes = config.initial_steps;
    step_known.assign(m, true);
  }

  int quiet_iterations = 0;
  for (int it = 1; it <= config.max_iterations; ++it) {
    IterationRecord record;
    record.iteration = it;
    record.accepted.assign(m, false);
    record.step.assign(m, 0.0);
    const double before = state.total;

    for (std::size_t i = 0; i < m; ++i) {
      const Eigen::MatrixXd grad =
          similarity_energy_gradient(config.similarity, views[i].x, state.bases[i].u_tilde, state.vs[i]);
      const double grad_max = grad.cwiseAbs().maxCoeff();
      if (!(grad_max > 0.0) || !std::isfinite(grad_max)) continue;
      if (!step_known[i]) {
        result.step_sizes[i] = 1.0 / grad_max;
        step_known[i] = true;
      }

      double eps = result.step_sizes[i];
      for (int attempt = 0; attempt <= kHalvings; ++attempt, eps *= 0.5) {
        Eigen::MatrixXd candidate =
            project_columns(state.vs[i] - eps * grad, views[i].graph, gammas[i], config.norm);
        auto next = try_candidate(views, state, i, std::move(candidate), config, gammas);
        if (next && next->total < state.total) {
          state = std::move(*next);
          record.accepted[i] = true;
          record.step[i] = eps;
          result.step_sizes[i] = 2.0 * eps;
          break;
        }
      }
    }

    result.iterations = it;
    const bool any = std::any_of(record.accepted.begin(), record.accepted.end(), [](bool a) { return a; });
    if (!any) {
      result.converged = true;
      break;
    }
    record.energy = state.report();
    result.trace.push_back(std::move(record));

    const double relative = (before - state.total) / std::max(std::abs(before), 1e-300);
    quiet_iterations = relative < config.tolerance ? quiet_iterations + 1 : 0;
    if (quiet_iterations >= 2) {
      result.converged = true;
      break;
    }
  }

  result.vs = std::move(state.vs);
  result.us = std::move(state.us);
  result.bases = std::move(state.bases);
  return result;
}

const char* to_string(Similarity s) { return s == Similarity::Recon ? "recon" : "acc"; }
const char* to_string(SeparationMethod s) { return s == SeparationMethod::Svd ? "svd" : "ica"; }
const char* to_string(SparsityNorm s) { return s == SparsityNorm::L0 ? "l0" : "l1"; }
const char* to_string(Initialization s) {
  switch (s) {
    case Initialization::JointSvd: return "joint_svd";
    case Initialization::JointIca: return "joint_ica";
    case Initialization::Random: return "random";
    case Initialization::Provided: return "provided";
  }
  return "joint_svd";
}

std::optional<Similarity> parse_similarity(const std::string& text) {
  if (text == "recon") return Similarity::Recon;
  if (text == "acc") return Similarity::Acc;
  return std::nullopt;
}

std::optional<SeparationMethod> parse_separation(const std::string& text) {
  if (text == "svd") return SeparationMethod::Svd;
  if (text == "ica") return SeparationMethod::Ica;
  return std::nullopt;
}

std::optional<SparsityNorm> parse_norm(const std::string& text) {
  if (text == "l0") return SparsityNorm::L0;
  if (text == "l1") return SparsityNorm::L1;
  return std::nullopt;
}

std::optional<Initialization> parse_initialization(const std::string& text) {
  if (text == "joint_svd") return Initialization::JointSvd;
  if (text == "joint_ica") return Initialization::JointIca;
  if (text == "random") return Initialization::Random;
  if (text == "provided") return Initialization::Provided;
  return std::nullopt;
}

}  // namespace simlr
