#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "simlr/error.hpp"
#include "simlr/evaluation.hpp"
#include "simlr/graph.hpp"
#include "simlr/optimizer.hpp"
#include "simlr/preprocess.hpp"
#include "simlr/random.hpp"
#include "simlr/simulation.hpp"

#ifndef SIMLR_VERSION
#define SIMLR_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace simlr::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string absolute_path(const std::string& path) { return fs::absolute(path).lexically_normal().string(); }

std::vector<std::string> absolute_paths(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(absolute_path(p));
  return out;
}

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw UsageError("--out", "an output directory is required");
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("--out", "cannot create directory " + out);
  return dir;
}

Initialization init_from_flag(const std::string& text) {
  if (text == "ica") return Initialization::JointIca;
  if (text == "random") return Initialization::Random;
  return Initialization::JointSvd;
}

const EnergyReport& final_energy(const SimlrResult& r) {
  return r.trace.empty() ? r.initial_energy : r.trace.back().energy;
}

// Aligned, standardized views with graphs plus the solver configuration, as
// described by the fit flags.
struct PreparedFit {
  std::vector<RawMatrix> aligned;
  std::vector<DataView> views;
  SimlrConfig config;
  std::vector<std::string> dropped;
};

PreparedFit prepare_fit(const FitSettings& s) {
  if (s.views.size() < 2) throw UsageError("--views", "need at least two matrices");
  const std::size_t m = s.views.size();
  std::vector<RawMatrix> raw;
  for (const auto& path : s.views) {
    try {
      raw.push_back(read_matrix(path));
    } catch (const Error& e) {
      throw Error(e.code(), "reading " + path + " (" + e.what() + ")");
    }
  }
  PreparedFit prep;
  AlignResult aligned = align_views(raw);
  prep.aligned = std::move(aligned.views);
  prep.dropped = std::move(aligned.dropped);
  const Eigen::Index n = prep.aligned.front().rows();

  std::vector<double> gammas = s.sparseness;
  if (gammas.size() == 1) gammas.assign(m, gammas.front());
  if (gammas.size() != m)
    throw UsageError("--sparseness", "give one value or one per view (" + std::to_string(m) + ")");
  for (double g : gammas)
    if (!(g >= 0.0 && g < 1.0)) throw UsageError("--sparseness", "values must lie in [0, 1)");
  if (!s.graphs.empty() && s.graphs.size() != m)
    throw UsageError("--graphs", "need one graph file per view (" + std::to_string(m) + ")");

  for (std::size_t j = 0; j < m; ++j) {
    DataView view;
    view.x = standardize(prep.aligned[j]);
    view.name = "view" + std::to_string(j + 1);
    view.sparseness = gammas[j];
    const Eigen::Index p = view.x.cols();
    if (!s.graphs.empty()) {
      view.graph = RegularizationGraph::load(s.graphs[j]);
      if (view.graph.dim() != p)
        throw UsageError("--graphs", s.graphs[j] + " has dimension " + std::to_string(view.graph.dim()) +
                                         " but view " + std::to_string(j + 1) + " has " + std::to_string(p) +
                                         " predictors");
    } else if (s.graph_tau > 0.0) {
      view.graph = correlation_threshold_graph(view.x, s.graph_tau);
    } else if (p < 2) {
      view.graph = identity_graph(p);
    } else {
      const Eigen::Index k = s.graph_knn > 0 ? s.graph_knn : default_knn_k(p);
      if (k >= p)
        throw UsageError("--graph-knn", std::to_string(k) + " neighbours need more than " + std::to_string(p) +
                                            " predictors (view " + std::to_string(j + 1) + ")");
      view.graph = knn_graph(view.x, k);
    }
    prep.views.push_back(std::move(view));
  }

  if (s.k > n - 1)
    throw UsageError("--k", std::to_string(s.k) + " exceeds n-1 = " + std::to_string(n - 1) +
                                " for the " + std::to_string(n) + " aligned samples");
  SimlrConfig& c = prep.config;
  c.k = s.k;
  c.similarity = *parse_similarity(s.similarity);
  c.separation = *parse_separation(s.separation);
  c.norm = *parse_norm(s.norm);
  c.max_iterations = s.max_iter;
  c.tolerance = s.tol;
  c.initialization = init_from_flag(s.init);
  c.seed = s.seed;
  c.sparseness = gammas;
  c.validate(n, m);
  return prep;
}

std::string csv_header(const std::string& lead, const std::string& stem, std::size_t count) {
  std::string h = lead;
  for (std::size_t j = 1; j <= count; ++j) h += "," + stem + std::to_string(j);
  return h;
}

void write_fit_outputs(const fs::path& dir, const PreparedFit& prep, const SimlrResult& result) {
  const std::size_t m = prep.views.size();
  std::vector<std::string> comps;
  for (Eigen::Index c = 0; c < prep.config.k; ++c) comps.push_back("comp" + std::to_string(c + 1));
  for (std::size_t j = 0; j < m; ++j) {
    RawMatrix v{result.vs[j], prep.aligned[j].col_ids, comps};
    write_matrix(dir / ("v" + std::to_string(j + 1) + ".csv"), v);
    RawMatrix u{result.us[j], prep.aligned[j].row_ids, comps};
    write_matrix(dir / ("u" + std::to_string(j + 1) + ".csv"), u);
  }

  std::ostringstream trace;
  trace << csv_header(csv_header("iteration,total,similarity,regularization", "accepted_", m), "step_", m) << '\n';
  auto trace_row = [&](int iteration, const EnergyReport& e, const std::vector<bool>& accepted,
                       const std::vector<double>& steps) {
    trace << iteration << ',' << format_real(e.total) << ',' << format_real(e.similarity_sum()) << ','
          << format_real(e.regularization_sum());
    for (std::size_t j = 0; j < m; ++j) trace << ',' << (j < accepted.size() && accepted[j] ? 1 : 0);
    for (std::size_t j = 0; j < m; ++j) trace << ',' << format_real(j < steps.size() ? steps[j] : 0.0);
    trace << '\n';
  };
  trace_row(0, result.initial_energy, {}, {});
  for (const auto& rec : result.trace) trace_row(rec.iteration, rec.energy, rec.accepted, rec.step);
  write_text(dir / "trace.csv", trace.str());

  const EnergyReport& e = final_energy(result);
  std::ostringstream energy;
  energy << "component,similarity,regularization,total\n";
  for (std::size_t j = 0; j < m; ++j)
    energy << prep.views[j].name << ',' << format_real(e.per_view_similarity[j]) << ','
           << format_real(e.regularization[j]) << ','
           << format_real(e.per_view_similarity[j] + e.regularization[j]) << '\n';
  energy << "all," << format_real(e.similarity_sum()) << ',' << format_real(e.regularization_sum()) << ','
         << format_real(e.total) << '\n';
  write_text(dir / "energy.csv", energy.str());
}

void add_fit_settings(Manifest& mf, const FitSettings& s, const std::vector<double>& gammas) {
  mf.add("views", absolute_paths(s.views));
  mf.add("graphs", absolute_paths(s.graphs));
  mf.add("graph-knn", static_cast<long long>(s.graph_knn));
  mf.add("graph-tau", s.graph_tau);
  mf.add("k", static_cast<long long>(s.k));
  mf.add("similarity", s.similarity);
  mf.add("separation", s.separation);
  mf.add("norm", s.norm);
  mf.add("sparseness", gammas);
  mf.add("max-iter", static_cast<long long>(s.max_iter));
  mf.add("tol", s.tol);
  mf.add("init", s.init);
  mf.add("seed", std::to_string(s.seed));
}

double read_observed_similarity(const fs::path& energy_csv) {
  std::ifstream in(energy_csv, std::ios::binary);
  if (!in) throw UsageError("--fit", "cannot read " + energy_csv.string() + "; run `simlr fit` first");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("all,", 0) != 0) continue;
    const auto fields = split_list(line);
    if (fields.size() >= 2) return std::stod(fields[1]);
  }
  throw UsageError("--fit", energy_csv.string() + " has no 'all' row");
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

int cmd_fit(const FitSettings& s, std::ostream& out) {
  const auto start = Clock::now();
  const PreparedFit prep = prepare_fit(s);
  const fs::path dir = prepare_out(s.out);
  const SimlrResult result = fit(prep.views, prep.config);
  write_fit_outputs(dir, prep, result);

  Manifest mf;
  mf.add("command", std::string("fit"));
  mf.add("version", std::string(SIMLR_VERSION));
  add_fit_settings(mf, s, prep.config.sparseness);
  mf.add("out", absolute_path(s.out));
  mf.add("samples", static_cast<long long>(prep.views.front().samples()));
  mf.add("dropped-samples", static_cast<long long>(prep.dropped.size()));
  mf.add("iterations", static_cast<long long>(result.iterations));
  mf.add("converged", std::string(result.converged ? "true" : "false"));
  mf.add("wall-clock-seconds", seconds_since(start));
  mf.write(dir / "manifest.txt");

  const EnergyReport& e = final_energy(result);
  out << "fit: " << prep.views.size() << " views, " << prep.views.front().samples() << " samples";
  if (!prep.dropped.empty()) out << " (" << prep.dropped.size() << " unmatched ids dropped)";
  out << "\n"
      << (result.converged ? "converged" : "stopped at max-iter") << " after " << result.iterations
      << " iterations; total energy " << format_real(e.total) << " (similarity " << format_real(e.similarity_sum())
      << ", regularization " << format_real(e.regularization_sum()) << ")\n"
      << "outputs written to " << dir.string() << "\n";
  return 0;
}

int cmd_simulate(const SimulateSettings& s, std::ostream& out) {
  const auto start = Clock::now();
  if (s.runs < 1) throw UsageError("--runs", "must be at least 1");
  if (s.p.size() < 2) throw UsageError("--p", "need at least two views");
  if (!s.corruption.empty() && s.corruption.size() != s.p.size())
    throw UsageError("--corruption", "give one fraction per view (" + std::to_string(s.p.size()) + ")");
  if (s.k_min < 1 || s.k_min > s.k_max) throw UsageError("--k-min", "need 1 <= k-min <= k-max");
  if (s.latents < 1 || s.latents > s.k_min) throw UsageError("--latents", "must lie in [1, k-min]");
  if (!(s.smoothing_min > 0.0 && s.smoothing_min <= s.smoothing_max))
    throw UsageError("--smoothing-min", "need 0 < smoothing-min <= smoothing-max");
  if (!(s.sparseness >= 0.0 && s.sparseness < 1.0)) throw UsageError("--sparseness", "must lie in [0, 1)");
  if (s.permutations < 0) throw UsageError("--permutations", "must not be negative");

  StudyDesign design;
  design.n = s.n;
  design.p.assign(s.p.begin(), s.p.end());
  design.k_min = s.k_min;
  design.k_max = s.k_max;
  design.n_latent_eval = s.latents;
  design.smoothing_min = s.smoothing_min;
  design.smoothing_max = s.smoothing_max;
  design.corruption = s.corruption;
  design.train_fraction = s.train_fraction;

  StudyOptions options;
  options.runs = s.runs;
  options.seed = s.seed;
  options.methods.clear();
  for (const auto& label : s.methods) {
    const auto tag = MethodTag::parse(label);
    if (!tag) throw UsageError("--methods", "unknown method '" + label + "' (use recon|acc - svd|ica)");
    options.methods.push_back(*tag);
  }
  if (options.methods.empty()) throw UsageError("--methods", "need at least one method");
  options.harness.graph_k = s.graph_knn;
  options.harness.rank = s.k;
  options.harness.sparseness = s.sparseness;
  options.base_config.norm = *parse_norm(s.norm);
  options.base_config.max_iterations = s.max_iter;
  options.base_config.tolerance = s.tol;
  options.jobs = s.jobs;

  // Spec and validation errors surface before any fitting starts.
  for (int run = 0; run < s.runs; ++run) draw_spec(design, s.seed, run).validate();

  const fs::path dir = prepare_out(s.out);
  const std::vector<StudyRow> rows = run_study(design, options);
  const std::size_t m = s.p.size();
  const auto targets = static_cast<std::size_t>(s.latents);

  std::ostringstream summary, timing;
  summary << csv_header(csv_header("run,seed,n", "p", m) + ",K", "corruption_", m)
          << ",method,target,train_r2,test_r2,iterations,converged\n";
  timing << "run,method,seconds\n";
  for (const auto& row : rows) {
    for (std::size_t t = 0; t < targets; ++t) {
      summary << row.run + 1 << ',' << row.seed << ',' << row.spec.n;
      for (auto pj : row.spec.p) summary << ',' << pj;
      summary << ',' << row.spec.k_true;
      for (double f : row.spec.corruption_fractions) summary << ',' << format_real(f);
      summary << ',' << row.method.label() << ',' << t + 1 << ',' << format_real(row.scores[t].train_r2) << ','
              << format_real(row.scores[t].test_r2) << ',' << row.iterations << ',' << (row.converged ? 1 : 0)
              << '\n';
    }
    timing << row.run + 1 << ',' << row.method.label() << ',' << format_real(row.seconds) << '\n';
  }
  write_text(dir / "summary.csv", summary.str());
  write_text(dir / "timing.csv", timing.str());

  // Per-method score columns, in run order.
  const std::size_t n_methods = options.methods.size();
  auto test_scores = [&](std::size_t method, std::size_t target) {
    std::vector<double> v;
    for (std::size_t r = 0; r < static_cast<std::size_t>(s.runs); ++r)
      v.push_back(rows[r * n_methods + method].scores[target].test_r2);
    return v;
  };
  auto train_scores = [&](std::size_t method, std::size_t target) {
    std::vector<double> v;
    for (std::size_t r = 0; r < static_cast<std::size_t>(s.runs); ++r)
      v.push_back(rows[r * n_methods + method].scores[target].train_r2);
    return v;
  };

  std::ostringstream means;
  means << "method,target,runs,mean_train_r2,mean_test_r2\n";
  for (std::size_t mi = 0; mi < n_methods; ++mi)
    for (std::size_t t = 0; t < targets; ++t) {
      const double test = mean(test_scores(mi, t));
      means << options.methods[mi].label() << ',' << t + 1 << ',' << s.runs << ','
            << format_real(mean(train_scores(mi, t))) << ',' << format_real(test) << '\n';
      out << options.methods[mi].label() << " target " << t + 1 << ": mean test R2 = " << format_real(test)
          << " over " << s.runs << " runs\n";
    }
  write_text(dir / "means.csv", means.str());

  if (s.runs >= 2 && n_methods >= 2) {
    std::ostringstream cmp;
    cmp << "target,method_a,method_b,runs,mean_diff,t,p,dof,degenerate\n";
    for (std::size_t t = 0; t < targets; ++t)
      for (std::size_t a = 0; a < n_methods; ++a)
        for (std::size_t b = a + 1; b < n_methods; ++b) {
          const ComparisonReport r = paired_t_test(test_scores(a, t), test_scores(b, t));
          cmp << t + 1 << ',' << r.summary_line(options.methods[a].label(), options.methods[b].label()) << '\n';
        }
    write_text(dir / "comparisons.csv", cmp.str());
  }

  if (s.runs >= 10) {
    std::ostringstream sens;
    sens << csv_header("method,target,intercept", "coef_", m) << ",coef_sum,f,p,r2\n";
    std::vector<std::vector<double>> fractions;
    for (int r = 0; r < s.runs; ++r)
      fractions.push_back(rows[static_cast<std::size_t>(r) * n_methods].spec.corruption_fractions);
    for (std::size_t mi = 0; mi < n_methods; ++mi)
      for (std::size_t t = 0; t < targets; ++t) {
        const SensitivityReport rep = corruption_sensitivity(test_scores(mi, t), fractions);
        sens << options.methods[mi].label() << ',' << t + 1 << ',' << format_real(rep.intercept);
        for (Eigen::Index j = 0; j < rep.coefficients.size(); ++j) sens << ',' << format_real(rep.coefficients(j));
        sens << ',' << format_real(rep.coefficients.sum()) << ',' << format_real(rep.f_statistic) << ','
             << format_real(rep.p_value) << ',' << format_real(rep.r2) << '\n';
      }
    write_text(dir / "sensitivity.csv", sens.str());
  } else {
    out << "sensitivity regression skipped: needs at least 10 runs\n";
  }

  if (s.permutations > 0) {
    const int perm_runs = s.perm_runs > 0 ? std::min(s.perm_runs, s.runs) : s.runs;
    const int tasks = perm_runs * static_cast<int>(n_methods);
    std::vector<std::vector<std::vector<double>>> nulls(static_cast<std::size_t>(tasks));
    parallel_for(tasks, s.jobs, [&](int task) {
      const int run = task / static_cast<int>(n_methods);
      const std::size_t mi = static_cast<std::size_t>(task) % n_methods;
      const SimulationSpec spec = draw_spec(design, s.seed, run);
      const SimulationData data = generate(spec);
      SimlrConfig config = options.base_config;
      config.similarity = options.methods[mi].similarity;
      config.separation = options.methods[mi].separation;
      config.seed = spec.seed;
      auto& slot = nulls[static_cast<std::size_t>(task)];
      for (std::size_t t = 0; t < targets; ++t)
        slot.push_back(permutation_baseline(data, spec, config, options.harness, s.permutations, spec.seed,
                                            static_cast<Eigen::Index>(t)));
    });

    std::ostringstream null, null_summary;
    null << "run,method,target,permutation,test_r2\n";
    null_summary << "run,method,target,observed_test_r2,null_mean,null_max,observed_above_max\n";
    std::vector<double> all_null;
    for (int task = 0; task < tasks; ++task) {
      const std::size_t run = static_cast<std::size_t>(task) / n_methods, mi = static_cast<std::size_t>(task) % n_methods;
      const StudyRow& row = rows[run * n_methods + mi];
      for (std::size_t t = 0; t < targets; ++t) {
        const auto& values = nulls[static_cast<std::size_t>(task)][t];
        for (std::size_t k = 0; k < values.size(); ++k)
          null << run + 1 << ',' << row.method.label() << ',' << t + 1 << ',' << k + 1 << ','
               << format_real(values[k]) << '\n';
        const double max = *std::max_element(values.begin(), values.end());
        const double observed = row.scores[t].test_r2;
        null_summary << run + 1 << ',' << row.method.label() << ',' << t + 1 << ',' << format_real(observed) << ','
                     << format_real(mean(values)) << ',' << format_real(max) << ',' << (observed > max ? 1 : 0)
                     << '\n';
        all_null.insert(all_null.end(), values.begin(), values.end());
      }
    }
    write_text(dir / "null.csv", null.str());
    write_text(dir / "null_summary.csv", null_summary.str());
    out << "permutation null: mean test R2 = " << format_real(mean(all_null)) << " over " << all_null.size()
        << " fits\n";
  }

  Manifest mf;
  mf.add("command", std::string("simulate"));
  mf.add("version", std::string(SIMLR_VERSION));
  mf.add("runs", static_cast<long long>(s.runs));
  mf.add("seed", std::to_string(s.seed));
  mf.add("methods", s.methods);
  mf.add("permutations", static_cast<long long>(s.permutations));
  mf.add("perm-runs", static_cast<long long>(s.perm_runs));
  mf.add("jobs", static_cast<long long>(s.jobs));
  mf.add("n", static_cast<long long>(s.n));
  mf.add("p", s.p);
  mf.add("k-min", static_cast<long long>(s.k_min));
  mf.add("k-max", static_cast<long long>(s.k_max));
  mf.add("latents", static_cast<long long>(s.latents));
  mf.add("corruption", s.corruption);
  mf.add("smoothing-min", s.smoothing_min);
  mf.add("smoothing-max", s.smoothing_max);
  mf.add("train-fraction", s.train_fraction);
  mf.add("k", static_cast<long long>(s.k));
  mf.add("graph-knn", static_cast<long long>(s.graph_knn));
  mf.add("norm", s.norm);
  mf.add("sparseness", s.sparseness);
  mf.add("max-iter", static_cast<long long>(s.max_iter));
  mf.add("tol", s.tol);
  mf.add("out", absolute_path(s.out));
  mf.add("wall-clock-seconds", seconds_since(start));
  mf.write(dir / "manifest.txt");
  out << "outputs written to " << dir.string() << "\n";
  return 0;
}

int cmd_permtest(const PermtestSettings& s, const FitSettings& fit_settings, std::ostream& out) {
  const auto start = Clock::now();
  if (s.permutations < 1) throw UsageError("--permutations", "must be at least 1");
  const double observed = read_observed_similarity(fs::path(s.fit) / "energy.csv");
  const PreparedFit prep = prepare_fit(fit_settings);
  const fs::path dir = prepare_out(s.out);

  std::vector<double> null(static_cast<std::size_t>(s.permutations));
  parallel_for(s.permutations, s.jobs, [&](int perm) {
    Rng rng = substream(s.seed, "perm", static_cast<std::uint64_t>(perm));
    std::vector<DataView> views = prep.views;
    for (auto& view : views) {
      std::vector<Eigen::Index> order(static_cast<std::size_t>(view.samples()));
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
      view.x = select_rows(view.x, order);
    }
    null[static_cast<std::size_t>(perm)] = final_energy(fit(views, prep.config)).similarity_sum();
  });

  // Lower similarity energy is a better fit for both similarity measures.
  const auto at_or_below = std::count_if(null.begin(), null.end(), [&](double v) { return v <= observed; });
  const double p_value = static_cast<double>(1 + at_or_below) / static_cast<double>(s.permutations + 1);

  std::ostringstream null_csv, report;
  null_csv << "permutation,similarity\n";
  for (std::size_t i = 0; i < null.size(); ++i) null_csv << i + 1 << ',' << format_real(null[i]) << '\n';
  write_text(dir / "null.csv", null_csv.str());
  report << "observed_similarity,permutations,null_at_or_below,p_value\n"
         << format_real(observed) << ',' << s.permutations << ',' << at_or_below << ',' << format_real(p_value)
         << '\n';
  write_text(dir / "permtest.csv", report.str());

  Manifest mf;
  mf.add("command", std::string("permtest"));
  mf.add("version", std::string(SIMLR_VERSION));
  mf.add("fit", absolute_path(s.fit));
  mf.add("permutations", static_cast<long long>(s.permutations));
  mf.add("seed", std::to_string(s.seed));
  mf.add("jobs", static_cast<long long>(s.jobs));
  mf.add("out", absolute_path(s.out));
  // The fit configuration the null was computed under, for the record.
  mf.add("fit-views", absolute_paths(fit_settings.views));
  mf.add("fit-k", static_cast<long long>(fit_settings.k));
  mf.add("fit-similarity", fit_settings.similarity);
  mf.add("fit-separation", fit_settings.separation);
  mf.add("fit-seed", std::to_string(fit_settings.seed));
  mf.add("wall-clock-seconds", seconds_since(start));
  mf.write(dir / "manifest.txt");

  out << "observed similarity " << format_real(observed) << "; " << at_or_below << " of " << s.permutations
      << " permuted fits at or below; empirical p = " << format_real(p_value) << "\n";
  return 0;
}

}  // namespace simlr::cli
