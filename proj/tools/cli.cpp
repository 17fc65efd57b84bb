#include "cli.hpp"

#include <algorithm>
#include <exception>

#include <CLI11.hpp>

#include "commands.hpp"
#include "settings.hpp"
#include "simlr/error.hpp"

namespace simlr::cli {

namespace {

const char* kConfigHelp =
    "Config file: --config FILE reads flat key=value lines ('#' starts a comment).\n"
    "Keys are the long flag names without dashes, e.g.\n"
    "    k=3\n"
    "    similarity=acc\n"
    "    views=a.csv,b.csv\n"
    "    sparseness=0.5,0.7\n"
    "List values are comma-separated (or the key may repeat).  A flag given on\n"
    "the command line overrides the file.  Every run writes manifest.txt to its\n"
    "--out directory; `simlr <command> --config OUT/manifest.txt` reruns it.";

bool is_command(const std::string& s) { return s == "fit" || s == "simulate" || s == "permtest"; }

bool given_on_command_line(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Splices config-file entries into the argument list (after the command
// name) for every key the command line does not set itself.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.empty() || !is_command(args.front())) return args;
  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::vector<std::string> injected;
  for (const auto& [key, value] : read_config_file(config_path)) {
    if (key == "command") {
      if (value != args.front())
        throw UsageError("--config", config_path + " was written by '" + value + "', not '" + args.front() + "'");
      continue;
    }
    if (key == "config" || is_informational_key(key) || given_on_command_line(args, key)) continue;
    const auto values = split_list(value);
    if (values.empty()) continue;
    injected.push_back("--" + key);
    injected.insert(injected.end(), values.begin(), values.end());
  }
  std::vector<std::string> expanded{args.front()};
  expanded.insert(expanded.end(), injected.begin(), injected.end());
  expanded.insert(expanded.end(), args.begin() + 1, args.end());
  return expanded;
}

void add_config_option(CLI::App* sub, std::string& target) {
  sub->add_option("--config", target, "Flat key=value settings file (flags override it)");
}

void add_fit_options(CLI::App* sub, FitSettings& s, std::string& config) {
  sub->add_option("--views", s.views, "Delimited matrix files, one per view (ids in first row/column)")
      ->required();
  sub->add_option("--graphs", s.graphs, "Edge-list graph files, one per view (overrides the graph builders)");
  sub->add_option("--graph-knn", s.graph_knn, "Neighbours in the correlation KNN graph (0: round(0.025 p))")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--graph-tau", s.graph_tau, "Use a |correlation| >= T threshold graph instead of KNN")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--k", s.k, "Number of components")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--similarity", s.similarity, "Similarity energy")
      ->check(CLI::IsMember({"recon", "acc"}))
      ->capture_default_str();
  sub->add_option("--separation", s.separation, "Source separation for the shared basis")
      ->check(CLI::IsMember({"svd", "ica"}))
      ->capture_default_str();
  sub->add_option("--norm", s.norm, "Sparsity norm")->check(CLI::IsMember({"l0", "l1"}))->capture_default_str();
  sub->add_option("--sparseness", s.sparseness, "Fraction of each feature column zeroed; one value or one per view")
      ->capture_default_str();
  sub->add_option("--max-iter", s.max_iter, "Maximum sweeps over the views")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--tol", s.tol, "Relative energy decrease counted as converged")->capture_default_str();
  sub->add_option("--init", s.init, "Initial feature matrices")
      ->check(CLI::IsMember({"svd", "ica", "random"}))
      ->capture_default_str();
  sub->add_option("--seed", s.seed, "Seed for every random draw")->capture_default_str();
  sub->add_option("--out", s.out, "Output directory")->required();
  add_config_option(sub, config);
}

void add_simulate_options(CLI::App* sub, SimulateSettings& s, std::string& config) {
  sub->add_option("--runs", s.runs, "Simulated data sets")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--seed", s.seed, "Seed for the whole study")->capture_default_str();
  sub->add_option("--methods", s.methods, "Method variants: recon-svd recon-ica acc-svd acc-ica")
      ->capture_default_str();
  sub->add_option("--permutations", s.permutations, "Row-permuted refits per run and method (0: none)")
      ->capture_default_str();
  sub->add_option("--perm-runs", s.perm_runs, "Permute only the first N runs (0: all)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--jobs", s.jobs, "Worker threads for independent runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--n", s.n, "Samples per data set")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--p", s.p, "Predictors per view")->capture_default_str();
  sub->add_option("--k-min", s.k_min, "Smallest true rank drawn")->capture_default_str();
  sub->add_option("--k-max", s.k_max, "Largest true rank drawn")->capture_default_str();
  sub->add_option("--latents", s.latents, "Latent signals scored (1 or 2)")->capture_default_str();
  sub->add_option("--corruption", s.corruption, "Fixed corruption fraction per view (default: uniform 0.1-0.9)")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--smoothing-min", s.smoothing_min, "Smallest smoothing width (fraction of p)")
      ->capture_default_str();
  sub->add_option("--smoothing-max", s.smoothing_max, "Largest smoothing width (fraction of p)")
      ->capture_default_str();
  sub->add_option("--train-fraction", s.train_fraction, "Share of rows used for fitting")->capture_default_str();
  sub->add_option("--k", s.k, "Components fitted (0: the run's true rank)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--graph-knn", s.graph_knn, "Neighbours in the KNN graph (0: round(0.025 p))")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--norm", s.norm, "Sparsity norm")->check(CLI::IsMember({"l0", "l1"}))->capture_default_str();
  sub->add_option("--sparseness", s.sparseness, "Fraction of each feature column zeroed")->capture_default_str();
  sub->add_option("--max-iter", s.max_iter, "Maximum sweeps per fit")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--tol", s.tol, "Relative energy decrease counted as converged")->capture_default_str();
  sub->add_option("--out", s.out, "Output directory")->required();
  add_config_option(sub, config);
}

void add_permtest_options(CLI::App* sub, PermtestSettings& s, std::string& config) {
  sub->add_option("--fit", s.fit, "Output directory of a previous `simlr fit`")->required();
  sub->add_option("--permutations", s.permutations, "Row-permuted refits (at least 1)")
      ->required()
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", s.seed, "Seed for the permutations")->capture_default_str();
  sub->add_option("--jobs", s.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--out", s.out, "Output directory")->required();
  add_config_option(sub, config);
}

struct Parsed {
  FitSettings fit;
  SimulateSettings simulate;
  PermtestSettings permtest;
  std::string config;
};

void build_app(CLI::App& app, Parsed& parsed) {
  app.require_subcommand(1);
  app.footer(kConfigHelp);
  auto* fit_cmd = app.add_subcommand("fit", "Fit sparse multi-view components to matrix files");
  add_fit_options(fit_cmd, parsed.fit, parsed.config);
  auto* sim_cmd = app.add_subcommand("simulate", "Run the simulated signal-recovery study");
  add_simulate_options(sim_cmd, parsed.simulate, parsed.config);
  auto* perm_cmd = app.add_subcommand("permtest", "Permutation test of a fitted solution");
  add_permtest_options(perm_cmd, parsed.permtest, parsed.config);
  for (auto* sub : {fit_cmd, sim_cmd, perm_cmd}) sub->footer(kConfigHelp);
}

void parse_into(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> reversed = expand_config(args);
  std::reverse(reversed.begin(), reversed.end());
  app.parse(reversed);
}

FitSettings load_fit_manifest(const std::string& fit_dir) {
  const std::string path = fit_dir + "/manifest.txt";
  CLI::App app{"simlr", "simlr"};
  Parsed parsed;
  build_app(app, parsed);
  try {
    parse_into(app, {"fit", "--config", path});
  } catch (const CLI::ParseError& e) {
    throw UsageError("--fit", path + " is not a usable fit manifest (" + e.what() + ")");
  } catch (const UsageError& e) {
    throw UsageError("--fit", path + " is not a usable fit manifest (" + e.what() + ")");
  }
  return parsed.fit;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"simlr: sparse multi-view latent representations", "simlr"};
  Parsed parsed;
  build_app(app, parsed);
  try {
    parse_into(app, args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand("fit")) return cmd_fit(parsed.fit, out);
    if (app.got_subcommand("simulate")) return cmd_simulate(parsed.simulate, out);
    return cmd_permtest(parsed.permtest, load_fit_manifest(parsed.permtest.fit), out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace simlr::cli
