#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace simlr::cli {

// Bad flag value discovered after parsing (needs the data to check).  The
// message always leads with the flag name.
class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& flag, const std::string& what) : std::runtime_error(flag + ": " + what) {}
};

struct FitSettings {
  std::vector<std::string> views;
  std::vector<std::string> graphs;
  int graph_knn = 0;       // 0: default per view
  double graph_tau = 0.0;  // > 0 switches to the correlation-threshold graph
  int k = 2;
  std::string similarity = "recon";
  std::string separation = "svd";
  std::string norm = "l0";
  std::vector<double> sparseness{0.5};
  int max_iter = 100;
  double tol = 1e-6;
  std::string init = "svd";
  std::uint64_t seed = 1;
  std::string out;
};

struct SimulateSettings {
  int runs = 30;
  std::uint64_t seed = 1;
  std::vector<std::string> methods{"recon-svd", "recon-ica", "acc-svd", "acc-ica"};
  int permutations = 0;
  int perm_runs = 0;  // 0: every run
  int jobs = 1;
  int n = 100;
  std::vector<int> p{300, 400, 500};
  int k_min = 3;
  int k_max = 6;
  int latents = 1;
  std::vector<double> corruption;  // empty: uniform [0.1, 0.9] per view
  double smoothing_min = 0.01;
  double smoothing_max = 0.05;
  double train_fraction = 0.8;
  int k = 0;  // 0: the run's true rank
  int graph_knn = 0;
  std::string norm = "l0";
  double sparseness = 0.5;
  int max_iter = 100;
  double tol = 1e-6;
  std::string out;
};

struct PermtestSettings {
  std::string fit;
  int permutations = 0;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out;
};

// Flat key=value lines; '#' starts a comment; a key may repeat.  Keys are
// long flag names without the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

// Keys a manifest carries for the record only; they are skipped when the
// manifest is read back as a config file.
bool is_informational_key(const std::string& key);

class Manifest {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);
  void add(const std::string& key, long long value);
  void add(const std::string& key, const std::vector<std::string>& values);
  void add(const std::string& key, const std::vector<double>& values);
  void add(const std::string& key, const std::vector<int>& values);
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::vector<std::string> split_list(const std::string& text);

// Text file writer that fails loudly; all CLI outputs go through it.
void write_text(const std::filesystem::path& path, const std::string& text);

// Runs fn(0..count-1) on up to `jobs` threads.  Work is handed out by index,
// so results written into per-index slots do not depend on `jobs`.  The first
// exception is rethrown after all threads finish.
template <class Fn>
void parallel_for(int count, int jobs, Fn fn) {
  std::atomic<int> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  const int threads = std::max(1, std::min(jobs, count));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace simlr::cli
