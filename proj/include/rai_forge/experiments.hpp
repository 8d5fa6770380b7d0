#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rai_forge/solvers.hpp"

namespace raiforge {

enum class Experiment { Dataset1_DO, Dataset2_DA, Dataset2_PDA };

/// Throws InvalidArgument for unknown names.
Experiment parse_experiment(const std::string& name);
std::string experiment_name(Experiment e);

struct RosterEntry {
  std::string label;
  SolverConfig config;  ///< seed is filled in per run
  /// Train on class-label groups instead of the generator's groups.
  bool class_groups = false;
};

/// Algorithms run by an experiment, in table order.
std::vector<RosterEntry> roster(Experiment e);
/// Metric columns (percent), in table order.
std::vector<std::string> metric_columns(Experiment e);

struct BenchRow {
  std::string label;
  std::vector<double> mean;
  std::vector<double> stddev;  ///< population standard deviation over seeds
};

struct BenchTable {
  Experiment experiment = Experiment::Dataset1_DO;
  std::vector<std::string> columns;
  std::vector<BenchRow> rows;
  std::vector<std::string> warnings;

  /// `algorithm,<col>,<col>_std,...`, fixed three decimals.
  std::string to_csv() const;
};

/// Metrics of one (entry, seed) run on that seed's test set.
std::vector<double> run_entry(Experiment e, const RosterEntry& entry, std::uint64_t seed,
                              std::vector<std::string>* warnings = nullptr);

/// Runs every roster entry on seeds 1..seeds, up to `threads` seeds concurrently
/// (0 = RAI_FORGE_THREADS or hardware concurrency). Output does not depend on `threads`.
BenchTable run_bench(Experiment e, std::size_t seeds, unsigned threads = 0);

/// Training / test sets of a bench seed, n = 1000 each.
Dataset bench_train_data(Experiment e, std::uint64_t seed);
Dataset bench_test_data(Experiment e, std::uint64_t seed);

}  // namespace raiforge
