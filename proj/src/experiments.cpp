#include "rai_forge/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "rai_forge/data.hpp"
#include "rai_forge/error.hpp"
#include "rai_forge/rng.hpp"

namespace raiforge {

namespace {

constexpr std::size_t kBenchSamples = 1000;

bool first_dataset(Experiment e) { return e == Experiment::Dataset1_DO; }

SolverConfig base_config(Experiment e) {
  SolverConfig c;
  c.eta = 1.0;
  c.eta_growth = 2.0;
  c.learner.budget.iterations = 1000;
  c.learner.budget.batch_size = 32;
  if (first_dataset(e)) {
    c.learner.kind = LearnerKind::Linear;
    c.learner.budget.learning_rate = 0.1;
    c.rounds = 20;
  } else {
    c.learner.kind = LearnerKind::Mlp;
    c.learner.hidden = 4;
    c.learner.budget.learning_rate = 0.1;
    c.rounds = 5;
  }
  return c;
}

RosterEntry entry(std::string label, SolverConfig c, Algorithm a, UncertaintySetSpec set,
                  LineSearchMode mode = LineSearchMode::None) {
  c.algorithm = a;
  c.set = std::move(set);
  c.line_search.mode = mode;
  return {std::move(label), std::move(c), false};
}

double chi2_radius() { return 0.5; }

}  // namespace

Experiment parse_experiment(const std::string& name) {
  if (name == "Dataset1_DO") return Experiment::Dataset1_DO;
  if (name == "Dataset2_DA") return Experiment::Dataset2_DA;
  if (name == "Dataset2_PDA") return Experiment::Dataset2_PDA;
  throw InvalidArgument("unknown experiment \"" + name + "\" (expected Dataset1_DO|Dataset2_DA|Dataset2_PDA)");
}

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::Dataset1_DO: return "Dataset1_DO";
    case Experiment::Dataset2_DA: return "Dataset2_DA";
    case Experiment::Dataset2_PDA: return "Dataset2_PDA";
  }
  return "unknown";
}

std::vector<RosterEntry> roster(Experiment e) {
  const SolverConfig base = base_config(e);
  std::vector<RosterEntry> out;
  if (first_dataset(e)) {
    const auto cvar = UncertaintySetSpec::cvar(0.7);
    out.push_back(entry("ERM", base, Algorithm::ERM, UncertaintySetSpec::erm()));
    out.push_back(entry("AdaBoost", base, Algorithm::AdaBoost, UncertaintySetSpec::simplex()));
    out.push_back(entry("RAI-GA", base, Algorithm::GenAdaBoost, cvar, LineSearchMode::UnitInterval));
    out.push_back(entry("RAI-FW", base, Algorithm::FrankWolfe, cvar, LineSearchMode::BallAroundInverseT));
    return out;
  }
  const auto chi2 = UncertaintySetSpec::chi2(chi2_radius());
  const auto group = UncertaintySetSpec::group();
  out.push_back(entry("ERM", base, Algorithm::ERM, UncertaintySetSpec::erm()));
  out.push_back(entry("RAI-GA (chi2)", base, Algorithm::GenAdaBoost, chi2, LineSearchMode::UnitInterval));
  out.push_back(entry("RAI-FW (chi2)", base, Algorithm::FrankWolfe, chi2, LineSearchMode::BallAroundInverseT));
  SolverConfig gdro = base;
  gdro.gdro_step = 1.0;
  out.push_back(entry("Online GDRO", gdro, Algorithm::OnlineGDRO, group));
  out.push_back(entry("RAI-GA (Group)", base, Algorithm::GenAdaBoost, group, LineSearchMode::UnitInterval));
  out.push_back(entry("RAI-FW (Group)", base, Algorithm::FrankWolfe, group, LineSearchMode::BallAroundInverseT));
  if (e == Experiment::Dataset2_PDA) {
    const auto both = UncertaintySetSpec::intersection({chi2, group});
    out.push_back(entry("RAI-GA (chi2 & Group)", base, Algorithm::GenAdaBoost, both, LineSearchMode::UnitInterval));
    out.push_back(
        entry("RAI-FW (chi2 & Group)", base, Algorithm::FrankWolfe, both, LineSearchMode::BallAroundInverseT));
  }
  return out;
}

std::vector<std::string> metric_columns(Experiment e) {
  if (first_dataset(e)) return {"average", "worst_class"};
  return {"group1", "group2", "group3", "group4", "group5", "worst_group", "average", "worst_class"};
}

Dataset bench_train_data(Experiment e, std::uint64_t seed) {
  const auto kind = first_dataset(e) ? SyntheticKind::DatasetI : SyntheticKind::DatasetII;
  return generate({kind, kBenchSamples, derive_seed(seed, 1)});
}

Dataset bench_test_data(Experiment e, std::uint64_t seed) {
  const auto kind = first_dataset(e) ? SyntheticKind::DatasetI : SyntheticKind::DatasetII;
  return generate({kind, kBenchSamples, derive_seed(seed, 2)});
}

std::vector<double> run_entry(Experiment e, const RosterEntry& entry, std::uint64_t seed,
                              std::vector<std::string>* warnings) {
  Dataset train = bench_train_data(e, seed);
  if (entry.class_groups) train = with_class_groups(train);
  const Dataset test = bench_test_data(e, seed);
  SolverConfig cfg = entry.config;
  cfg.seed = seed;
  SolveResult res = solve(train, cfg);
  if (warnings)
    for (auto& w : res.warnings) warnings->push_back(entry.label + " seed " + std::to_string(seed) + ": " + w);
  const MetricsReport m =
      metrics(res.ensemble.normalized(), test, UncertaintySet::for_dataset(UncertaintySetSpec::simplex(), test));
  if (first_dataset(e)) return {m.average, m.worst_class};
  std::vector<double> row;
  for (int g = 0; g < 5; ++g) {
    auto it = m.per_group.find(g);
    row.push_back(it == m.per_group.end() ? 0.0 : it->second);
  }
  row.push_back(m.worst_group.value_or(0.0));
  row.push_back(m.average);
  row.push_back(m.worst_class);
  return row;
}

BenchTable run_bench(Experiment e, std::size_t seeds, unsigned threads) {
  if (seeds < 1) throw InvalidArgument("bench needs at least one seed");
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RAI_FORGE_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v >= 1) threads = std::min(threads, static_cast<unsigned>(v));
    }
  }
  const auto entries = roster(e);
  // results[seed][entry] -> metric row
  std::vector<std::vector<std::vector<double>>> results(seeds);
  std::vector<std::vector<std::string>> notes(seeds);
  std::vector<std::exception_ptr> failures(seeds);
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&]() {
    for (;;) {
      std::size_t s;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= seeds) return;
        s = next++;
      }
      try {
        for (const auto& en : entries) results[s].push_back(run_entry(e, en, s + 1, &notes[s]));
      } catch (...) {
        failures[s] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned workers = std::min<std::size_t>(threads, seeds);
  for (unsigned k = 1; k < workers; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t s = 0; s < seeds; ++s) {
    if (!failures[s]) continue;
    try {
      std::rethrow_exception(failures[s]);
    } catch (const std::exception& ex) {
      throw Error("seed " + std::to_string(s + 1) + " failed after " + std::to_string(results[s].size()) + " of " +
                  std::to_string(entries.size()) + " runs: " + ex.what());
    }
  }

  BenchTable table;
  table.experiment = e;
  table.columns = metric_columns(e);
  const std::size_t cols = table.columns.size();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    BenchRow row{entries[k].label, std::vector<double>(cols, 0.0), std::vector<double>(cols, 0.0)};
    for (std::size_t c = 0; c < cols; ++c) {
      double mean = 0.0;
      for (std::size_t s = 0; s < seeds; ++s) mean += results[s][k][c];
      mean /= static_cast<double>(seeds);
      double var = 0.0;
      for (std::size_t s = 0; s < seeds; ++s) var += (results[s][k][c] - mean) * (results[s][k][c] - mean);
      row.mean[c] = mean;
      row.stddev[c] = std::sqrt(var / static_cast<double>(seeds));
    }
    table.rows.push_back(std::move(row));
  }
  for (auto& n : notes) table.warnings.insert(table.warnings.end(), n.begin(), n.end());
  return table;
}

std::string BenchTable::to_csv() const {
  std::string out = "algorithm";
  for (const auto& c : columns) out += "," + c + "," + c + "_std";
  out += '\n';
  char buf[64];
  for (const auto& r : rows) {
    out += r.label;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.3f,%.3f", r.mean[c], r.stddev[c]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace raiforge
