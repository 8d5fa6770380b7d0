// rai-forge: data generation, training, evaluation and benchmark tables.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rai_forge/data.hpp"
#include "rai_forge/ensemble.hpp"
#include "rai_forge/error.hpp"
#include "rai_forge/experiments.hpp"
#include "rai_forge/json_io.hpp"
#include "rai_forge/solvers.hpp"

using namespace raiforge;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

int fail(const char* kind, const std::string& message, int code) {
  std::cerr << "rai-forge: error: " << kind << ": " << one_line(message) << '\n';
  return code;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << body;
}

int cmd_gen_data(const std::string& which, std::size_t n, std::uint64_t seed, const std::string& out) {
  SyntheticSpec spec;
  if (which == "I")
    spec.which = SyntheticKind::DatasetI;
  else if (which == "II")
    spec.which = SyntheticKind::DatasetII;
  else
    throw InvalidArgument("--dataset must be I or II");
  spec.n = n;
  spec.seed = seed;
  save_csv(generate(spec), out);
  return 0;
}

int cmd_train(const std::string& config, const std::string& data_path, const std::string& out,
              const std::string& trace) {
  const SolverConfig cfg = config_from_json(read_json_file(config));
  const Dataset data = load_csv(data_path);
  const SolveResult res = solve(data, cfg);
  write_json_file(to_json(res.ensemble), out);
  if (!trace.empty()) write_text(trace, res.trace.to_csv());
  for (const auto& w : res.warnings) std::cerr << "rai-forge: warning: " << one_line(w) << '\n';
  std::printf("train_obj %.17g\n", res.trace.records.back().train_obj);
  return 0;
}

int cmd_eval(const std::string& model, const std::string& data_path, const std::string& set_path,
             const std::string& out) {
  const Ensemble q = ensemble_from_json(read_json_file(model));
  const Dataset data = load_csv(data_path);
  const UncertaintySetSpec spec = set_spec_from_json(read_json_file(set_path));
  const MetricsReport m = metrics(q.normalized(), data, UncertaintySet::for_dataset(spec, data));
  write_json_file(to_json(m), out);
  return 0;
}

int cmd_bench(const std::string& name, std::size_t seeds, const std::string& out) {
  const BenchTable table = run_bench(parse_experiment(name), seeds);
  for (const auto& w : table.warnings) std::cerr << "rai-forge: warning: " << one_line(w) << '\n';
  write_text(out, table.to_csv());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble training for distributionally robust min-max games"};
  app.require_subcommand(1);

  std::string dataset, out, config, data, trace, model, set, experiment;
  std::size_t n = 1000, seeds = 3;
  std::uint64_t seed = 0;

  auto* gen = app.add_subcommand("gen-data", "Sample a synthetic dataset to CSV");
  gen->add_option("--dataset", dataset, "I or II")->required();
  gen->add_option("--n", n, "sample count")->required();
  gen->add_option("--seed", seed, "generator seed")->required();
  gen->add_option("--out", out, "output CSV")->required();

  auto* train = app.add_subcommand("train", "Fit an ensemble");
  train->add_option("--config", config, "solver config JSON")->required();
  train->add_option("--data", data, "training CSV")->required();
  train->add_option("--out", out, "model JSON")->required();
  train->add_option("--trace", trace, "per-round trace CSV");

  auto* eval = app.add_subcommand("eval", "Report metrics of a model");
  eval->add_option("--model", model, "model JSON")->required();
  eval->add_option("--data", data, "test CSV")->required();
  eval->add_option("--set", set, "uncertainty set JSON")->required();
  eval->add_option("--out", out, "metrics JSON")->required();

  auto* bench = app.add_subcommand("bench", "Reproduce a synthetic benchmark table");
  bench->add_option("--experiment", experiment, "Dataset1_DO | Dataset2_DA | Dataset2_PDA")->required();
  bench->add_option("--seeds", seeds, "number of seeds (1..N)")->required();
  bench->add_option("--out", out, "results CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitUsage);
  }

  try {
    if (*gen) return cmd_gen_data(dataset, n, seed, out);
    if (*train) return cmd_train(config, data, out, trace);
    if (*eval) return cmd_eval(model, data, set, out);
    return cmd_bench(experiment, seeds, out);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kExitUsage);
  } catch (const InvalidSpec& e) {
    return fail("spec", e.what(), kExitUsage);
  } catch (const ParseError& e) {
    return fail("parse", e.what(), kExitUsage);
  } catch (const InvalidDataset& e) {
    return fail("dataset", e.what(), kExitUsage);
  } catch (const InvalidArgument& e) {
    return fail("argument", e.what(), kExitUsage);
  } catch (const InfeasibleSet& e) {
    return fail("infeasible", e.what(), kExitUsage);
  } catch (const DomainError& e) {
    return fail("domain", e.what(), kExitUsage);
  } catch (const NumericError& e) {
    return fail("numeric", e.what(), kExitNumeric);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
}
