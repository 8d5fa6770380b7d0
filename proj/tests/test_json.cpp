#include "doctest.h"
#include "rai_forge/data.hpp"
#include "rai_forge/error.hpp"
#include "rai_forge/experiments.hpp"
#include "rai_forge/json_io.hpp"

using namespace raiforge;

TEST_CASE("set specs round trip") {
  for (const auto& spec :
       {UncertaintySetSpec::erm(), UncertaintySetSpec::simplex(), UncertaintySetSpec::kl(0.3),
        UncertaintySetSpec::cvar(0.7), UncertaintySetSpec::chi2(0.5), UncertaintySetSpec::group(),
        UncertaintySetSpec::intersection({UncertaintySetSpec::chi2(0.5), UncertaintySetSpec::group()})})
    CHECK(set_spec_from_json(to_json(spec)) == spec);
  CHECK_THROWS_AS(set_spec_from_json(parse_json(R"({"kind":"cvar","alpha":0})")), InvalidSpec);
  CHECK_THROWS_AS(set_spec_from_json(parse_json(R"({"kind":"cvar","alpha":0.5,"rho":1})")), InvalidSpec);
  CHECK_THROWS_AS(set_spec_from_json(parse_json(R"({"kind":"ball"})")), InvalidSpec);
}

TEST_CASE("hypotheses round trip exactly") {
  LinearModel lin{2, 2, {0.1, 1.0 / 3, -2e-300, 7.0}, {std::nextafter(1.0, 2.0), -0.0}};
  MlpModel mlp{1, 2, 2, {0.5, -1.0 / 7}, {0, 1}, {1, 2, 3, 4}, {1e10, 3.14159}};
  for (const Hypothesis& h : {Hypothesis(Stump{1, 0.1 + 0.2, 0, 1}), Hypothesis(lin), Hypothesis(mlp)}) {
    const auto text = to_json(h).dump();
    CHECK(hypothesis_from_json(parse_json(text)) == h);
  }
  CHECK_THROWS_AS(hypothesis_from_json(parse_json(R"({"kind":"linear","dim":2,"classes":2,"weights":[1],"bias":[0,0]})")),
                  ConfigError);
  CHECK_THROWS_AS(hypothesis_from_json(parse_json(R"({"kind":"stump","feature":0,"threshold":1,"left":0,"right":1,"x":2})")),
                  ConfigError);
}

TEST_CASE("ensembles are written normalized") {
  Ensemble q;
  q.add(Stump{0, 1, 0, 1}, 2.0);
  q.add(Stump{0, 2, 1, 0}, 6.0);
  const auto j = to_json(q);
  CHECK(j["normalized"] == true);
  CHECK(j["members"][1]["mass"] == 0.75);
  const auto back = ensemble_from_json(j);
  CHECK(back.is_normalized());
  CHECK(back.members()[0].mass == 0.25);
  CHECK_THROWS_AS(ensemble_from_json(parse_json(R"({"members":[],"normalized":true})")), ConfigError);
  CHECK_THROWS_AS(
      ensemble_from_json(parse_json(
          R"({"members":[{"mass":0.5,"hypothesis":{"kind":"stump","feature":0,"threshold":0,"left":0,"right":0}}],"normalized":true})")),
      ConfigError);
}

TEST_CASE("configs round trip and are validated") {
  SolverConfig cfg;
  cfg.algorithm = Algorithm::FrankWolfe;
  cfg.set = UncertaintySetSpec::cvar(0.7);
  cfg.eta = 0.25;
  cfg.rounds = 17;
  cfg.learner.kind = LearnerKind::Mlp;
  cfg.learner.hidden = 6;
  cfg.learner.budget = {300, 16, 0.05, 4};
  cfg.line_search = {LineSearchMode::BallAroundInverseT, 0.3};
  cfg.seed = 99;
  cfg.pool = {Stump{0, 1, 0, 1}};
  const auto back = config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));

  const auto minimal = config_from_json(parse_json(R"({"algorithm":"erm"})"));
  CHECK(minimal.algorithm == Algorithm::ERM);
  CHECK(minimal.rounds == SolverConfig{}.rounds);

  for (const char* bad : {R"({})", R"({"algorithm":"lpboost"})", R"({"algorithm":"erm","rounds":0})",
                          R"({"algorithm":"erm","eta":-1})", R"({"algorithm":"erm","colour":1})",
                          R"({"algorithm":"erm","rounds":"10"})", R"({"algorithm":"erm","budget":{"iters":3}})",
                          R"({"algorithm":"erm","set":{"kind":"chi2","rho":-1}})",
                          R"({"algorithm":"online_gdro","set":{"kind":"simplex"}})",
                          R"({"algorithm":"frank_wolfe","line_search":{"mode":"golden"}})"})
    CHECK_THROWS_AS(config_from_json(parse_json(bad)), ConfigError);
  CHECK_THROWS_AS(parse_json("{"), ConfigError);
}

TEST_CASE("metrics json") {
  MetricsReport m;
  m.average = 10;
  m.worst_class = 20;
  m.per_class = {{0, 5}, {1, 20}};
  auto j = to_json(m);
  CHECK_FALSE(j.contains("worst_group"));
  CHECK_FALSE(j.contains("per_group"));
  m.worst_group = 30;
  m.per_group = {{0, 30}};
  j = to_json(m);
  CHECK(j["worst_group"] == 30.0);
  CHECK(j["per_group"]["0"] == 30.0);
}

TEST_CASE("experiment tables") {
  CHECK(parse_experiment("Dataset1_DO") == Experiment::Dataset1_DO);
  CHECK(parse_experiment("Dataset2_DA") == Experiment::Dataset2_DA);
  CHECK(parse_experiment("Dataset2_PDA") == Experiment::Dataset2_PDA);
  CHECK_THROWS_AS(parse_experiment("dataset3"), InvalidArgument);
  CHECK(roster(Experiment::Dataset1_DO).size() == 4);
  CHECK(roster(Experiment::Dataset2_DA).size() == 6);
  CHECK(roster(Experiment::Dataset2_PDA).size() == 8);
  CHECK(metric_columns(Experiment::Dataset1_DO) == std::vector<std::string>{"average", "worst_class"});
  CHECK(metric_columns(Experiment::Dataset2_DA).size() == 8);
  for (auto e : {Experiment::Dataset1_DO, Experiment::Dataset2_DA, Experiment::Dataset2_PDA})
    for (const auto& r : roster(e)) CHECK_NOTHROW(r.config.validate());

  BenchTable t;
  t.columns = {"average", "worst_class"};
  t.rows = {{"ERM", {27.25, 82.5}, {1.0, 0.0}}};
  CHECK(t.to_csv() == "algorithm,average,average_std,worst_class,worst_class_std\nERM,27.250,1.000,82.500,0.000\n");
}

TEST_CASE("bench data is seeded per run") {
  const auto a = bench_train_data(Experiment::Dataset1_DO, 1);
  const auto b = bench_test_data(Experiment::Dataset1_DO, 1);
  CHECK(a.size() == 1000);
  CHECK(b.size() == 1000);
  CHECK_FALSE(a.samples()[0] == b.samples()[0]);
  CHECK(bench_train_data(Experiment::Dataset2_DA, 2).groups() == 5);
  const auto m = run_entry(Experiment::Dataset1_DO, roster(Experiment::Dataset1_DO)[0], 1);
  CHECK(m.size() == 2);
  CHECK(m == run_entry(Experiment::Dataset1_DO, roster(Experiment::Dataset1_DO)[0], 1));
}
