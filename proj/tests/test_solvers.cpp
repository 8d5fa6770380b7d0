#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "rai_forge/data.hpp"
#include "rai_forge/ensemble.hpp"
#include "rai_forge/error.hpp"
#include "rai_forge/json_io.hpp"
#include "rai_forge/rng.hpp"
#include "rai_forge/solvers.hpp"

using namespace raiforge;
using doctest::Approx;

namespace {

Dataset points(std::vector<double> xs, std::vector<int> ys, std::vector<int> groups = {}) {
  std::vector<Sample> s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Sample x{{xs[i]}, ys[i], std::nullopt};
    if (!groups.empty()) x.group = groups[i];
    s.push_back(std::move(x));
  }
  return Dataset(std::move(s));
}

Stump constant(int label) { return Stump{0, 0.0, label, label}; }

SolverConfig pool_config(Algorithm a, UncertaintySetSpec set, std::size_t rounds) {
  SolverConfig cfg;
  cfg.algorithm = a;
  cfg.set = std::move(set);
  cfg.rounds = rounds;
  cfg.validation_fraction = 0.0;
  return cfg;
}

Dataset boosting_data() {
  std::vector<double> xs;
  std::vector<int> ys;
  for (int i = 0; i < 20; ++i) {
    xs.push_back(i);
    ys.push_back((i % 7 == 1 || i % 5 == 3 || (i >= 8 && i <= 12)) ? 1 : 0);
  }
  return points(xs, ys);
}

}  // namespace

TEST_CASE("2x2 matrix game converges to its value") {
  const auto d = points({0, 1}, {0, 1});
  auto cfg = pool_config(Algorithm::GamePlay, UncertaintySetSpec::simplex(), 200);
  cfg.pool = {constant(0), constant(1)};
  const auto res = solve(d, cfg);
  const UncertaintySet simplex(UncertaintySetSpec::simplex(), 2);
  CHECK(std::abs(randomized_risk(res.ensemble, d, simplex) - 0.5) <= 0.02);
  CHECK(res.trace.records.size() == 200);
  CHECK(res.trace.records.back().ne_gap.has_value());
}

TEST_CASE("smoothed objective") {
  const auto d = points({0, 1}, {0, 1});
  const Ensemble toy({{constant(0), 0.5}, {constant(1), 0.5}}, true);
  const UncertaintySet simplex(UncertaintySetSpec::simplex(), 2);
  CHECK(smoothed_objective(toy, d, simplex, 1.0) == Approx(0.5 + std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(smoothed_objective(toy, d, simplex, 1e-6) - randomized_risk(toy, d, simplex)) <= 1e-3);
  const auto d3 = points({0, 1, 2}, {0, 1, 1});
  const Ensemble one({{constant(0), 1.0}}, true);
  CHECK(smoothed_objective(one, d3, UncertaintySet(UncertaintySetSpec::erm(), 3), 5.0) == Approx(2.0 / 3));
}

TEST_CASE("erm set keeps uniform weights") {
  const auto d = boosting_data();
  auto cfg = pool_config(Algorithm::GamePlay, UncertaintySetSpec::erm(), 5);
  cfg.learner.kind = LearnerKind::Stump;
  const auto res = solve(d, cfg);
  for (const auto& w : res.adversary_weights)
    for (double x : w) CHECK(x == Approx(1.0 / 20));
}

TEST_CASE("game play and frank-wolfe produce the same adversary") {
  const auto d = points({0, 1}, {0, 1});
  auto gp = pool_config(Algorithm::GamePlay, UncertaintySetSpec::simplex(), 30);
  gp.eta_schedule = EtaSchedule::LinearInRound;
  gp.eta = 0.3;
  gp.pool = {constant(0), constant(1)};
  auto fw = gp;
  fw.algorithm = Algorithm::FrankWolfe;
  fw.eta_schedule = EtaSchedule::Constant;
  fw.line_search.mode = LineSearchMode::InverseT;
  const auto a = solve(d, gp), b = solve(d, fw);
  REQUIRE(a.adversary_weights.size() == b.adversary_weights.size());
  for (std::size_t t = 0; t < a.adversary_weights.size(); ++t)
    for (std::size_t i = 0; i < 2; ++i) CHECK(a.adversary_weights[t][i] == Approx(b.adversary_weights[t][i]).epsilon(1e-12));
}

TEST_CASE("gen-adaboost with exact steps is adaboost") {
  const auto d = boosting_data();
  auto cfg = pool_config(Algorithm::GenAdaBoost, UncertaintySetSpec::simplex(), 10);
  cfg.eta = 0.5;
  cfg.eta_growth = 1.0;
  cfg.line_search.mode = LineSearchMode::Exact;
  const auto res = solve(d, cfg);
  CHECK_FALSE(res.ensemble.is_normalized());
  const auto ref = oracle::reference_adaboost(d, 10, [&](const std::vector<double>& w) -> Hypothesis {
    return fit_stump(d, w);
  });
  REQUIRE(res.adversary_weights.size() == 10);
  for (std::size_t t = 0; t < 10; ++t) {
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(res.adversary_weights[t][i] - ref.weights[t][i]) <= 1e-6);
    CHECK(std::abs(res.ensemble.members()[t].mass - ref.alphas[t]) <= 1e-6);
  }
  const auto classic = adaboost_classic(d, 10, LearnerSpec{});
  for (std::size_t t = 0; t < classic.coefficients.size(); ++t)
    CHECK(classic.coefficients[t] == Approx(ref.alphas[t]).epsilon(1e-9));
}

TEST_CASE("classic adaboost") {
  const auto d = points({1, 2, 3, 4, 5, 6}, {0, 0, 0, 1, 1, 1});
  const auto res = adaboost_classic(d, 10, LearnerSpec{});
  CHECK(res.coefficients.size() <= 3);
  CHECK(res.coefficients.back() == Approx(std::log(1e9)));
  const auto set = UncertaintySet(UncertaintySetSpec::simplex(), 6);
  CHECK(deterministic_risk(res.ensemble, d, set) == 0.0);
  CHECK_THROWS_AS(adaboost_classic(points({1, 2, 3}, {0, 1, 2}), 3, LearnerSpec{}), InvalidArgument);

  // No stump beats chance: stop with a warning.
  const auto r2 = adaboost_classic(points({1, 1, 2, 2}, {0, 1, 0, 1}), 5, LearnerSpec{});
  CHECK(r2.coefficients.empty());
  CHECK(r2.warnings.size() == 1);
}

TEST_CASE("online gdro drives weight to the worse group") {
  const std::vector<double> row{0.9, 0.9, 0.1, 0.1, 0.1};
  PoolResponder responder({row});
  const UncertaintySet set(UncertaintySetSpec::group(), 5, {0, 0, 1, 1, 1});
  auto cfg = pool_config(Algorithm::OnlineGDRO, UncertaintySetSpec::group(), 200);
  cfg.gdro_step = 0.5;
  const auto out = run_game(responder, set, nullptr, cfg);
  double prev = 0.0;
  for (const auto& w : out.adversary_weights) {
    const double a = w[0] + w[1];
    CHECK(a >= prev);
    prev = a;
  }
  CHECK(prev > 0.99);

  const auto d = points({0, 1}, {0, 1});
  auto bad = pool_config(Algorithm::OnlineGDRO, UncertaintySetSpec::simplex(), 3);
  CHECK_THROWS_AS(solve(d, bad), ConfigError);
}

TEST_CASE("smoothing sandwich") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> xs;
    std::vector<int> ys;
    for (int i = 0; i < 15; ++i) {
      xs.push_back(rng.normal());
      ys.push_back(static_cast<int>(rng.below(2)));
    }
    const auto d = points(xs, ys);
    for (const auto& spec : {UncertaintySetSpec::simplex(), UncertaintySetSpec::cvar(0.4)}) {
      const double eta = 0.05 + rng.uniform();
      auto cfg = pool_config(Algorithm::GamePlay, spec, 12);
      cfg.eta = eta;
      const auto res = solve(d, cfg);
      const UncertaintySet set(spec, d.size());
      for (std::size_t t = 1; t <= res.ensemble.size(); ++t) {
        Ensemble prefix;
        for (std::size_t k = 0; k < t; ++k) prefix.add(res.ensemble.members()[k].hypothesis, 1.0);
        const double l = randomized_risk(prefix, d, set);
        const double s = smoothed_objective(prefix, d, set, eta);
        CHECK(l <= s + 1e-12);
        CHECK(s <= l + eta * std::log(static_cast<double>(d.size())) + 1e-12);
      }
    }
  }
}

TEST_CASE("exact frank-wolfe does not increase the smoothed objective") {
  const auto d = boosting_data();
  for (const auto& spec : {UncertaintySetSpec::simplex(), UncertaintySetSpec::cvar(0.5), UncertaintySetSpec::chi2(1.0)}) {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t T = 1; T <= 12; ++T) {
      auto cfg = pool_config(Algorithm::FrankWolfe, spec, T);
      cfg.eta = 0.1;
      cfg.line_search.mode = LineSearchMode::Exact;
      const auto res = solve(d, cfg);
      const double s = smoothed_objective(res.ensemble, d, UncertaintySet(spec, d.size()), 0.1);
      if (T > 1) CHECK(s <= prev + 1e-9);
      prev = s;
    }
  }
}

TEST_CASE("line search") {
  LineSearch ga{LineSearchMode::UnitInterval, 0.5};
  LineSearch fw{LineSearchMode::BallAroundInverseT, 0.5};
  CHECK(line_search_alpha([](double) { return 1.0; }, ga, 3) == Approx(1.0 / 22));
  CHECK(line_search_alpha([](double a) { return -a; }, ga, 3) == Approx(21.0 / 22));
  for (double a : line_search_grid(fw, 1)) {
    CHECK(a > 0.0);
    CHECK(a <= 1.0);
  }
  const auto g = line_search_grid(fw, 4);
  CHECK(g.size() == 21);
  CHECK(g.front() == Approx(0.125));
  CHECK(g.back() == Approx(0.375));
  CHECK_THROWS_AS(line_search_alpha([](double) { return 0.0; }, LineSearch{}, 1), ConfigError);
}

TEST_CASE("eta adaptation") {
  SolverTrace tr;
  TraceRecord a, b;
  a.val_obj = 0.30;
  b.val_obj = 0.31;
  tr.records = {a, b};
  CHECK(eta_adapt(tr, 1.0, 2.0) == 2.0);
  CHECK(eta_adapt(tr, 1.0, 1.0) == 1.0);
  tr.records[1].val_obj = 0.29;
  CHECK(eta_adapt(tr, 1.0, 2.0) == 1.0);
  tr.records.pop_back();
  CHECK(eta_adapt(tr, 1.0, 2.0) == 1.0);
}

TEST_CASE("config validation") {
  SolverConfig cfg;
  cfg.rounds = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.rounds = 1;
  cfg.eta = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.eta = 1;
  cfg.line_search.radius_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.line_search.radius_fraction = 0.5;
  cfg.set = UncertaintySetSpec::cvar(2.0);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  const auto d = points({0, 1}, {0, 1});
  SolverConfig zero;
  zero.rounds = 0;
  CHECK_THROWS_AS(solve(d, zero), ConfigError);
}

TEST_CASE("solvers are deterministic") {
  const auto d = gen_dataset_1({SyntheticKind::DatasetI, 200, 3});
  for (Algorithm a : {Algorithm::GamePlay, Algorithm::FrankWolfe, Algorithm::GenAdaBoost, Algorithm::ERM,
                      Algorithm::AdaBoost}) {
    SolverConfig cfg;
    cfg.algorithm = a;
    cfg.set = UncertaintySetSpec::cvar(0.7);
    cfg.rounds = 3;
    cfg.seed = 5;
    cfg.learner.kind = LearnerKind::Linear;
    cfg.learner.budget.iterations = 100;
    cfg.line_search.mode = a == Algorithm::FrankWolfe ? LineSearchMode::BallAroundInverseT : LineSearchMode::None;
    const auto x = solve(d, cfg), y = solve(d, cfg);
    CHECK(x.trace == y.trace);
    CHECK(to_json(x.ensemble) == to_json(y.ensemble));
    CHECK(x.adversary_weights == y.adversary_weights);
    for (const auto& r : x.trace.records) CHECK(std::isfinite(r.train_obj));
  }
}

TEST_CASE("trace csv") {
  SolverTrace tr;
  TraceRecord r;
  r.round = 1;
  r.train_obj = 0.25;
  r.alpha = 1;
  r.eta = 2;
  tr.records = {r};
  CHECK(tr.to_csv() == "round,train_obj,val_obj,alpha,eta,ne_gap\n1,0.25,,1,2,\n");
}
