#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "rai_forge/data.hpp"
#include "rai_forge/error.hpp"
#include "rai_forge/learners.hpp"
#include "rai_forge/rng.hpp"

using namespace raiforge;
using doctest::Approx;

namespace {

Dataset line(std::vector<double> xs, std::vector<int> ys) {
  std::vector<Sample> s;
  for (std::size_t i = 0; i < xs.size(); ++i) s.push_back({{xs[i]}, ys[i], std::nullopt});
  return Dataset(std::move(s));
}

Dataset random_dataset(SplitMix64& rng, std::size_t n, std::size_t d, int classes) {
  std::vector<Sample> s;
  for (std::size_t i = 0; i < n; ++i) {
    Sample x;
    for (std::size_t j = 0; j < d; ++j) x.features.push_back(std::round(10 * rng.normal()) / 4);
    x.label = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    s.push_back(std::move(x));
  }
  return Dataset(std::move(s), classes);
}

std::vector<double> random_weights(SplitMix64& rng, std::size_t n) {
  std::vector<double> w(n);
  double z = 0.0;
  for (double& x : w) z += x = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
  if (z == 0.0) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  for (double& x : w) x /= z;
  return w;
}

}  // namespace

TEST_CASE("stump examples") {
  const auto d = line({1, 2, 3, 4}, {0, 0, 1, 1});
  const std::vector<double> u(4, 0.25);
  const Stump s = fit_stump(d, u);
  CHECK(weighted_error(loss_row(s, d), u) == 0.0);
  CHECK(s.threshold >= 2.0);
  CHECK(s.threshold < 3.0);
  CHECK(s.left == 0);
  CHECK(s.right == 1);

  // All mass on one sample.
  const auto d2 = line({1, 2, 3}, {1, 0, 0});
  const Stump one = fit_stump(d2, std::vector<double>{1, 0, 0});
  CHECK(predict(one, std::vector<double>{1.0}) == 1);

  // Constant labels give a constant stump.
  const auto d3 = line({1, 2, 3}, {1, 1, 1});
  const Stump c = fit_stump(d3, std::vector<double>(3, 1.0 / 3));
  CHECK(c.left == 1);
  CHECK(c.right == 1);
}

TEST_CASE("stump matches brute force") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    const std::size_t d = 1 + rng.below(3);
    const int classes = 2 + static_cast<int>(rng.below(2));
    const auto data = random_dataset(rng, n, d, classes);
    const auto w = random_weights(rng, n);
    const Stump s = fit_stump(data, w);
    CHECK(weighted_error(loss_row(s, data), w) == Approx(oracle::brute_stump_error(data, w)).epsilon(1e-12));
  }
}

TEST_CASE("weights are validated") {
  const auto d = line({1, 2}, {0, 1});
  LearnerSpec spec;
  CHECK_THROWS_AS(best_response(d, std::vector<double>{0.5}, spec), InvalidArgument);
  CHECK_THROWS_AS(best_response(d, std::vector<double>{-0.5, 1.5}, spec), InvalidArgument);
  CHECK_THROWS_AS(best_response(d, std::vector<double>{0.0, 0.0}, spec), InvalidArgument);
  CHECK_THROWS_AS(best_response(d, std::vector<double>{NAN, 1.0}, spec), InvalidArgument);
}

TEST_CASE("gradient learners do not worsen the logistic loss") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto data = random_dataset(rng, 30 + rng.below(40), 2, 2 + static_cast<int>(rng.below(2)));
    const auto w = random_weights(rng, data.size());
    for (LearnerKind kind : {LearnerKind::Linear, LearnerKind::Mlp}) {
      LearnerSpec spec;
      spec.kind = kind;
      spec.budget.iterations = 200;
      spec.budget.seed = trial;
      const Hypothesis h = best_response(data, w, spec);
      Hypothesis init;
      if (kind == LearnerKind::Linear) {
        LinearModel m;
        m.dim = 2;
        m.classes = data.classes();
        m.weights.assign(static_cast<std::size_t>(2 * m.classes), 0.0);
        m.bias.assign(static_cast<std::size_t>(m.classes), 0.0);
        init = m;
        // zero init scores every class equally
        CHECK(weighted_logistic_loss(h, data, w) <= std::log(static_cast<double>(data.classes())) + 1e-12);
      } else {
        CHECK(std::isfinite(weighted_logistic_loss(h, data, w)));
      }
      if (data.classes() == 2) CHECK(weighted_error(loss_row(h, data), w) <= 0.5 + 1e-12);
    }
  }
}

TEST_CASE("gradient learners separate easy data") {
  const auto d = line({-2, -1.5, -1, 1, 1.5, 2}, {0, 0, 0, 1, 1, 1});
  const std::vector<double> u(6, 1.0 / 6);
  for (LearnerKind kind : {LearnerKind::Linear, LearnerKind::Mlp}) {
    LearnerSpec spec;
    spec.kind = kind;
    spec.budget.iterations = 500;
    const auto h = best_response(d, u, spec);
    CHECK(weighted_error(loss_row(h, d), u) == 0.0);
  }
}

TEST_CASE("learners are deterministic") {
  SplitMix64 rng(4);
  const auto data = random_dataset(rng, 60, 2, 2);
  const auto w = random_weights(rng, 60);
  for (LearnerKind kind : {LearnerKind::Stump, LearnerKind::Linear, LearnerKind::Mlp}) {
    LearnerSpec spec;
    spec.kind = kind;
    spec.budget.iterations = 100;
    spec.budget.seed = 9;
    CHECK(best_response(data, w, spec) == best_response(data, w, spec));
  }
}

TEST_CASE("stump duplication invariance") {
  SplitMix64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto data = random_dataset(rng, 5 + rng.below(20), 2, 2);
    const auto w = random_weights(rng, data.size());
    // duplicate every sample, halving its weight
    std::vector<Sample> twice(data.samples().begin(), data.samples().end());
    twice.insert(twice.end(), data.samples().begin(), data.samples().end());
    std::vector<double> w2(w);
    w2.insert(w2.end(), w.begin(), w.end());
    for (double& x : w2) x /= 2;
    const Dataset d2(std::move(twice), 2);
    const Stump a = fit_stump(data, w), b = fit_stump(d2, w2);
    CHECK(weighted_error(loss_row(a, data), w) == Approx(weighted_error(loss_row(b, d2), w2)).epsilon(1e-12));
    CHECK(a == b);
  }
}

TEST_CASE("prediction ties go to the lowest label") {
  LinearModel m;
  m.dim = 1;
  m.classes = 3;
  m.weights = {0, 0, 0};
  m.bias = {0, 1, 1};
  CHECK(predict(m, std::vector<double>{3.0}) == 1);
  CHECK(kind_name(m) == "linear");
  CHECK(kind_name(Stump{}) == "stump");
}

TEST_CASE("weighted error") {
  CHECK(weighted_error(std::vector<double>{1, 0, 1}, std::vector<double>{0.2, 0.5, 0.3}) == Approx(0.5));
}
