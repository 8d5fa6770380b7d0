#include "rai_forge/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "rai_forge/data.hpp"
#include "rai_forge/error.hpp"
#include "rai_forge/rng.hpp"

namespace raiforge {

namespace {

constexpr double kPoolTieTol = 1e-12;
constexpr double kGridFloor = 1e-6;
constexpr std::size_t kGridPoints = 21;
// Gen-AdaBoost fixes the relaxed-simplex multiplier at -1/2.
constexpr double kSimplexMultiplier = -0.5;

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::vector<double> scaled(std::span<const double> v, double s) {
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x *= s;
  return out;
}

// a * x + b * y
std::vector<double> combine(double a, std::span<const double> x, double b, std::span<const double> y) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

// Root of a nondecreasing derivative on [lo, hi]; endpoints when it does not change sign.
double monotone_root(const std::function<double(double)>& deriv, double lo, double hi) {
  if (deriv(lo) >= 0.0) return lo;
  if (deriv(hi) <= 0.0) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (deriv(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

bool adds_unit_mass(Algorithm a) { return a == Algorithm::GamePlay || a == Algorithm::OnlineGDRO; }

bool adapts_eta(Algorithm a) {
  return a == Algorithm::GamePlay || a == Algorithm::FrankWolfe || a == Algorithm::GenAdaBoost;
}

class LearnerResponder final : public Responder {
 public:
  LearnerResponder(const Dataset& train, const Dataset* val, LearnerSpec spec, std::uint64_t seed)
      : train_(train), val_(val), spec_(std::move(spec)), seed_(seed) {}

  std::size_t respond(std::span<const double> w, std::size_t round) override {
    LearnerSpec spec = spec_;
    spec.budget.seed = derive_seed(seed_ ^ spec_.budget.seed, round);
    hyps_.push_back(best_response(train_, w, spec));
    train_rows_.push_back(loss_row(hyps_.back(), train_));
    if (val_) val_rows_.push_back(loss_row(hyps_.back(), *val_));
    return hyps_.size() - 1;
  }
  const std::vector<double>& train_losses(std::size_t id) const override { return train_rows_[id]; }
  const std::vector<double>* val_losses(std::size_t id) const override {
    return val_ ? &val_rows_[id] : nullptr;
  }
  const Hypothesis& hypothesis(std::size_t id) const { return hyps_[id]; }

 private:
  const Dataset& train_;
  const Dataset* val_;
  LearnerSpec spec_;
  std::uint64_t seed_;
  std::vector<Hypothesis> hyps_;
  std::vector<std::vector<double>> train_rows_, val_rows_;
};

struct Split {
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> val;  // may be null
};

Split split_for(const Dataset& data, const SolverConfig& cfg) {
  Split s;
  const bool want_val = cfg.validation_fraction > 0.0 && cfg.eta_growth > 1.0 && adapts_eta(cfg.algorithm) &&
                        cfg.pool.empty() && data.size() >= 10;
  if (!want_val) {
    s.train = std::make_shared<const Dataset>(data);
    return s;
  }
  auto [tr, va] = train_test_split(data, 1.0 - cfg.validation_fraction, derive_seed(cfg.seed, 0xA11));
  s.train = std::make_shared<const Dataset>(std::move(tr));
  s.val = std::make_shared<const Dataset>(std::move(va));
  return s;
}

TraceRecord evaluate_round(const UncertaintySet& set, const UncertaintySet* val_set,
                           std::span<const double> train_mean, const std::vector<double>* val_mean) {
  TraceRecord r;
  r.train_obj = linear_max_oracle(set, train_mean).value;
  if (val_set && val_mean) r.val_obj = linear_max_oracle(*val_set, *val_mean).value;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

void SolverConfig::validate() const {
  if (rounds < 1) throw ConfigError("rounds must be at least 1");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be positive");
  if (!(eta_growth >= 1.0) || !std::isfinite(eta_growth)) throw ConfigError("eta_growth must be >= 1");
  if (!(line_search.radius_fraction > 0.0 && line_search.radius_fraction < 1.0))
    throw ConfigError("line search radius fraction must lie in (0, 1)");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in [0, 1)");
  if (!(gdro_step > 0.0)) throw ConfigError("gdro_step must be positive");
  if (learner.kind != LearnerKind::Stump) {
    if (learner.budget.iterations < 1) throw ConfigError("budget.iterations must be >= 1");
    if (learner.budget.batch_size < 1) throw ConfigError("budget.batch_size must be >= 1");
    if (!(learner.budget.learning_rate > 0.0)) throw ConfigError("budget.learning_rate must be positive");
    if (learner.kind == LearnerKind::Mlp && learner.hidden < 1) throw ConfigError("hidden width must be >= 1");
  }
  if (algorithm == Algorithm::OnlineGDRO && !set.uses_groups())
    throw ConfigError("online GDRO needs a group uncertainty set");
  try {
    set.validate();
  } catch (const InvalidSpec& e) {
    throw ConfigError(std::string("set: ") + e.what());
  }
}

std::string SolverTrace::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "round,train_obj,val_obj,alpha,eta,ne_gap\n";
  for (const auto& r : records) {
    os << r.round << ',' << r.train_obj << ',';
    if (r.val_obj) os << *r.val_obj;
    os << ',' << r.alpha << ',' << r.eta << ',';
    if (r.ne_gap) os << *r.ne_gap;
    os << '\n';
  }
  return os.str();
}

PoolResponder::PoolResponder(std::vector<std::vector<double>> train_rows, std::vector<std::vector<double>> val_rows)
    : train_(std::move(train_rows)), val_(std::move(val_rows)) {
  if (train_.empty()) throw InvalidArgument("hypothesis pool is empty");
  for (const auto& r : train_)
    if (r.size() != train_.front().size()) throw InvalidArgument("pool loss rows differ in length");
  if (!val_.empty() && val_.size() != train_.size()) throw InvalidArgument("validation rows do not match pool");
}

std::size_t PoolResponder::respond(std::span<const double> w, std::size_t) {
  std::size_t best = 0;
  double best_loss = dot(train_[0], w);
  for (std::size_t k = 1; k < train_.size(); ++k) {
    const double l = dot(train_[k], w);
    if (l < best_loss - kPoolTieTol) {
      best = k;
      best_loss = l;
    }
  }
  return best;
}

std::vector<double> line_search_grid(const LineSearch& mode, std::size_t round) {
  std::vector<double> grid;
  const double t = static_cast<double>(std::max<std::size_t>(round, 1));
  if (mode.mode == LineSearchMode::BallAroundInverseT) {
    const double lo = std::max(kGridFloor, (1.0 - mode.radius_fraction) / t);
    const double hi = std::min(1.0, (1.0 + mode.radius_fraction) / t);
    for (std::size_t k = 0; k < kGridPoints; ++k)
      grid.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(kGridPoints - 1));
  } else if (mode.mode == LineSearchMode::UnitInterval) {
    for (std::size_t k = 1; k <= kGridPoints; ++k)
      grid.push_back(static_cast<double>(k) / static_cast<double>(kGridPoints + 1));
  }
  return grid;
}

double line_search_alpha(const std::function<double(double)>& objective, const LineSearch& mode,
                         std::size_t round) {
  const auto grid = line_search_grid(mode, round);
  if (grid.empty()) throw ConfigError("line search grid is empty for this mode");
  double best = grid.front();
  double best_val = objective(best);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double v = objective(grid[k]);
    if (v < best_val) {
      best_val = v;
      best = grid[k];
    }
  }
  return best;
}

double eta_adapt(const SolverTrace& trace, double eta, double growth) {
  const auto& r = trace.records;
  if (r.size() < 2) return eta;
  const auto& cur = r.back();
  const auto& prev = r[r.size() - 2];
  if (cur.val_obj && prev.val_obj && *cur.val_obj > *prev.val_obj) return eta * growth;
  return eta;
}

GameOutcome run_game(Responder& responder, const UncertaintySet& S, const UncertaintySet* V,
                     const SolverConfig& cfg) {
  cfg.validate();
  const Algorithm alg = cfg.algorithm;
  if (alg == Algorithm::ERM || alg == Algorithm::AdaBoost)
    throw ConfigError("run_game handles game play, greedy and online GDRO algorithms only");
  if (alg == Algorithm::OnlineGDRO && !S.grouped()) throw ConfigError("online GDRO needs grouped data");

  const std::size_t n = S.size();
  const std::size_t nv = V ? V->size() : 0;
  double eta = cfg.eta;

  GameOutcome out;
  std::vector<double> weighted_sum(n, 0.0), weighted_val(nv, 0.0), cumulative(n, 0.0), avg_w(n, 0.0);
  double total_mass = 0.0;
  std::vector<double> group_w;
  if (alg == Algorithm::OnlineGDRO) group_w.assign(S.atoms().size(), 1.0 / static_cast<double>(S.atoms().size()));

  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    double eta_t = eta;
    if (alg == Algorithm::GamePlay && cfg.eta_schedule == EtaSchedule::LinearInRound)
      eta_t = eta * static_cast<double>(std::max<std::size_t>(1, t - 1));

    // Adversary.
    std::vector<double> w;
    if (t <= cfg.warmup_rounds) {
      w.assign(n, 1.0 / static_cast<double>(n));
    } else {
      switch (alg) {
        case Algorithm::GamePlay:
          w = regularized_argmax(S, cumulative, {eta_t});
          break;
        case Algorithm::FrankWolfe:
          w = regularized_argmax(S, total_mass > 0.0 ? scaled(weighted_sum, 1.0 / total_mass) : weighted_sum, {eta_t});
          break;
        case Algorithm::GenAdaBoost:
          w = regularized_argmax(S, weighted_sum, {eta_t});
          break;
        default: {
          w.assign(n, 0.0);
          const auto& atoms = S.atoms();
          for (std::size_t k = 0; k < atoms.size(); ++k)
            for (std::size_t i : atoms[k]) w[i] = group_w[k] / static_cast<double>(atoms[k].size());
          break;
        }
      }
    }

    // Learner.
    const std::size_t id = responder.respond(w, t);
    const std::vector<double>& l = responder.train_losses(id);
    const std::vector<double>* lv = responder.val_losses(id);

    // Step.
    double alpha = 1.0;
    if (alg == Algorithm::FrankWolfe) {
      if (total_mass > 0.0) {
        const std::vector<double> mean = scaled(weighted_sum, 1.0 / total_mass);
        switch (cfg.line_search.mode) {
          case LineSearchMode::None: alpha = 2.0 / (static_cast<double>(t) + 2.0); break;
          case LineSearchMode::InverseT: alpha = 1.0 / static_cast<double>(t); break;
          case LineSearchMode::Exact:
            alpha = monotone_root(
                [&](double a) {
                  const auto point = combine(1.0 - a, mean, a, l);
                  const auto grad = regularized_argmax(S, point, {eta_t});
                  return dot(l, grad) - dot(mean, grad);
                },
                0.0, 1.0);
            break;
          default:
            alpha = line_search_alpha(
                [&](double a) { return linear_max_oracle(S, combine(1.0 - a, mean, a, l)).value; },
                cfg.line_search, t);
        }
      }
      for (auto& m : out.members) m.mass *= (1.0 - alpha);
      for (std::size_t i = 0; i < n; ++i) weighted_sum[i] = (1.0 - alpha) * weighted_sum[i] + alpha * l[i];
      if (lv)
        for (std::size_t i = 0; i < nv; ++i) weighted_val[i] = (1.0 - alpha) * weighted_val[i] + alpha * (*lv)[i];
      total_mass = (1.0 - alpha) * total_mass + alpha;
    } else if (alg == Algorithm::GenAdaBoost) {
      switch (cfg.line_search.mode) {
        case LineSearchMode::None: alpha = 1.0; break;
        case LineSearchMode::InverseT: alpha = 1.0 / static_cast<double>(t); break;
        case LineSearchMode::Exact: {
          // d/da [L_eta(S + a l) + lambda (M + a)] = <l, w(a)> + lambda
          const double cap = 2.0 * eta_t * std::log(1e9);
          alpha = monotone_root(
              [&](double a) {
                const auto grad = regularized_argmax(S, combine(1.0, weighted_sum, a, l), {eta_t});
                return dot(l, grad) + kSimplexMultiplier;
              },
              0.0, cap);
          break;
        }
        default:
          alpha = line_search_alpha(
              [&](double a) {
                std::vector<double> m = combine(1.0, weighted_sum, a, l);
                for (double& x : m) x /= (total_mass + a);
                return linear_max_oracle(S, m).value;
              },
              cfg.line_search, t);
      }
      for (std::size_t i = 0; i < n; ++i) weighted_sum[i] += alpha * l[i];
      if (lv)
        for (std::size_t i = 0; i < nv; ++i) weighted_val[i] += alpha * (*lv)[i];
      total_mass += alpha;
    } else {
      alpha = 1.0 / static_cast<double>(t);
      for (std::size_t i = 0; i < n; ++i) weighted_sum[i] += l[i];
      if (lv)
        for (std::size_t i = 0; i < nv; ++i) weighted_val[i] += (*lv)[i];
      total_mass += 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) cumulative[i] += l[i];
    if (alg == Algorithm::OnlineGDRO) {
      const auto& atoms = S.atoms();
      double z = 0.0;
      for (std::size_t k = 0; k < atoms.size(); ++k) {
        double loss = 0.0;
        for (std::size_t i : atoms[k]) loss += l[i];
        loss /= static_cast<double>(atoms[k].size());
        group_w[k] *= std::exp(cfg.gdro_step * loss);
        z += group_w[k];
      }
      for (double& g : group_w) g /= z;
    }
    out.members.push_back({id, adds_unit_mass(alg) ? 1.0 : alpha});
    for (std::size_t i = 0; i < n; ++i) avg_w[i] += w[i];
    out.adversary_weights.push_back(std::move(w));

    // Trace.
    std::vector<double> mean = total_mass > 0.0 ? scaled(weighted_sum, 1.0 / total_mass) : l;
    std::vector<double> val_mean;
    if (lv) val_mean = total_mass > 0.0 ? scaled(weighted_val, 1.0 / total_mass) : *lv;
    TraceRecord rec = evaluate_round(S, V, mean, lv ? &val_mean : nullptr);
    rec.round = t;
    rec.alpha = alpha;
    rec.eta = eta_t;
    if (const auto pool = responder.pool_size()) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < *pool; ++k) best = std::min(best, dot(responder.train_losses(k), avg_w));
      rec.ne_gap = rec.train_obj - best / static_cast<double>(t);
    }
    out.trace.records.push_back(rec);
    if (V && cfg.eta_growth > 1.0 && adapts_eta(alg)) eta = eta_adapt(out.trace, eta, cfg.eta_growth);
  }

  if (!(total_mass > 0.0)) throw NumericError("every ensemble member received zero mass");
  out.normalized = alg != Algorithm::GenAdaBoost;
  if (out.normalized) {
    double total = 0.0;
    for (const auto& m : out.members) total += m.mass;
    for (auto& m : out.members) m.mass /= total;
  }
  return out;
}

double smoothed_objective(const Ensemble& q, const Dataset& data, const UncertaintySet& set, double eta) {
  return regularized_max(set, mean_loss(q, data), {eta}).value;
}

namespace {

SolveResult solve_game(const Dataset& data, const SolverConfig& cfg) {
  cfg.validate();
  const Split split = split_for(data, cfg);
  const UncertaintySet S = UncertaintySet::for_dataset(cfg.set, *split.train);
  std::optional<UncertaintySet> V;
  if (split.val) V.emplace(UncertaintySet::for_dataset(cfg.set, *split.val));

  SolveResult res;
  GameOutcome outcome;
  std::vector<EnsembleMember> members;
  if (!cfg.pool.empty()) {
    std::vector<std::vector<double>> rows;
    for (const auto& h : cfg.pool) rows.push_back(loss_row(h, *split.train));
    PoolResponder responder(std::move(rows));
    outcome = run_game(responder, S, nullptr, cfg);
    for (const auto& m : outcome.members) members.push_back({cfg.pool[m.id], m.mass});
  } else {
    LearnerResponder responder(*split.train, split.val.get(), cfg.learner, cfg.seed);
    outcome = run_game(responder, S, V ? &*V : nullptr, cfg);
    for (const auto& m : outcome.members) members.push_back({responder.hypothesis(m.id), m.mass});
  }
  res.ensemble = Ensemble(std::move(members), outcome.normalized);
  res.trace = std::move(outcome.trace);
  res.adversary_weights = std::move(outcome.adversary_weights);
  res.warnings = std::move(outcome.warnings);
  return res;
}

SolverConfig with_algorithm(SolverConfig cfg, Algorithm a) {
  cfg.algorithm = a;
  return cfg;
}

void append_record(SolverTrace& trace, const Ensemble& q, const Dataset& data, const UncertaintySet& set,
                   double alpha) {
  TraceRecord r;
  r.round = trace.records.size() + 1;
  r.train_obj = linear_max_oracle(set, mean_loss(q, data)).value;
  r.alpha = alpha;
  trace.records.push_back(r);
}

}  // namespace

SolveResult game_play_solve(const Dataset& data, const SolverConfig& config) {
  return solve_game(data, with_algorithm(config, Algorithm::GamePlay));
}

SolveResult fw_solve(const Dataset& data, const SolverConfig& config) {
  return solve_game(data, with_algorithm(config, Algorithm::FrankWolfe));
}

SolveResult gen_adaboost_solve(const Dataset& data, const SolverConfig& config) {
  return solve_game(data, with_algorithm(config, Algorithm::GenAdaBoost));
}

SolveResult solve(const Dataset& data, const SolverConfig& config) {
  config.validate();
  switch (config.algorithm) {
    case Algorithm::ERM: {
      SolveResult res;
      LearnerSpec spec = config.learner;
      spec.budget.seed = derive_seed(config.seed ^ spec.budget.seed, 1);
      res.ensemble = erm(data, spec);
      append_record(res.trace, res.ensemble, data, UncertaintySet::for_dataset(config.set, data), 1.0);
      return res;
    }
    case Algorithm::AdaBoost: {
      SolveResult res;
      auto ab = adaboost_classic(data, config.rounds, config.learner, config.seed);
      const auto set = UncertaintySet::for_dataset(config.set, data);
      Ensemble partial;
      for (std::size_t t = 0; t < ab.coefficients.size(); ++t) {
        partial.add(ab.ensemble.members()[t].hypothesis, ab.coefficients[t]);
        append_record(res.trace, partial, data, set, ab.coefficients[t]);
      }
      res.ensemble = std::move(ab.ensemble);
      res.adversary_weights = std::move(ab.sample_weights);
      res.warnings = std::move(ab.warnings);
      return res;
    }
    default:
      return solve_game(data, config);
  }
}

AdaBoostResult adaboost_classic(const Dataset& data, std::size_t rounds, const LearnerSpec& learner,
                                std::uint64_t seed) {
  if (rounds < 1) throw ConfigError("rounds must be at least 1");
  if (data.classes() != 2) throw InvalidArgument("classic AdaBoost needs binary labels");
  const std::size_t n = data.size();
  const double cap = std::log(1e9);
  AdaBoostResult res;
  std::vector<EnsembleMember> members;
  std::vector<double> d(n, 1.0 / static_cast<double>(n));
  for (std::size_t t = 1; t <= rounds; ++t) {
    LearnerSpec spec = learner;
    spec.budget.seed = derive_seed(seed ^ learner.budget.seed, t);
    Hypothesis h = best_response(data, d, spec);
    const auto l = loss_row(h, data);
    const double err = weighted_error(l, d);
    if (err >= 0.5) {
      res.warnings.push_back("round " + std::to_string(t) + ": weighted error " + std::to_string(err) +
                             " >= 1/2, stopping");
      break;
    }
    const double alpha = err <= 0.0 ? cap : std::min(cap, 0.5 * std::log((1.0 - err) / err));
    res.sample_weights.push_back(d);
    res.coefficients.push_back(alpha);
    members.push_back({std::move(h), alpha});
    if (err <= 0.0) break;
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] *= std::exp(l[i] > 0.5 ? alpha : -alpha);
      z += d[i];
    }
    for (double& x : d) x /= z;
  }
  res.ensemble = Ensemble(std::move(members), false);
  return res;
}

Ensemble erm(const Dataset& data, const LearnerSpec& learner) {
  const std::vector<double> u(data.size(), 1.0 / static_cast<double>(data.size()));
  return Ensemble({{best_response(data, u, learner), 1.0}}, true);
}

Ensemble online_gdro(const Dataset& data, std::size_t rounds, double step, const LearnerSpec& learner,
                     std::uint64_t seed) {
  SolverConfig cfg;
  cfg.algorithm = Algorithm::OnlineGDRO;
  cfg.set = UncertaintySetSpec::group();
  cfg.rounds = rounds;
  cfg.gdro_step = step;
  cfg.learner = learner;
  cfg.seed = seed;
  cfg.validation_fraction = 0.0;
  return solve(data, cfg).ensemble;
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::GamePlay: return "game_play";
    case Algorithm::FrankWolfe: return "frank_wolfe";
    case Algorithm::GenAdaBoost: return "gen_adaboost";
    case Algorithm::ERM: return "erm";
    case Algorithm::AdaBoost: return "adaboost";
    case Algorithm::OnlineGDRO: return "online_gdro";
  }
  return "unknown";
}

}  // namespace raiforge
