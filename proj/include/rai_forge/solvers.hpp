#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rai_forge/ensemble.hpp"
#include "rai_forge/learners.hpp"
#include "rai_forge/uncertainty.hpp"

namespace raiforge {

class Dataset;

enum class Algorithm { GamePlay, FrankWolfe, GenAdaBoost, ERM, AdaBoost, OnlineGDRO };

enum class EtaSchedule {
  Constant,
  /// Round t regularizes with eta * (t - 1) (eta at t = 1, where the cumulative loss is zero).
  /// Makes game play reproduce Frank-Wolfe with step 1/t.
  LinearInRound,
};

enum class LineSearchMode {
  None,                ///< FW: 2/(t+2) after the forced first step; Gen-AdaBoost: 1
  InverseT,            ///< 1/t
  Exact,               ///< 1-D minimization of the smoothed objective
  BallAroundInverseT,  ///< 21-point grid on [(1-r)/t, (1+r)/t] clamped to (0, 1]
  UnitInterval,        ///< 21-point grid k/22, k = 1..21
};

struct LineSearch {
  LineSearchMode mode = LineSearchMode::None;
  double radius_fraction = 0.5;
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::GamePlay;
  UncertaintySetSpec set = UncertaintySetSpec::simplex();
  double eta = 1.0;
  double eta_growth = 2.0;
  std::size_t rounds = 10;
  EtaSchedule eta_schedule = EtaSchedule::Constant;
  LearnerSpec learner;
  LineSearch line_search;
  std::uint64_t seed = 0;
  std::size_t warmup_rounds = 0;
  /// Held-out share used to track the validation objective (eta adaptation). 0 disables.
  double validation_fraction = 0.1;
  double gdro_step = 0.1;
  /// Optional finite hypothesis class: best responses are restricted to it and
  /// NE-gap diagnostics are reported.
  std::vector<Hypothesis> pool;

  /// Throws ConfigError.
  void validate() const;
};

struct TraceRecord {
  std::size_t round = 0;
  double train_obj = 0.0;
  std::optional<double> val_obj;
  double alpha = 0.0;
  double eta = 0.0;
  std::optional<double> ne_gap;

  bool operator==(const TraceRecord&) const = default;
};

struct SolverTrace {
  std::vector<TraceRecord> records;

  /// `round,train_obj,val_obj,alpha,eta,ne_gap`; unavailable cells are blank.
  std::string to_csv() const;
  bool operator==(const SolverTrace&) const = default;
};

/// Best-response player over a fixed ground set; hypotheses are referred to by id.
class Responder {
 public:
  virtual ~Responder() = default;
  virtual std::size_t respond(std::span<const double> w, std::size_t round) = 0;
  virtual const std::vector<double>& train_losses(std::size_t id) const = 0;
  /// nullptr when no validation split exists.
  virtual const std::vector<double>* val_losses(std::size_t id) const = 0;
  /// Every hypothesis the player could answer with (finite classes only), for NE gaps.
  virtual std::optional<std::size_t> pool_size() const { return std::nullopt; }
};

/// Finite hypothesis class given by its loss rows. Answers the exact minimizer
/// of the weighted loss, lowest index among ties.
class PoolResponder final : public Responder {
 public:
  explicit PoolResponder(std::vector<std::vector<double>> train_rows,
                         std::vector<std::vector<double>> val_rows = {});
  std::size_t respond(std::span<const double> w, std::size_t round) override;
  const std::vector<double>& train_losses(std::size_t id) const override { return train_[id]; }
  const std::vector<double>* val_losses(std::size_t id) const override {
    return val_.empty() ? nullptr : &val_[id];
  }
  std::optional<std::size_t> pool_size() const override { return train_.size(); }

 private:
  std::vector<std::vector<double>> train_, val_;
};

struct GameMember {
  std::size_t id = 0;
  double mass = 0.0;
};

/// Raw solver output over responder ids, one member per round.
struct GameOutcome {
  std::vector<GameMember> members;
  bool normalized = true;
  SolverTrace trace;
  std::vector<std::vector<double>> adversary_weights;  ///< w^t per round
  std::vector<std::string> warnings;
};

/// Runs config.algorithm (GamePlay, FrankWolfe, GenAdaBoost or OnlineGDRO) against a responder.
/// `val_set` may be null.
GameOutcome run_game(Responder& responder, const UncertaintySet& train_set, const UncertaintySet* val_set,
                     const SolverConfig& config);

struct SolveResult {
  Ensemble ensemble;
  SolverTrace trace;
  std::vector<std::vector<double>> adversary_weights;
  std::vector<std::string> warnings;
};

/// Dispatch on config.algorithm.
SolveResult solve(const Dataset& data, const SolverConfig& config);

/// Algorithm 1: FTRL adversary against best-responding learner; uniform ensemble.
SolveResult game_play_solve(const Dataset& data, const SolverConfig& config);
/// Greedy Frank-Wolfe on the smoothed objective.
SolveResult fw_solve(const Dataset& data, const SolverConfig& config);
/// Greedy coordinate descent on the relaxed simplex (lambda = -1/2); unnormalized ensemble.
SolveResult gen_adaboost_solve(const Dataset& data, const SolverConfig& config);

/// max_w E_{h~Q} E_w loss + eta * H(w).
double smoothed_objective(const Ensemble& q, const Dataset& data, const UncertaintySet& set, double eta);

/// Candidate step sizes for the grid modes, ascending. Empty for non-grid modes.
std::vector<double> line_search_grid(const LineSearch& mode, std::size_t round);
/// Grid argmin of `objective`; ties go to the smallest step. Throws ConfigError on an empty grid.
double line_search_alpha(const std::function<double(double)>& objective, const LineSearch& mode,
                         std::size_t round);

/// eta * growth when the validation objective of the last record exceeds the previous one.
double eta_adapt(const SolverTrace& trace, double eta, double growth);

struct AdaBoostResult {
  Ensemble ensemble;
  std::vector<double> coefficients;
  std::vector<std::vector<double>> sample_weights;  ///< weights each round's learner saw
  std::vector<std::string> warnings;
};

/// Classic binary AdaBoost: coefficients 1/2 ln((1-e)/e), exponential reweighting.
AdaBoostResult adaboost_classic(const Dataset& data, std::size_t rounds, const LearnerSpec& learner,
                                std::uint64_t seed = 0);
Ensemble erm(const Dataset& data, const LearnerSpec& learner);
/// Exponentiated-gradient ascent on group weights interleaved with best responses.
Ensemble online_gdro(const Dataset& data, std::size_t rounds, double step, const LearnerSpec& learner,
                     std::uint64_t seed = 0);

std::string algorithm_name(Algorithm a);

}  // namespace raiforge
