#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "rai_forge/learners.hpp"

namespace raiforge {

class Dataset;
class UncertaintySet;

struct EnsembleMember {
  Hypothesis hypothesis;
  double mass = 0.0;
};

/// Distribution Q over hypotheses. Masses are nonnegative; `normalized` records
/// whether they sum to one.
class Ensemble {
 public:
  Ensemble() = default;
  Ensemble(std::vector<EnsembleMember> members, bool normalized);

  void add(Hypothesis h, double mass);
  /// Copy with masses rescaled to sum to one.
  Ensemble normalized() const;
  bool is_normalized() const noexcept { return normalized_; }
  double total_mass() const;

  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  const std::vector<EnsembleMember>& members() const noexcept { return members_; }

 private:
  std::vector<EnsembleMember> members_;
  bool normalized_ = false;
};

/// Q-averaged per-sample zero-one loss (masses normalized internally).
std::vector<double> mean_loss(const Ensemble& q, const Dataset& data);

/// max over the set of E_{h~Q} E_w loss.
double randomized_risk(const Ensemble& q, const Dataset& data, const UncertaintySet& set);

/// Plurality vote over members; ties go to the lowest label. Scale invariant.
int derandomize_predict(const Ensemble& q, std::span<const double> x);

/// Zero-one losses of the plurality-vote classifier.
std::vector<double> deterministic_losses(const Ensemble& q, const Dataset& data);

double deterministic_risk(const Ensemble& q, const Dataset& data, const UncertaintySet& set);

/// 1 / min_i max_y P_Q[h(x_i) = y].
double gamma_q(const Ensemble& q, const Dataset& data);

/// Losses of the derandomized ensemble, in percent.
struct MetricsReport {
  double average = 0.0;
  double worst_class = 0.0;
  std::optional<double> worst_group;
  std::map<int, double> per_class;
  std::map<int, double> per_group;
  double randomized_risk = 0.0;
  double deterministic_risk = 0.0;
  double gamma_q = 1.0;  // unitless
};

MetricsReport metrics(const Ensemble& q, const Dataset& data, const UncertaintySet& set);

}  // namespace raiforge
