#pragma once

#include <span>
#include <string>
#include <vector>

namespace raiforge {

class Dataset;

enum class SetKind { ERM, Simplex, KLBall, CVaR, Chi2Ball, GroupDRO, Intersection };

/// Declarative description of the adversary's feasible sample weightings.
struct UncertaintySetSpec {
  SetKind kind = SetKind::Simplex;
  double alpha = 1.0;  ///< CVaR level in (0, 1]
  double rho = 0.0;    ///< KL / chi-square radius
  std::vector<UncertaintySetSpec> members;  ///< Intersection only

  static UncertaintySetSpec erm() { return {SetKind::ERM, 1.0, 0.0, {}}; }
  static UncertaintySetSpec simplex() { return {SetKind::Simplex, 1.0, 0.0, {}}; }
  static UncertaintySetSpec kl(double rho) { return {SetKind::KLBall, 1.0, rho, {}}; }
  static UncertaintySetSpec cvar(double alpha) { return {SetKind::CVaR, alpha, 0.0, {}}; }
  static UncertaintySetSpec chi2(double rho) { return {SetKind::Chi2Ball, 1.0, rho, {}}; }
  static UncertaintySetSpec group() { return {SetKind::GroupDRO, 1.0, 0.0, {}}; }
  static UncertaintySetSpec intersection(std::vector<UncertaintySetSpec> members) {
    return {SetKind::Intersection, 1.0, 0.0, std::move(members)};
  }

  /// Throws InvalidSpec when a parameter or the member list is out of range.
  void validate() const;
  bool uses_groups() const;
  std::string describe() const;

  bool operator==(const UncertaintySetSpec&) const = default;
};

/// Negative-entropy regularizer Reg(w) = -sum w log w with strength eta.
struct RegularizerSpec {
  double eta = 1.0;
};

/// An uncertainty set bound to a ground set of n samples (and their groups).
///
/// Group DRO is taken as the convex hull of the group-uniform distributions,
/// so every set here is convex and contains the uniform distribution.
class UncertaintySet {
 public:
  UncertaintySet(UncertaintySetSpec spec, std::size_t n, std::vector<int> groups = {});
  static UncertaintySet for_dataset(UncertaintySetSpec spec, const Dataset& data);

  const UncertaintySetSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return n_; }
  const std::vector<int>& groups() const noexcept { return groups_; }

  // Flattened constraint view (intersection members folded together).
  bool singleton() const noexcept { return erm_; }
  bool grouped() const noexcept { return grouped_; }
  /// Per-sample cap, 1 when no CVaR member is present.
  double cap() const noexcept { return cap_; }
  /// Negative when absent.
  double chi2_radius() const noexcept { return chi2_rho_; }
  double kl_radius() const noexcept { return kl_rho_; }

  /// Non-empty groups: member sample indices, in increasing group id.
  const std::vector<std::vector<std::size_t>>& atoms() const noexcept { return atoms_; }

 private:
  UncertaintySetSpec spec_;
  std::size_t n_;
  std::vector<int> groups_;
  bool erm_ = false;
  bool grouped_ = false;
  double cap_ = 1.0;
  double chi2_rho_ = -1.0;
  double kl_rho_ = -1.0;
  std::vector<std::vector<std::size_t>> atoms_;
};

struct OracleResult {
  double value = 0.0;
  std::vector<double> weights;
};

/// FTRL step: argmax over the set of  sum_i w_i L_i + eta * H(w).
/// Weights grow with cumulative loss.
std::vector<double> regularized_argmax(const UncertaintySet& set, std::span<const double> cum_losses,
                                       const RegularizerSpec& reg);

/// Maximizer and value of  w.L + eta * H(w). The regularizer of the singleton
/// ERM set is normalized to 0.
OracleResult regularized_max(const UncertaintySet& set, std::span<const double> losses,
                             const RegularizerSpec& reg);

/// w_i = min(c * scores_i, cap) with c chosen so the weights sum to one.
/// Sort plus binary search over the number of capped entries, O(n log n).
std::vector<double> cvar_capped_projection(std::span<const double> scores, double cap);

/// Same projection from log-scores; safe for scores that would under/overflow.
std::vector<double> cvar_capped_projection_log(std::span<const double> log_scores, double cap);

/// Exact max over the set of w.losses and an attaining w.
OracleResult linear_max_oracle(const UncertaintySet& set, std::span<const double> losses);

/// Dual value  min_{lambda>0} lambda log E_u exp(l/lambda) + lambda rho  of the KL-ball
/// linear problem, by golden-section search.
double kl_dual_value(std::span<const double> losses, double rho);

struct Violation {
  std::string constraint;
  double amount = 0.0;
};

struct MembershipReport {
  bool feasible = true;
  std::vector<Violation> violations;
  explicit operator bool() const noexcept { return feasible; }
};

MembershipReport membership_check(const UncertaintySet& set, std::span<const double> w,
                                  double tol = 1e-8);

double entropy(std::span<const double> w);
/// (1/n) sum f(n w_i), f(t) = (t-1)^2 / 2.
double chi2_divergence(std::span<const double> w);
/// sum w_i log(n w_i).
double kl_divergence(std::span<const double> w);

}  // namespace raiforge
