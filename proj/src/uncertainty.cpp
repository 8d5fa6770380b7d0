#include "rai_forge/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "rai_forge/data.hpp"
#include "rai_forge/error.hpp"

namespace raiforge {

namespace {

constexpr double kFlush = 1e-300;

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(std::string(what) + " contains a non-finite entry");
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

void flush_and_normalize(std::vector<double>& w) {
  double total = 0.0;
  for (double& x : w) {
    if (x < kFlush) x = 0.0;
    total += x;
  }
  if (!(total > 0.0)) throw NumericError("weight vector collapsed to zero");
  for (double& x : w) x /= total;
}

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> w(logits.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logits[i] - m);
  flush_and_normalize(w);
  return w;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Indices sorted by decreasing value; equal values keep increasing index.
std::vector<std::size_t> order_desc(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return idx;
}

// ---------------------------------------------------------------------------
// Atom problem: the ground set is partitioned into atoms (single samples, or
// groups whose members share one weight). Variables are atom masses v_k in
// [0, cap_k] summing to one; sample weight = v_k / size_k.
//
//   maximize  sum_k v_k a_k + eta * H(w)
//   s.t.      chi2(w) <= rho_c,  KL(w) <= rho_kl   (each optional)
//
// Ball constraints are dualized (one multiplier each); for fixed multipliers
// the problem is separable and solved by bisection on the simplex multiplier.

struct AtomProblem {
  std::vector<double> loss;  // atom mean loss
  std::vector<double> size;
  std::vector<double> cap;   // mass cap, <= 1
  double n = 1.0;
  double eta = 0.0;
  double chi2_rho = -1.0;
  double kl_rho = -1.0;
};

// Positive root v of  B log v + C v = r, clipped to `cap`. B > 0, C >= 0.
double solve_log_linear(double B, double C, double r, double cap) {
  const double xcap = std::log(cap);
  if (B * xcap + C * cap - r <= 0.0) return cap;
  if (C == 0.0) return std::exp(r / B);
  double x = xcap;  // h(x) > 0 here; Newton on a convex increasing h descends monotonically
  for (int it = 0; it < 200; ++it) {
    const double e = C * std::exp(x);
    const double step = (B * x + e - r) / (B + e);
    x -= step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
  }
  return std::exp(x);
}

class AtomSolver {
 public:
  explicit AtomSolver(const AtomProblem& p) : p_(p) {
    // Collapse atoms with identical parameters; they receive equal mass.
    std::vector<std::size_t> idx(p.loss.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto key = [&](std::size_t i) { return std::tuple(p.loss[i], p.size[i], p.cap[i]); };
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    class_of_.resize(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      if (j == 0 || key(idx[j]) != key(idx[j - 1])) {
        loss_.push_back(p.loss[idx[j]]);
        size_.push_back(p.size[idx[j]]);
        cap_.push_back(p.cap[idx[j]]);
        mult_.push_back(0.0);
      }
      mult_.back() += 1.0;
      class_of_[idx[j]] = loss_.size() - 1;
    }
  }

  std::vector<double> solve() const {
    const bool has_c = p_.chi2_rho >= 0.0;
    const bool has_k = p_.kl_rho >= 0.0;
    if ((has_c && p_.chi2_rho == 0.0) || (has_k && p_.kl_rho == 0.0)) return uniform_masses();
    double lc = 0.0, lk = 0.0;
    if (has_c && has_k) {
      for (int sweep = 0; sweep < 200; ++sweep) {
        const double lc_old = lc, lk_old = lk;
        lc = multiplier([&](double x) { return inner(x, lk); }, [&](const auto& v) { return chi2_excess(v); });
        lk = multiplier([&](double x) { return inner(lc, x); }, [&](const auto& v) { return kl_excess(v); });
        if (std::abs(lc - lc_old) <= 1e-12 * std::max(1.0, lc) &&
            std::abs(lk - lk_old) <= 1e-12 * std::max(1.0, lk))
          break;
      }
      // Polish: tighten whichever ball is still violated by rounding.
      auto v = inner(lc, lk);
      if (chi2_excess(v) > 0.0)
        lc = multiplier([&](double x) { return inner(x, lk); }, [&](const auto& u) { return chi2_excess(u); });
      return expand(inner(lc, lk));
    }
    if (has_c)
      lc = multiplier([&](double x) { return inner(x, 0.0); }, [&](const auto& v) { return chi2_excess(v); });
    if (has_k)
      lk = multiplier([&](double x) { return inner(0.0, x); }, [&](const auto& v) { return kl_excess(v); });
    if (!has_c && !has_k && p_.eta == 0.0) return greedy();
    return expand(inner(lc, lk));
  }

 private:
  using Classes = std::vector<double>;  // mass per collapsed class member

  std::vector<double> uniform_masses() const {
    std::vector<double> v(p_.loss.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = p_.size[k] / p_.n;
    return v;
  }

  std::vector<double> expand(const Classes& per_class) const {
    std::vector<double> v(class_of_.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = per_class[class_of_[k]];
    double total = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& x : v) x /= total;
    return v;
  }

  // Pure linear objective over capped masses: fill highest-loss atoms first.
  std::vector<double> greedy() const {
    std::vector<double> v(p_.loss.size(), 0.0);
    double remaining = 1.0;
    for (std::size_t k : order_desc(p_.loss)) {
      if (remaining <= 0.0) break;
      v[k] = std::min(p_.cap[k], remaining);
      remaining -= v[k];
    }
    return v;
  }

  template <class Inner, class Excess>
  double multiplier(Inner&& inner_at, Excess&& excess) const {
    if (excess(inner_at(0.0)) <= 0.0) return 0.0;
    double hi = 1.0;
    int guard = 0;
    while (excess(inner_at(hi)) > 0.0) {
      hi *= 4.0;
      if (++guard > 600) throw NumericError("ball multiplier search diverged");
    }
    double lo = hi > 1.0 ? hi / 4.0 : 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (excess(inner_at(mid)) > 0.0 ? lo : hi) = mid;
    }
    return hi;  // feasible side
  }

  double chi2_excess(const Classes& v) const {
    double s = 0.0;
    for (std::size_t u = 0; u < v.size(); ++u) {
      const double d = v[u] / size_[u] - 1.0 / p_.n;
      s += mult_[u] * size_[u] * d * d;
    }
    return 0.5 * p_.n * s - p_.chi2_rho;
  }

  double kl_excess(const Classes& v) const {
    double s = 0.0;
    for (std::size_t u = 0; u < v.size(); ++u)
      if (v[u] > 0.0) s += mult_[u] * v[u] * std::log(p_.n * v[u] / size_[u]);
    return s - p_.kl_rho;
  }

  // Maximizer of the Lagrangian for fixed ball multipliers (lc for chi2, lk for KL).
  Classes inner(double lc, double lk) const {
    const double B = p_.eta + lk;
    const std::size_t m = loss_.size();
    if (B == 0.0 && lc == 0.0) {
      // Linear with no strict concavity: greedy over classes, highest loss first.
      Classes v(m, 0.0);
      double remaining = 1.0;
      for (std::size_t u : order_desc(loss_)) {
        const double take = std::min(cap_[u], remaining / mult_[u]);
        v[u] = take;
        remaining -= take * mult_[u];
        if (remaining <= 0.0) break;
      }
      return v;
    }
    std::vector<double> A(m), C(m);
    for (std::size_t u = 0; u < m; ++u) {
      const double ls = std::log(size_[u]);
      A[u] = loss_[u] + p_.eta * (ls - 1.0) + lc - lk * (std::log(p_.n) - ls + 1.0);
      C[u] = lc * p_.n / size_[u];
    }
    Classes v(m);
    auto fill = [&](double mu) {
      double total = 0.0;
      for (std::size_t u = 0; u < m; ++u) {
        const double r = A[u] - mu;
        double x;
        if (B == 0.0)
          x = std::clamp(r / C[u], 0.0, cap_[u]);
        else
          x = solve_log_linear(B, C[u], r, cap_[u]);
        v[u] = x;
        total += mult_[u] * x;
      }
      return total;
    };
    double lo = *std::max_element(A.begin(), A.end());
    double hi = lo;
    double step = 1.0;
    while (fill(hi) > 1.0) { hi += step; step *= 2.0; }
    step = 1.0;
    while (fill(lo) < 1.0) {
      lo -= step;
      step *= 2.0;
      if (!std::isfinite(lo)) throw NumericError("simplex multiplier search diverged");
    }
    for (int it = 0; it < 300; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (fill(mid) > 1.0 ? lo : hi) = mid;
    }
    const double total = fill(0.5 * (lo + hi));
    for (double& x : v) x /= total;
    return v;
  }

  const AtomProblem& p_;
  std::vector<double> loss_, size_, cap_, mult_;
  std::vector<std::size_t> class_of_;
};

AtomProblem make_problem(const UncertaintySet& set, std::span<const double> losses, double eta) {
  AtomProblem p;
  p.n = static_cast<double>(set.size());
  p.eta = eta;
  p.chi2_rho = set.chi2_radius();
  p.kl_rho = set.kl_radius();
  if (set.grouped()) {
    for (const auto& members : set.atoms()) {
      double s = 0.0;
      for (std::size_t i : members) s += losses[i];
      const double sz = static_cast<double>(members.size());
      p.loss.push_back(s / sz);
      p.size.push_back(sz);
      p.cap.push_back(std::min(1.0, set.cap() * sz));
    }
  } else {
    p.loss.assign(losses.begin(), losses.end());
    p.size.assign(losses.size(), 1.0);
    p.cap.assign(losses.size(), std::min(1.0, set.cap()));
  }
  return p;
}

std::vector<double> spread(const UncertaintySet& set, const std::vector<double>& masses) {
  if (!set.grouped()) return masses;
  std::vector<double> w(set.size(), 0.0);
  const auto& atoms = set.atoms();
  for (std::size_t k = 0; k < atoms.size(); ++k)
    for (std::size_t i : atoms[k]) w[i] = masses[k] / static_cast<double>(atoms[k].size());
  return w;
}

std::vector<double> solve_atoms(const UncertaintySet& set, std::span<const double> losses, double eta) {
  const AtomProblem p = make_problem(set, losses, eta);
  std::vector<double> w = spread(set, AtomSolver(p).solve());
  if (eta > 0.0) flush_and_normalize(w);
  return w;
}

// Chi-square ball around uniform, linear objective: w(tau) = (l - tau)_+ / sum(l - tau)_+,
// the largest tau whose distance to uniform stays inside the ball.
OracleResult chi2_linear(std::span<const double> l, double rho) {
  const std::size_t n = l.size();
  const double nd = static_cast<double>(n);
  const double r2 = 2.0 * rho / nd;  // squared Euclidean radius
  const auto [mn_it, mx_it] = std::minmax_element(l.begin(), l.end());
  const double lmin = *mn_it, lmax = *mx_it;
  OracleResult out;
  if (rho == 0.0 || lmax == lmin) {
    out.weights = uniform(n);
    out.value = dot(out.weights, l);
    return out;
  }
  const double top = static_cast<double>(std::count(l.begin(), l.end(), lmax));
  if (1.0 / top - 1.0 / nd <= r2) {
    out.weights.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (l[i] == lmax) out.weights[i] = 1.0 / top;
    out.value = lmax;
    return out;
  }
  auto weights_at = [&](double tau) {
    std::vector<double> w(n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += (w[i] = std::max(0.0, l[i] - tau));
    for (double& x : w) x /= z;
    return w;
  };
  auto dist2 = [&](const std::vector<double>& w) {
    double s = 0.0;
    for (double x : w) s += (x - 1.0 / nd) * (x - 1.0 / nd);
    return s;
  };
  const double mean = std::accumulate(l.begin(), l.end(), 0.0) / nd;
  double spread_norm = 0.0;
  for (double x : l) spread_norm += (x - mean) * (x - mean);
  spread_norm = std::sqrt(spread_norm);
  double tau = mean - spread_norm / (nd * std::sqrt(r2));
  if (tau > lmin) {
    double lo = lmin, hi = lmax;
    for (int it = 0; it < 300; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (dist2(weights_at(mid)) > r2 ? hi : lo) = mid;
    }
    tau = lo;
  }
  out.weights = weights_at(tau);
  out.value = dot(out.weights, l);
  return out;
}

std::vector<double> tilt(std::span<const double> l, double lambda) {
  std::vector<double> z(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) z[i] = l[i] / lambda;
  return softmax(z);
}

OracleResult kl_linear(std::span<const double> l, double rho) {
  const std::size_t n = l.size();
  const auto [mn_it, mx_it] = std::minmax_element(l.begin(), l.end());
  const double lmin = *mn_it, lmax = *mx_it;
  OracleResult out;
  if (rho == 0.0 || lmax == lmin) {
    out.weights = uniform(n);
    out.value = dot(out.weights, l);
    return out;
  }
  const double top = static_cast<double>(std::count(l.begin(), l.end(), lmax));
  if (std::log(static_cast<double>(n) / top) <= rho) {
    out.weights.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (l[i] == lmax) out.weights[i] = 1.0 / top;
    out.value = lmax;
    return out;
  }
  // KL of the exponential tilt decreases in lambda; bisect in log lambda.
  const double scale = std::log(lmax - lmin);
  double lo = scale - 10.0, hi = scale + 10.0;
  while (kl_divergence(tilt(l, std::exp(hi))) > rho) hi += 10.0;
  while (kl_divergence(tilt(l, std::exp(lo))) <= rho && lo > scale - 700.0) lo -= 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (kl_divergence(tilt(l, std::exp(mid))) > rho ? lo : hi) = mid;
  }
  out.weights = tilt(l, std::exp(hi));
  out.value = dot(out.weights, l);
  return out;
}

OracleResult cvar_linear(std::span<const double> l, double cap) {
  OracleResult out;
  out.weights.assign(l.size(), 0.0);
  double remaining = 1.0;
  for (std::size_t i : order_desc(l)) {
    if (remaining <= 0.0) break;
    out.weights[i] = std::min(cap, remaining);
    remaining -= out.weights[i];
  }
  out.value = dot(out.weights, l);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void UncertaintySetSpec::validate() const {
  switch (kind) {
    case SetKind::CVaR:
      if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidSpec("CVaR alpha must lie in (0, 1]");
      break;
    case SetKind::KLBall:
    case SetKind::Chi2Ball:
      if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidSpec("ball radius must be finite and >= 0");
      break;
    case SetKind::Intersection: {
      if (members.size() < 2) throw InvalidSpec("intersection needs at least two members");
      std::set<SetKind> kinds;
      int group_members = 0;
      for (const auto& m : members) {
        if (m.kind == SetKind::Intersection) throw InvalidSpec("nested intersections are not supported");
        m.validate();
        kinds.insert(m.kind);
        group_members += m.kind == SetKind::GroupDRO;
      }
      if (kinds.size() < 2) throw InvalidSpec("intersection needs at least two distinct kinds");
      if (group_members > 1) throw InvalidSpec("intersection may contain at most one group set");
      break;
    }
    default:
      break;
  }
}

bool UncertaintySetSpec::uses_groups() const {
  if (kind == SetKind::GroupDRO) return true;
  return std::any_of(members.begin(), members.end(), [](const auto& m) { return m.uses_groups(); });
}

std::string UncertaintySetSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case SetKind::ERM: os << "erm"; break;
    case SetKind::Simplex: os << "simplex"; break;
    case SetKind::KLBall: os << "kl(" << rho << ")"; break;
    case SetKind::CVaR: os << "cvar(" << alpha << ")"; break;
    case SetKind::Chi2Ball: os << "chi2(" << rho << ")"; break;
    case SetKind::GroupDRO: os << "group"; break;
    case SetKind::Intersection:
      for (std::size_t i = 0; i < members.size(); ++i) os << (i ? "&" : "") << members[i].describe();
      break;
  }
  return os.str();
}

UncertaintySet::UncertaintySet(UncertaintySetSpec spec, std::size_t n, std::vector<int> groups)
    : spec_(std::move(spec)), n_(n), groups_(std::move(groups)) {
  spec_.validate();
  if (n_ == 0) throw InvalidArgument("uncertainty set over an empty ground set");
  const double nd = static_cast<double>(n_);
  auto fold = [&](const UncertaintySetSpec& s) {
    switch (s.kind) {
      case SetKind::ERM: erm_ = true; break;
      case SetKind::Simplex: break;
      case SetKind::KLBall: kl_rho_ = kl_rho_ < 0.0 ? s.rho : std::min(kl_rho_, s.rho); break;
      case SetKind::CVaR: cap_ = std::min(cap_, 1.0 / (s.alpha * nd)); break;
      case SetKind::Chi2Ball: chi2_rho_ = chi2_rho_ < 0.0 ? s.rho : std::min(chi2_rho_, s.rho); break;
      case SetKind::GroupDRO: grouped_ = true; break;
      case SetKind::Intersection: break;
    }
  };
  if (spec_.kind == SetKind::Intersection)
    for (const auto& m : spec_.members) fold(m);
  else
    fold(spec_);
  if (cap_ * nd < 1.0 - 1e-12) throw InfeasibleSet("per-sample caps sum to less than one");
  if (grouped_) {
    if (groups_.size() != n_) throw InvalidSpec("group uncertainty set needs one group id per sample");
    const int k = *std::max_element(groups_.begin(), groups_.end()) + 1;
    std::vector<std::vector<std::size_t>> by_group(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n_; ++i) {
      if (groups_[i] < 0) throw InvalidSpec("negative group id");
      by_group[static_cast<std::size_t>(groups_[i])].push_back(i);
    }
    for (auto& g : by_group)
      if (!g.empty()) atoms_.push_back(std::move(g));
  }
}

UncertaintySet UncertaintySet::for_dataset(UncertaintySetSpec spec, const Dataset& data) {
  if (spec.uses_groups() && !data.grouped())
    throw InvalidSpec("group uncertainty set requires grouped data");
  return UncertaintySet(std::move(spec), data.size(), spec.uses_groups() ? data.group_ids() : std::vector<int>{});
}

std::vector<double> cvar_capped_projection_log(std::span<const double> s, double cap) {
  const std::size_t n = s.size();
  if (n == 0) throw InvalidArgument("empty score vector");
  require_finite(s, "log-scores");
  if (cap * static_cast<double>(n) < 1.0 - 1e-12) throw InfeasibleSet("cap * n < 1");

  std::vector<double> w = softmax(s);
  if (*std::max_element(w.begin(), w.end()) <= cap) return w;

  const std::vector<std::size_t> ord = order_desc(s);
  // Number of entries tied at or above the m-th largest (1-based m).
  auto capped_count = [&](std::size_t m) {
    std::size_t k = m;
    while (k < n && s[ord[k]] == s[ord[m - 1]]) ++k;
    return k;
  };
  // Total mass when the scale puts the m-th largest exactly at the cap.
  auto candidate = [&](std::size_t m) {
    const double t = s[ord[m - 1]];
    const std::size_t k = capped_count(m);
    double tail = 0.0;
    for (std::size_t i = k; i < n; ++i) tail += std::exp(s[ord[i]] - t);
    return cap * (static_cast<double>(k) + tail);
  };
  // candidate(m) is nondecreasing in m and candidate(1) < 1 here; find the largest m with <= 1.
  std::size_t lo = 1, hi = n;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (candidate(mid) <= 1.0)
      lo = mid;
    else
      hi = mid - 1;
  }
  const std::size_t k = capped_count(lo);
  const double free_mass = std::max(0.0, 1.0 - cap * static_cast<double>(k));
  std::fill(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < k; ++i) w[ord[i]] = cap;
  if (k < n && free_mass > 0.0) {
    std::vector<double> rest;
    rest.reserve(n - k);
    for (std::size_t i = k; i < n; ++i) rest.push_back(s[ord[i]]);
    const double log_c = std::log(free_mass) - log_sum_exp(rest);
    for (std::size_t i = k; i < n; ++i) w[ord[i]] = std::min(cap, std::exp(log_c + s[ord[i]]));
  }
  flush_and_normalize(w);
  return w;
}

std::vector<double> cvar_capped_projection(std::span<const double> scores, double cap) {
  std::vector<double> logs(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] > 0.0) || !std::isfinite(scores[i]))
      throw DomainError("scores must be positive and finite");
    logs[i] = std::log(scores[i]);
  }
  return cvar_capped_projection_log(logs, cap);
}

std::vector<double> regularized_argmax(const UncertaintySet& set, std::span<const double> cum,
                                       const RegularizerSpec& reg) {
  if (cum.size() != set.size()) throw InvalidArgument("loss vector length does not match the set");
  if (!(reg.eta > 0.0) || !std::isfinite(reg.eta)) throw InvalidArgument("regularization strength must be positive");
  require_finite(cum, "cumulative losses");
  const std::size_t n = set.size();
  if (set.singleton()) return uniform(n);
  const bool balls = set.chi2_radius() >= 0.0 || set.kl_radius() >= 0.0;
  if (!balls && !set.grouped()) {
    std::vector<double> logits(n);
    for (std::size_t i = 0; i < n; ++i) logits[i] = cum[i] / reg.eta;
    return set.cap() < 1.0 ? cvar_capped_projection_log(logits, set.cap()) : softmax(logits);
  }
  if (!balls && set.grouped() && set.cap() >= 1.0) {
    // Group-mean cumulative loss, tilted per sample: group mass ~ |G_k| exp(mean_k / eta).
    std::vector<double> logits(n);
    for (const auto& members : set.atoms()) {
      double s = 0.0;
      for (std::size_t i : members) s += cum[i];
      const double mean = s / static_cast<double>(members.size());
      for (std::size_t i : members) logits[i] = mean / reg.eta;
    }
    return softmax(logits);
  }
  return solve_atoms(set, cum, reg.eta);
}

OracleResult regularized_max(const UncertaintySet& set, std::span<const double> losses,
                             const RegularizerSpec& reg) {
  OracleResult out;
  out.weights = regularized_argmax(set, losses, reg);
  out.value = dot(out.weights, losses);
  if (!set.singleton()) out.value += reg.eta * entropy(out.weights);
  return out;
}

OracleResult linear_max_oracle(const UncertaintySet& set, std::span<const double> losses) {
  if (losses.size() != set.size()) throw InvalidArgument("loss vector length does not match the set");
  require_finite(losses, "losses");
  const std::size_t n = set.size();
  const bool has_c = set.chi2_radius() >= 0.0, has_k = set.kl_radius() >= 0.0;
  if (set.singleton()) {
    OracleResult out{0.0, uniform(n)};
    out.value = dot(out.weights, losses);
    return out;
  }
  if (!set.grouped() && !has_c && !has_k) {
    if (set.cap() < 1.0) return cvar_linear(losses, set.cap());
    OracleResult out{0.0, std::vector<double>(n, 0.0)};
    const auto best = static_cast<std::size_t>(std::max_element(losses.begin(), losses.end()) - losses.begin());
    out.weights[best] = 1.0;
    out.value = losses[best];
    return out;
  }
  if (!set.grouped() && set.cap() >= 1.0 && has_c != has_k)
    return has_c ? chi2_linear(losses, set.chi2_radius()) : kl_linear(losses, set.kl_radius());
  OracleResult out;
  out.weights = solve_atoms(set, losses, 0.0);
  out.value = dot(out.weights, losses);
  return out;
}

double kl_dual_value(std::span<const double> l, double rho) {
  require_finite(l, "losses");
  const auto [mn_it, mx_it] = std::minmax_element(l.begin(), l.end());
  if (*mx_it == *mn_it) return *mx_it;
  const double nd = static_cast<double>(l.size());
  auto dual = [&](double log_lambda) {
    const double lambda = std::exp(log_lambda);
    std::vector<double> z(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) z[i] = l[i] / lambda;
    return lambda * (log_sum_exp(z) - std::log(nd)) + lambda * rho;
  };
  const double scale = std::log(*mx_it - *mn_it);
  double a = scale - 40.0, b = scale + 40.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = dual(c), fd = dual(d);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - g * (b - a); fc = dual(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + g * (b - a); fd = dual(d);
    }
  }
  // The infimum may sit at lambda -> 0, where the dual tends to max(l).
  return std::min({fc, fd, *mx_it});
}

MembershipReport membership_check(const UncertaintySet& set, std::span<const double> w, double tol) {
  MembershipReport r;
  auto flag = [&](std::string name, double amount) {
    if (amount > tol) {
      r.feasible = false;
      r.violations.push_back({std::move(name), amount});
    }
  };
  if (w.size() != set.size()) {
    r.feasible = false;
    r.violations.push_back({"length", std::abs(static_cast<double>(w.size()) - static_cast<double>(set.size()))});
    return r;
  }
  const double nd = static_cast<double>(w.size());
  flag("nonnegativity", -std::min(0.0, *std::min_element(w.begin(), w.end())));
  flag("normalization", std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0));
  if (set.singleton()) {
    double dev = 0.0;
    for (double x : w) dev = std::max(dev, std::abs(x - 1.0 / nd));
    flag("empirical", dev);
  }
  if (set.cap() < 1.0) flag("cvar cap", *std::max_element(w.begin(), w.end()) - set.cap());
  if (set.chi2_radius() >= 0.0) flag("chi2 radius", chi2_divergence(w) - set.chi2_radius());
  if (set.kl_radius() >= 0.0) flag("kl radius", kl_divergence(w) - set.kl_radius());
  if (set.grouped()) {
    double spread_max = 0.0;
    for (const auto& members : set.atoms()) {
      double lo = w[members.front()], hi = lo;
      for (std::size_t i : members) {
        lo = std::min(lo, w[i]);
        hi = std::max(hi, w[i]);
      }
      spread_max = std::max(spread_max, hi - lo);
    }
    flag("group uniformity", spread_max);
  }
  return r;
}

double entropy(std::span<const double> w) {
  double h = 0.0;
  for (double x : w)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

double chi2_divergence(std::span<const double> w) {
  const double nd = static_cast<double>(w.size());
  double s = 0.0;
  for (double x : w) s += 0.5 * (nd * x - 1.0) * (nd * x - 1.0);
  return s / nd;
}

double kl_divergence(std::span<const double> w) {
  const double nd = static_cast<double>(w.size());
  double s = 0.0;
  for (double x : w)
    if (x > 0.0) s += x * std::log(nd * x);
  return s;
}

}  // namespace raiforge
