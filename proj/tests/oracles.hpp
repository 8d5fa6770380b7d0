// Independent reference computations used to check the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "rai_forge/data.hpp"
#include "rai_forge/learners.hpp"
#include "rai_forge/uncertainty.hpp"

namespace oracle {

using raiforge::SetKind;
using raiforge::UncertaintySetSpec;

// Constraint view of a set over n samples, rebuilt from the spec alone.
struct Region {
  std::size_t n = 0;
  bool erm = false;
  bool grouped = false;
  double cap = 1.0;
  double chi2 = -1.0;
  double kl = -1.0;
  std::vector<std::vector<std::size_t>> groups;  // non-empty, by group id
};

inline void absorb(Region& r, const UncertaintySetSpec& s) {
  switch (s.kind) {
    case SetKind::ERM: r.erm = true; break;
    case SetKind::Simplex: break;
    case SetKind::CVaR: r.cap = std::min(r.cap, 1.0 / (s.alpha * static_cast<double>(r.n))); break;
    case SetKind::Chi2Ball: r.chi2 = r.chi2 < 0 ? s.rho : std::min(r.chi2, s.rho); break;
    case SetKind::KLBall: r.kl = r.kl < 0 ? s.rho : std::min(r.kl, s.rho); break;
    case SetKind::GroupDRO: r.grouped = true; break;
    case SetKind::Intersection:
      for (const auto& m : s.members) absorb(r, m);
      break;
  }
}

inline Region region(const UncertaintySetSpec& spec, std::size_t n, const std::vector<int>& groups) {
  Region r;
  r.n = n;
  absorb(r, spec);
  if (r.grouped) {
    const int k = *std::max_element(groups.begin(), groups.end()) + 1;
    r.groups.assign(static_cast<std::size_t>(k), {});
    for (std::size_t i = 0; i < n; ++i) r.groups[static_cast<std::size_t>(groups[i])].push_back(i);
    r.groups.erase(std::remove_if(r.groups.begin(), r.groups.end(), [](const auto& g) { return g.empty(); }),
                   r.groups.end());
  }
  return r;
}

inline double entropy(const std::vector<double>& w) {
  double h = 0.0;
  for (double x : w)
    if (x > 0) h -= x * std::log(x);
  return h;
}

inline bool feasible(const Region& r, const std::vector<double>& w, double tol = 1e-12) {
  const double n = static_cast<double>(r.n);
  for (double x : w)
    if (x > r.cap + tol) return false;
  if (r.chi2 >= 0) {
    double d = 0.0;
    for (double x : w) d += 0.5 * (n * x - 1) * (n * x - 1);
    if (d / n > r.chi2 + tol) return false;
  }
  if (r.kl >= 0) {
    double d = 0.0;
    for (double x : w)
      if (x > 0) d += x * std::log(n * x);
    if (d > r.kl + tol) return false;
  }
  return true;
}

// Coordinates being searched: sample weights, or group masses spread uniformly.
inline std::vector<double> expand(const Region& r, const std::vector<double>& v) {
  if (!r.grouped) return v;
  std::vector<double> w(r.n, 0.0);
  for (std::size_t k = 0; k < r.groups.size(); ++k)
    for (std::size_t i : r.groups[k]) w[i] = v[k] / static_cast<double>(r.groups[k].size());
  return w;
}

// Visits every point of the simplex grid {v >= 0, sum v = 1} with spacing `step`
// restricted to the box [lo_j, hi_j] on the first m-1 coordinates.
inline void walk(std::size_t m, double step, const std::vector<double>& lo, const std::vector<double>& hi,
                 const std::function<void(const std::vector<double>&)>& visit) {
  std::vector<double> v(m, 0.0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t j, double used) {
    if (j + 1 == m) {
      const double last = 1.0 - used;
      if (last < -1e-12) return;
      v[j] = std::max(0.0, last);
      visit(v);
      return;
    }
    const long a = std::max(0L, static_cast<long>(std::ceil(lo[j] / step - 1e-9)));
    const long b = static_cast<long>(std::floor(std::min(hi[j], 1.0 - used) / step + 1e-9));
    for (long k = a; k <= b; ++k) {
      v[j] = static_cast<double>(k) * step;
      rec(j + 1, used + v[j]);
    }
  };
  rec(0, 0.0);
}

struct GridResult {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<double> weights;
};

// max over the feasible region of objective(w): a coarse pass over the whole
// simplex, then local passes on finer lattices.
inline GridResult grid_max(const Region& r, const std::function<double(const std::vector<double>&)>& objective,
                           double coarse = 1e-2, double fine = 1e-3, double box = 2e-2) {
  GridResult best;
  if (r.erm) {
    std::vector<double> u(r.n, 1.0 / static_cast<double>(r.n));
    return {objective(u), u};
  }
  const std::size_t m = r.grouped ? r.groups.size() : r.n;
  std::vector<double> best_v;
  auto consider = [&](const std::vector<double>& v) {
    const auto w = expand(r, v);
    if (!feasible(r, w)) return;
    const double f = objective(w);
    if (f > best.value) {
      best.value = f;
      best.weights = w;
      best_v = v;
    }
  };
  if (m == 1) {
    consider({1.0});
    return best;
  }
  walk(m, coarse, std::vector<double>(m, 0.0), std::vector<double>(m, 1.0), consider);
  std::vector<double> centre = best_v;
  if (centre.empty()) {
    // Nothing feasible on the coarse grid: search around the uniform distribution.
    for (std::size_t k = 0; k < m; ++k)
      centre.push_back(r.grouped ? static_cast<double>(r.groups[k].size()) / static_cast<double>(r.n)
                                 : 1.0 / static_cast<double>(m));
  }
  // Fine passes in a box that follows the maximizer, then one level finer so
  // that vertices off the 1e-3 lattice are approached too.
  for (const auto [step, half] : {std::pair{fine, box}, std::pair{fine / 10, box / 10}}) {
    for (int pass = 0; pass < 20; ++pass) {
      std::vector<double> lo(m), hi(m);
      for (std::size_t j = 0; j < m; ++j) {
        lo[j] = centre[j] - half;
        hi[j] = centre[j] + half;
      }
      walk(m, step, lo, hi, consider);
      if (best_v.empty() || best_v == centre) break;
      centre = best_v;
    }
  }
  return best;
}

inline double linear_value(const std::vector<double>& w, const std::vector<double>& l) {
  return std::inner_product(w.begin(), w.end(), l.begin(), 0.0);
}

inline double regularized_value(const Region& r, const std::vector<double>& w, const std::vector<double>& l,
                                double eta) {
  return linear_value(w, l) + (r.erm ? 0.0 : eta * entropy(w));
}

// w_i = min(c s_i, cap) by enumerating which entries are capped.
inline std::vector<double> cvar_kkt(const std::vector<double>& s, double cap) {
  const std::size_t n = s.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double free_mass = 1.0, free_score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U)
        free_mass -= cap;
      else
        free_score += s[i];
    }
    if (free_mass < -1e-12) continue;
    if (free_score == 0.0) {
      if (std::abs(free_mass) > 1e-12) continue;
      return std::vector<double>(n, cap);
    }
    const double c = free_mass / free_score;
    bool ok = c > 0.0;
    for (std::size_t i = 0; i < n && ok; ++i) {
      const double v = c * s[i];
      ok = (mask >> i & 1U) ? v >= cap * (1 - 1e-12) : v <= cap * (1 + 1e-12);
    }
    if (!ok) continue;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = (mask >> i & 1U) ? cap : c * s[i];
    return w;
  }
  return {};
}

// Minimum weighted zero-one error over every (feature, threshold, left, right)
// with thresholds at -inf, every data value and every midpoint.
inline double brute_stump_error(const raiforge::Dataset& d, const std::vector<double>& w) {
  double best = std::numeric_limits<double>::infinity();
  const int C = d.classes();
  for (std::size_t j = 0; j < d.dim(); ++j) {
    std::vector<double> cuts{-std::numeric_limits<double>::infinity()};
    std::vector<double> xs;
    for (std::size_t i = 0; i < d.size(); ++i) xs.push_back(d[i].features[j]);
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      cuts.push_back(xs[i]);
      if (i + 1 < xs.size()) cuts.push_back(0.5 * (xs[i] + xs[i + 1]));
    }
    for (double t : cuts)
      for (int a = 0; a < C; ++a)
        for (int b = 0; b < C; ++b) {
          double err = 0.0;
          for (std::size_t i = 0; i < d.size(); ++i) {
            const int p = d[i].features[j] <= t ? a : b;
            if (p != d[i].label) err += w[i];
          }
          best = std::min(best, err);
        }
  }
  return best;
}

// Textbook binary AdaBoost driven by an arbitrary weak learner.
struct ReferenceBoost {
  std::vector<std::vector<double>> weights;  // distribution before each round
  std::vector<double> alphas;
};

inline ReferenceBoost reference_adaboost(
    const raiforge::Dataset& d, std::size_t rounds,
    const std::function<raiforge::Hypothesis(const std::vector<double>&)>& learner) {
  ReferenceBoost out;
  const std::size_t n = d.size();
  std::vector<double> D(n, 1.0 / static_cast<double>(n));
  for (std::size_t t = 0; t < rounds; ++t) {
    out.weights.push_back(D);
    const auto h = learner(D);
    std::vector<int> wrong(n);
    double eps = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      wrong[i] = raiforge::predict(h, d[i].features) != d[i].label;
      if (wrong[i]) eps += D[i];
    }
    const double a = 0.5 * std::log((1 - eps) / eps);
    out.alphas.push_back(a);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      D[i] *= std::exp(wrong[i] ? a : -a);
      z += D[i];
    }
    for (double& x : D) x /= z;
  }
  return out;
}

}  // namespace oracle
