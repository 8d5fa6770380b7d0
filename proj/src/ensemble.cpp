#include "rai_forge/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rai_forge/data.hpp"
#include "rai_forge/error.hpp"
#include "rai_forge/uncertainty.hpp"

namespace raiforge {

Ensemble::Ensemble(std::vector<EnsembleMember> members, bool normalized)
    : members_(std::move(members)), normalized_(normalized) {
  for (const auto& m : members_)
    if (!(m.mass >= 0.0) || !std::isfinite(m.mass)) throw InvalidArgument("ensemble masses must be finite and >= 0");
  if (normalized_ && std::abs(total_mass() - 1.0) > 1e-9) throw InvalidArgument("normalized ensemble masses must sum to 1");
}

void Ensemble::add(Hypothesis h, double mass) {
  if (!(mass >= 0.0) || !std::isfinite(mass)) throw InvalidArgument("ensemble masses must be finite and >= 0");
  members_.push_back({std::move(h), mass});
  normalized_ = false;
}

double Ensemble::total_mass() const {
  double s = 0.0;
  for (const auto& m : members_) s += m.mass;
  return s;
}

Ensemble Ensemble::normalized() const {
  const double total = total_mass();
  if (!(total > 0.0)) throw InvalidArgument("ensemble has no positive mass");
  std::vector<EnsembleMember> out = members_;
  for (auto& m : out) m.mass /= total;
  Ensemble e;
  e.members_ = std::move(out);
  e.normalized_ = true;
  return e;
}

namespace {

// Vote shares per sample: shares[i][y] = P_Q[h(x_i) = y].
std::vector<std::vector<double>> vote_shares(const Ensemble& q, const Dataset& data) {
  const double total = q.total_mass();
  if (!(total > 0.0)) throw InvalidArgument("ensemble has no positive mass");
  std::vector<std::vector<double>> shares(data.size(), std::vector<double>(static_cast<std::size_t>(data.classes()), 0.0));
  for (const auto& m : q.members()) {
    if (m.mass == 0.0) continue;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const int y = predict(m.hypothesis, data[i].features);
      auto& row = shares[i];
      if (static_cast<std::size_t>(y) >= row.size()) row.resize(static_cast<std::size_t>(y) + 1, 0.0);
      row[static_cast<std::size_t>(y)] += m.mass / total;
    }
  }
  return shares;
}

int plurality(const std::vector<double>& share) {
  return static_cast<int>(std::max_element(share.begin(), share.end()) - share.begin());
}

}  // namespace

std::vector<double> mean_loss(const Ensemble& q, const Dataset& data) {
  const auto shares = vote_shares(q, data);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto y = static_cast<std::size_t>(data[i].label);
    out[i] = std::max(0.0, 1.0 - (y < shares[i].size() ? shares[i][y] : 0.0));
  }
  return out;
}

double randomized_risk(const Ensemble& q, const Dataset& data, const UncertaintySet& set) {
  return linear_max_oracle(set, mean_loss(q, data)).value;
}

int derandomize_predict(const Ensemble& q, std::span<const double> x) {
  std::vector<double> votes;
  for (const auto& m : q.members()) {
    if (m.mass == 0.0) continue;
    const auto y = static_cast<std::size_t>(predict(m.hypothesis, x));
    if (y >= votes.size()) votes.resize(y + 1, 0.0);
    votes[y] += m.mass;
  }
  if (votes.empty()) throw InvalidArgument("ensemble has no positive mass");
  return plurality(votes);
}

std::vector<double> deterministic_losses(const Ensemble& q, const Dataset& data) {
  const auto shares = vote_shares(q, data);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = plurality(shares[i]) == data[i].label ? 0.0 : 1.0;
  return out;
}

double deterministic_risk(const Ensemble& q, const Dataset& data, const UncertaintySet& set) {
  return linear_max_oracle(set, deterministic_losses(q, data)).value;
}

double gamma_q(const Ensemble& q, const Dataset& data) {
  const auto shares = vote_shares(q, data);
  double worst = 1.0;
  for (const auto& s : shares) worst = std::min(worst, *std::max_element(s.begin(), s.end()));
  return 1.0 / worst;
}

MetricsReport metrics(const Ensemble& q, const Dataset& data, const UncertaintySet& set) {
  const auto shares = vote_shares(q, data);
  MetricsReport r;
  std::vector<double> det(data.size()), rnd(data.size());
  double worst_share = 1.0;
  std::map<int, std::pair<double, double>> by_class, by_group;  // (errors, count)
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = shares[i];
    const auto y = static_cast<std::size_t>(data[i].label);
    det[i] = plurality(s) == data[i].label ? 0.0 : 1.0;
    rnd[i] = std::max(0.0, 1.0 - (y < s.size() ? s[y] : 0.0));
    worst_share = std::min(worst_share, *std::max_element(s.begin(), s.end()));
    auto& c = by_class[data[i].label];
    c.first += det[i];
    c.second += 1.0;
    if (data[i].group) {
      auto& g = by_group[*data[i].group];
      g.first += det[i];
      g.second += 1.0;
    }
  }
  r.average = 100.0 * std::accumulate(det.begin(), det.end(), 0.0) / static_cast<double>(data.size());
  for (const auto& [label, ec] : by_class) {
    r.per_class[label] = 100.0 * ec.first / ec.second;
    r.worst_class = std::max(r.worst_class, r.per_class[label]);
  }
  if (data.grouped()) {
    double worst = 0.0;
    for (const auto& [g, ec] : by_group) {
      r.per_group[g] = 100.0 * ec.first / ec.second;
      worst = std::max(worst, r.per_group[g]);
    }
    r.worst_group = worst;
  }
  r.randomized_risk = 100.0 * linear_max_oracle(set, rnd).value;
  r.deterministic_risk = 100.0 * linear_max_oracle(set, det).value;
  r.gamma_q = 1.0 / worst_share;
  return r;
}

}  // namespace raiforge
