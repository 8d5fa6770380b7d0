#include "rai_forge/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rai_forge/data.hpp"
#include "rai_forge/error.hpp"
#include "rai_forge/rng.hpp"

namespace raiforge {

namespace {

constexpr double kTieTol = 1e-12;
constexpr std::size_t kCheckpointEvery = 50;

void check_weights(const Dataset& data, std::span<const double> w) {
  if (w.size() != data.size()) throw InvalidArgument("weight vector length does not match dataset");
  for (double x : w)
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("sample weights must be finite and nonnegative");
  if (!(std::accumulate(w.begin(), w.end(), 0.0) > 0.0)) throw InvalidArgument("sample weights sum to zero");
}

int argmax_label(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_dim(std::size_t expected, std::size_t got) {
  if (expected != got)
    throw InvalidArgument("feature dimension mismatch: model expects " + std::to_string(expected) +
                          ", got " + std::to_string(got));
}

// Softmax cross-entropy; writes dL/dscores into grad when non-null.
double cross_entropy(std::span<const double> s, int label, std::vector<double>* grad) {
  const double m = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double v : s) z += std::exp(v - m);
  const double lse = m + std::log(z);
  if (grad) {
    grad->resize(s.size());
    for (std::size_t c = 0; c < s.size(); ++c) (*grad)[c] = std::exp(s[c] - lse);
    (*grad)[static_cast<std::size_t>(label)] -= 1.0;
  }
  return lse - s[static_cast<std::size_t>(label)];
}

// Parameter view shared by the SGD learners.
struct ScoreModel {
  virtual ~ScoreModel() = default;
  virtual std::vector<double>& params() = 0;
  virtual void forward(std::span<const double> x, std::vector<double>& s) = 0;
  // Accumulate scale * dL/dparams given dL/dscores for the last forward input.
  virtual void backward(std::span<const double> x, const std::vector<double>& ds, double scale,
                        std::vector<double>& grad) = 0;
  virtual Hypothesis freeze(const std::vector<double>& p) const = 0;
  // Copy of p predicting the class prior: output weights zeroed, output bias = log_prior.
  virtual std::vector<double> prior(const std::vector<double>& p, const std::vector<double>& log_prior) const = 0;
};

struct LinearTrainer final : ScoreModel {
  int d, C;
  std::vector<double> p;  // W (C x d) then b (C)

  LinearTrainer(int dim, int classes) : d(dim), C(classes), p(static_cast<std::size_t>(C * (d + 1)), 0.0) {}
  std::vector<double>& params() override { return p; }
  void forward(std::span<const double> x, std::vector<double>& s) override {
    s.assign(static_cast<std::size_t>(C), 0.0);
    for (int c = 0; c < C; ++c) {
      double v = p[static_cast<std::size_t>(C * d + c)];
      for (int j = 0; j < d; ++j) v += p[static_cast<std::size_t>(c * d + j)] * x[static_cast<std::size_t>(j)];
      s[static_cast<std::size_t>(c)] = v;
    }
  }
  void backward(std::span<const double> x, const std::vector<double>& ds, double scale,
                std::vector<double>& g) override {
    for (int c = 0; c < C; ++c) {
      const double k = scale * ds[static_cast<std::size_t>(c)];
      for (int j = 0; j < d; ++j) g[static_cast<std::size_t>(c * d + j)] += k * x[static_cast<std::size_t>(j)];
      g[static_cast<std::size_t>(C * d + c)] += k;
    }
  }
  std::vector<double> prior(const std::vector<double>&, const std::vector<double>& lp) const override {
    std::vector<double> q(p.size(), 0.0);
    std::copy(lp.begin(), lp.end(), q.begin() + C * d);
    return q;
  }
  Hypothesis freeze(const std::vector<double>& q) const override {
    LinearModel m;
    m.dim = d;
    m.classes = C;
    m.weights.assign(q.begin(), q.begin() + C * d);
    m.bias.assign(q.begin() + C * d, q.end());
    return m;
  }
};

struct MlpTrainer final : ScoreModel {
  int d, H, C;
  std::size_t o_b1, o_w2, o_b2;
  std::vector<double> p;
  std::vector<double> pre, act;

  MlpTrainer(int dim, int hidden, int classes, SplitMix64& rng) : d(dim), H(hidden), C(classes) {
    o_b1 = static_cast<std::size_t>(H * d);
    o_w2 = o_b1 + static_cast<std::size_t>(H);
    o_b2 = o_w2 + static_cast<std::size_t>(C * H);
    p.resize(o_b2 + static_cast<std::size_t>(C));
    const double a1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double a2 = 1.0 / std::sqrt(static_cast<double>(H));
    for (std::size_t i = 0; i < o_w2; ++i) p[i] = a1 * (2.0 * rng.uniform() - 1.0);
    for (std::size_t i = o_w2; i < p.size(); ++i) p[i] = a2 * (2.0 * rng.uniform() - 1.0);
  }
  std::vector<double>& params() override { return p; }
  void forward(std::span<const double> x, std::vector<double>& s) override {
    pre.assign(static_cast<std::size_t>(H), 0.0);
    act.assign(static_cast<std::size_t>(H), 0.0);
    for (int h = 0; h < H; ++h) {
      double v = p[o_b1 + static_cast<std::size_t>(h)];
      for (int j = 0; j < d; ++j) v += p[static_cast<std::size_t>(h * d + j)] * x[static_cast<std::size_t>(j)];
      pre[static_cast<std::size_t>(h)] = v;
      act[static_cast<std::size_t>(h)] = v > 0.0 ? v : 0.0;
    }
    s.assign(static_cast<std::size_t>(C), 0.0);
    for (int c = 0; c < C; ++c) {
      double v = p[o_b2 + static_cast<std::size_t>(c)];
      for (int h = 0; h < H; ++h) v += p[o_w2 + static_cast<std::size_t>(c * H + h)] * act[static_cast<std::size_t>(h)];
      s[static_cast<std::size_t>(c)] = v;
    }
  }
  void backward(std::span<const double> x, const std::vector<double>& ds, double scale,
                std::vector<double>& g) override {
    for (int h = 0; h < H; ++h) {
      double dact = 0.0;
      for (int c = 0; c < C; ++c) {
        const double k = scale * ds[static_cast<std::size_t>(c)];
        g[o_w2 + static_cast<std::size_t>(c * H + h)] += k * act[static_cast<std::size_t>(h)];
        dact += k * p[o_w2 + static_cast<std::size_t>(c * H + h)];
      }
      if (pre[static_cast<std::size_t>(h)] <= 0.0) continue;
      for (int j = 0; j < d; ++j) g[static_cast<std::size_t>(h * d + j)] += dact * x[static_cast<std::size_t>(j)];
      g[o_b1 + static_cast<std::size_t>(h)] += dact;
    }
    for (int c = 0; c < C; ++c) g[o_b2 + static_cast<std::size_t>(c)] += scale * ds[static_cast<std::size_t>(c)];
  }
  std::vector<double> prior(const std::vector<double>& q, const std::vector<double>& lp) const override {
    std::vector<double> out(q);
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(o_w2), out.begin() + static_cast<std::ptrdiff_t>(o_b2), 0.0);
    std::copy(lp.begin(), lp.end(), out.begin() + static_cast<std::ptrdiff_t>(o_b2));
    return out;
  }
  Hypothesis freeze(const std::vector<double>& q) const override {
    MlpModel m;
    m.dim = d;
    m.hidden = H;
    m.classes = C;
    m.w1.assign(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(o_b1));
    m.b1.assign(q.begin() + static_cast<std::ptrdiff_t>(o_b1), q.begin() + static_cast<std::ptrdiff_t>(o_w2));
    m.w2.assign(q.begin() + static_cast<std::ptrdiff_t>(o_w2), q.begin() + static_cast<std::ptrdiff_t>(o_b2));
    m.b2.assign(q.begin() + static_cast<std::ptrdiff_t>(o_b2), q.end());
    return m;
  }
};

struct Fit {
  double logistic = 0.0;
  double error = 0.0;
};

// Weighted logistic loss and weighted zero-one error of the current parameters.
Fit evaluate(ScoreModel& model, const Dataset& data, std::span<const double> w) {
  std::vector<double> s;
  Fit f;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (w[i] == 0.0) continue;
    model.forward(data[i].features, s);
    f.logistic += w[i] * cross_entropy(s, data[i].label, nullptr);
    if (argmax_label(s) != data[i].label) f.error += w[i];
  }
  return f;
}

// Checkpoints are ranked by weighted zero-one error, then logistic loss; only
// checkpoints whose logistic loss does not exceed the initialization's compete.
Hypothesis train_sgd(ScoreModel& model, const Dataset& data, std::span<const double> w,
                     const TrainBudget& budget, SplitMix64& rng) {
  const std::size_t n = data.size();
  const double nd = static_cast<double>(n);
  const std::size_t batch = std::min(budget.batch_size, n);
  std::vector<double>& p = model.params();
  std::vector<double> grad(p.size()), s, ds;

  const Fit init = evaluate(model, data, w);
  std::vector<double> best = p;
  Fit best_fit = init;
  auto consider = [&]() {
    const Fit f = evaluate(model, data, w);
    if (!std::isfinite(f.logistic) || f.logistic > init.logistic) return;
    if (f.error < best_fit.error - kTieTol ||
        (f.error <= best_fit.error + kTieTol && f.logistic < best_fit.logistic)) {
      best_fit = f;
      best = p;
    }
  };

  std::vector<double> mass(static_cast<std::size_t>(data.classes()), 0.0);
  for (std::size_t i = 0; i < n; ++i) mass[static_cast<std::size_t>(data[i].label)] += w[i];
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  std::vector<double> log_prior(mass.size());
  for (std::size_t c = 0; c < mass.size(); ++c)
    log_prior[c] = mass[c] > 0.0 ? std::log(mass[c] / total) : -std::log(1e9);
  const std::vector<double> start = p;
  p = model.prior(start, log_prior);
  consider();
  p = start;

  for (std::size_t it = 1; it <= budget.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t i = rng.below(n);
      const double scale = nd * w[i] / static_cast<double>(batch);
      if (scale == 0.0) continue;
      model.forward(data[i].features, s);
      cross_entropy(s, data[i].label, &ds);
      model.backward(data[i].features, ds, scale, grad);
    }
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= budget.learning_rate * grad[k];
    if (it % kCheckpointEvery == 0 || it == budget.iterations) consider();
  }
  return model.freeze(best);
}

}  // namespace

Stump fit_stump(const Dataset& data, std::span<const double> w) {
  check_weights(data, w);
  const std::size_t n = data.size();
  const std::size_t C = static_cast<std::size_t>(data.classes());
  std::vector<double> total(C, 0.0);
  for (std::size_t i = 0; i < n; ++i) total[static_cast<std::size_t>(data[i].label)] += w[i];
  const double mass = std::accumulate(total.begin(), total.end(), 0.0);

  const int majority = argmax_label(total);
  Stump best{0, 0.0, majority, majority};
  double best_err = mass - total[static_cast<std::size_t>(majority)];

  std::vector<std::size_t> order(n);
  std::vector<double> left(C), right(C);
  for (std::size_t j = 0; j < data.dim(); ++j) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return data[a].features[j] < data[b].features[j]; });
    std::fill(left.begin(), left.end(), 0.0);
    for (std::size_t r = 0; r + 1 < n; ++r) {
      const std::size_t i = order[r];
      left[static_cast<std::size_t>(data[i].label)] += w[i];
      const double a = data[i].features[j];
      const double b = data[order[r + 1]].features[j];
      if (!(a < b)) continue;
      for (std::size_t c = 0; c < C; ++c) right[c] = total[c] - left[c];
      const int l = argmax_label(left);
      const int rr = argmax_label(right);
      const double err = mass - left[static_cast<std::size_t>(l)] - right[static_cast<std::size_t>(rr)];
      if (err < best_err - kTieTol) {
        double t = 0.5 * (a + b);
        if (!(t < b)) t = a;
        best_err = err;
        best = Stump{static_cast<int>(j), t, l, rr};
      }
    }
  }
  return best;
}

Hypothesis best_response(const Dataset& data, std::span<const double> w, const LearnerSpec& spec) {
  check_weights(data, w);
  if (spec.kind == LearnerKind::Stump) return fit_stump(data, w);
  if (spec.budget.iterations < 1) throw InvalidArgument("training budget needs at least one iteration");
  if (spec.budget.batch_size < 1) throw InvalidArgument("batch size must be at least one");
  if (!(spec.budget.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  SplitMix64 rng(spec.budget.seed);
  const int d = static_cast<int>(data.dim());
  if (spec.kind == LearnerKind::Linear) {
    LinearTrainer model(d, data.classes());
    return train_sgd(model, data, w, spec.budget, rng);
  }
  if (spec.hidden < 1) throw InvalidArgument("MLP hidden width must be at least one");
  MlpTrainer model(d, spec.hidden, data.classes(), rng);
  return train_sgd(model, data, w, spec.budget, rng);
}

std::vector<double> scores(const Hypothesis& h, std::span<const double> x) {
  return std::visit(
      [&](const auto& m) -> std::vector<double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Stump>) {
          if (m.feature < 0 || static_cast<std::size_t>(m.feature) >= x.size())
            throw InvalidArgument("stump feature index exceeds input dimension");
          const int label = x[static_cast<std::size_t>(m.feature)] <= m.threshold ? m.left : m.right;
          std::vector<double> s(static_cast<std::size_t>(std::max(m.left, m.right) + 1), 0.0);
          s[static_cast<std::size_t>(label)] = 1.0;
          return s;
        } else if constexpr (std::is_same_v<T, LinearModel>) {
          check_dim(static_cast<std::size_t>(m.dim), x.size());
          std::vector<double> s(m.bias);
          for (int c = 0; c < m.classes; ++c)
            for (int j = 0; j < m.dim; ++j)
              s[static_cast<std::size_t>(c)] += m.weights[static_cast<std::size_t>(c * m.dim + j)] * x[static_cast<std::size_t>(j)];
          return s;
        } else {
          check_dim(static_cast<std::size_t>(m.dim), x.size());
          std::vector<double> act(m.b1);
          for (int h2 = 0; h2 < m.hidden; ++h2) {
            for (int j = 0; j < m.dim; ++j)
              act[static_cast<std::size_t>(h2)] += m.w1[static_cast<std::size_t>(h2 * m.dim + j)] * x[static_cast<std::size_t>(j)];
            act[static_cast<std::size_t>(h2)] = std::max(0.0, act[static_cast<std::size_t>(h2)]);
          }
          std::vector<double> s(m.b2);
          for (int c = 0; c < m.classes; ++c)
            for (int h2 = 0; h2 < m.hidden; ++h2)
              s[static_cast<std::size_t>(c)] += m.w2[static_cast<std::size_t>(c * m.hidden + h2)] * act[static_cast<std::size_t>(h2)];
          return s;
        }
      },
      h);
}

int predict(const Hypothesis& h, std::span<const double> x) {
  if (const auto* s = std::get_if<Stump>(&h)) {
    if (s->feature < 0 || static_cast<std::size_t>(s->feature) >= x.size())
      throw InvalidArgument("stump feature index exceeds input dimension");
    return x[static_cast<std::size_t>(s->feature)] <= s->threshold ? s->left : s->right;
  }
  return argmax_label(scores(h, x));
}

std::vector<int> predictions(const Hypothesis& h, const Dataset& data) {
  std::vector<int> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict(h, data[i].features);
  return out;
}

std::vector<double> loss_row(const Hypothesis& h, const Dataset& data) {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict(h, data[i].features) == data[i].label ? 0.0 : 1.0;
  return out;
}

double weighted_logistic_loss(const Hypothesis& h, const Dataset& data, std::span<const double> w) {
  if (std::holds_alternative<Stump>(h)) throw InvalidArgument("stumps have no logistic loss");
  check_weights(data, w);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (w[i] != 0.0) total += w[i] * cross_entropy(scores(h, data[i].features), data[i].label, nullptr);
  return total;
}

double weighted_error(std::span<const double> losses, std::span<const double> w) {
  return std::inner_product(losses.begin(), losses.end(), w.begin(), 0.0);
}

std::string kind_name(const Hypothesis& h) {
  switch (h.index()) {
    case 0: return "stump";
    case 1: return "linear";
    default: return "mlp";
  }
}

}  // namespace raiforge
