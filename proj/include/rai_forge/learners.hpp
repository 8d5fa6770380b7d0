#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace raiforge {

class Dataset;

/// Axis-aligned threshold rule: x[feature] <= threshold -> left, else right.
/// A constant hypothesis has left == right.
struct Stump {
  int feature = 0;
  double threshold = 0.0;
  int left = 0;
  int right = 0;

  bool operator==(const Stump&) const = default;
};

/// Multiclass linear scores W x + b; weights are C x d, row-major.
struct LinearModel {
  int dim = 0;
  int classes = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  bool operator==(const LinearModel&) const = default;
};

/// One hidden rectifier layer: scores = W2 relu(W1 x + b1) + b2.
struct MlpModel {
  int dim = 0;
  int hidden = 0;
  int classes = 0;
  std::vector<double> w1;  // hidden x dim
  std::vector<double> b1;
  std::vector<double> w2;  // classes x hidden
  std::vector<double> b2;

  bool operator==(const MlpModel&) const = default;
};

using Hypothesis = std::variant<Stump, LinearModel, MlpModel>;

enum class LearnerKind { Stump, Linear, Mlp };

struct TrainBudget {
  std::size_t iterations = 1000;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::Stump;
  int hidden = 4;  ///< MLP width
  TrainBudget budget;
};

/// Fit a hypothesis against sample weights w (a probability vector).
///
/// Stumps minimize weighted zero-one loss exactly. Linear and MLP learners run
/// minibatch SGD on the weighted multiclass logistic loss, each sample's
/// gradient scaled by n * w_i. Checkpoints (every 50 steps, plus the
/// initialization and a class-prior predictor) whose logistic loss does not
/// exceed the initialization's compete; the lowest weighted zero-one error wins.
Hypothesis best_response(const Dataset& data, std::span<const double> w, const LearnerSpec& spec);

/// Exhaustive weighted zero-one stump search.
Stump fit_stump(const Dataset& data, std::span<const double> w);

std::vector<double> scores(const Hypothesis& h, std::span<const double> x);
/// argmax of scores, lowest label on ties.
int predict(const Hypothesis& h, std::span<const double> x);

/// Per-sample zero-one losses.
std::vector<double> loss_row(const Hypothesis& h, const Dataset& data);
std::vector<int> predictions(const Hypothesis& h, const Dataset& data);

/// Weighted multiclass logistic loss sum_i w_i CE(h(x_i), y_i); stumps are not score models.
double weighted_logistic_loss(const Hypothesis& h, const Dataset& data, std::span<const double> w);

/// Weighted zero-one error.
double weighted_error(std::span<const double> losses, std::span<const double> w);

std::string kind_name(const Hypothesis& h);

}  // namespace raiforge
