#pragma once
// Client-side models: linear or one-hidden-layer tanh network with
// analytic gradients, plus the proximal local SGD step.

#include "sfl/metrics.hpp"
#include "sfl/numerics.hpp"

namespace sfl {

enum class Task { classification, forecasting };

struct ModelSpec {
  Task task = Task::classification;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::size_t hidden_dim = 0;  // 0 = linear model
};

// Flattened parameter count. Layout is layer-by-layer, weights (row-major,
// input x output) then biases.
std::size_t param_count(const ModelSpec& spec);

struct Model {
  ModelSpec spec;
  ParamVector params;
};

struct Batch {
  DenseMatrix inputs;           // batch_size x input_dim
  std::vector<int> labels;      // classification
  DenseMatrix targets;          // forecasting, batch_size x output_dim
  std::size_t size() const { return inputs.rows; }
};

// Per-client z-score statistics (traffic task), fit on the train split.
struct Normalization {
  double mean = 0.0;
  double stdev = 1.0;
  double denorm(double x) const { return x * stdev + mean; }
};

// Weights ~ N(0, 1/fan_in), biases zero. Same stream gives the same model.
Model init_model(const ModelSpec& spec, RngStream& stream);

struct ForwardResult {
  double loss = 0.0;
  DenseMatrix predictions;  // class probabilities or forecast values
};

// Classification: mean cross-entropy of softmax outputs.
// Forecasting: mean squared error over batch x output_dim.
ForwardResult forward_loss(const Model& model, const Batch& batch);

// Analytic gradient of forward_loss w.r.t. params, same layout.
ParamVector grad(const Model& model, const Batch& batch);

// One step of v <- v - eta [ grad F + lambda (v - w) + lambda (v - u) ],
// i.e. the proximal local update with R(a,b) = 1/2 |a-b|^2 anchors.
Model local_sgd_step(const Model& model, const Batch& batch, double eta,
                     double lambda, const ParamVector& w_global,
                     const ParamVector& u_personal);

// Classification: accuracy fraction (argmax, ties to lowest class index).
// Forecasting: MAE/RMSE/MAPE on de-normalized values when denorm is given.
TaskMetrics evaluate(const Model& model, const Batch& batch,
                     const Normalization* denorm = nullptr);

}  // namespace sfl
