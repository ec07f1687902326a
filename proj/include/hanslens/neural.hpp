#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hanslens/tensor.hpp"

namespace hanslens {

// Dense affine map. weights is (out x in); bias, when present, has `out` entries.
struct Linear {
  Tensor weights;
  std::optional<Tensor> bias;

  std::size_t in() const { return weights.cols(); }
  std::size_t out() const { return weights.rows(); }
};

struct Relu {};

// K distances ||a - mu_k||^2 to the rows of `templates` (K x in).
struct SquaredDistance {
  Tensor templates;

  std::size_t count() const { return templates.rows(); }
  std::size_t in() const { return templates.cols(); }
};

// Soft minimum -1/gamma log sum_j exp(-gamma d_j).
struct NegLogSumExp {
  double gamma = 1.0;
};

struct AveragePool {
  std::size_t size = 1;
};

using Layer = std::variant<Linear, Relu, SquaredDistance, NegLogSumExp, AveragePool>;

std::string layer_name(const Layer& layer);

Tensor linear_forward(const Linear& layer, std::span<const double> a);
Tensor relu_forward(std::span<const double> a);
Tensor squared_distance_forward(const SquaredDistance& layer, std::span<const double> a);
double neg_lse_pool_forward(const NegLogSumExp& layer, std::span<const double> d);
double average_pool_forward(const AveragePool& layer, std::span<const double> a);

// Normalized exp(-gamma d_j), computed with the min-shift.
std::vector<double> softargmin(std::span<const double> d, double gamma);

// Single layer on flattened input; scalar-valued layers return a 1-element tensor.
Tensor layer_forward(const Layer& layer, std::span<const double> a);

// Output width of `layer` given input width, or ShapeError.
std::size_t layer_output_size(const Layer& layer, std::size_t input_size);

// Checks every layer parameter and the width chain; returns the final width.
std::size_t validate_stack(std::span<const Layer> layers, std::size_t input_size);

struct LayerTrace {
  Tensor input;
  Tensor output;
};

struct ActivationTrace {
  std::vector<LayerTrace> layers;
  std::size_t size() const noexcept { return layers.size(); }
};

// Runs the stack on flattened x. When `trace` is non-null every layer's
// input and output are recorded.
Tensor stack_forward(std::span<const Layer> layers, const Tensor& x,
                     ActivationTrace* trace = nullptr);

// A layer stack whose final output is the scalar outlier score.
struct NeuralizedModel {
  std::vector<Layer> layers;
  Shape input_shape;
  std::string kind;
  std::string class_name;

  void validate() const;
};

struct ForwardResult {
  double score = 0.0;
  ActivationTrace trace;
};

ForwardResult model_forward(const NeuralizedModel& model, const Tensor& x);

// Score only, no trace allocation. Same arithmetic as model_forward.
double model_score(const NeuralizedModel& model, const Tensor& x);

struct LinearGradient {
  Tensor weights;
  std::optional<Tensor> bias;
};

struct Gradients {
  double loss = 0.0;
  // Aligned with the layer list; engaged only for Linear layers.
  std::vector<std::optional<LinearGradient>> layers;
};

// Mean squared reconstruction loss (1/B) sum_b ||f(x_b) - x_b||^2 over the
// batch and its gradient with respect to every Linear weight and bias.
// Only Linear and ReLU layers are differentiable here.
Gradients reconstruction_gradient(std::span<const Layer> layers,
                                  std::span<const Tensor> batch);

// Loss value alone (used by the finite-difference oracle and validation).
double reconstruction_loss(std::span<const Layer> layers, std::span<const Tensor> batch);

}  // namespace hanslens
