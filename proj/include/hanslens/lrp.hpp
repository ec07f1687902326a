#pragma once

#include <span>
#include <string>

#include "hanslens/neural.hpp"
#include "hanslens/tensor.hpp"

namespace hanslens {

struct LrpConfig {
  // Gamma-rule preference for positive weights in Linear/ReLU layers.
  double gamma = 0.25;
  // Denominators smaller than this in magnitude get pushed away from zero.
  double epsilon = 1e-9;

  void validate() const;
};

// den when |den| >= eps, otherwise den + eps * sign(den) with sign(0) = +1.
double stabilize(double den, double eps) noexcept;

// Pixel-wise attribution of one score.
struct Heatmap {
  Tensor values;
  std::string detector_kind;
  std::string sample_id;
};

// R_j = R * a_j / sum a.
Tensor propagate_average_pool(double relevance, std::span<const double> pooled,
                              const LrpConfig& config = {});

// R_j = softargmin_j(d) * R.
Tensor propagate_neg_lse(double relevance, std::span<const double> distances, double stiffness);

// R_j = sum_k R_k (a_j - mu_kj)^2 / ||a - mu_k||^2. Throws NumericalError when
// a template with nonzero relevance coincides with `a`.
Tensor propagate_squared_distance(std::span<const double> relevance, std::span<const double> a,
                                  const Tensor& templates);

// R_j = sum_k a_j w_jk / (sum_j' a_j' w_j'k) * R_k, with `weights` stored (out x in).
Tensor propagate_whitening_transition(std::span<const double> relevance, std::span<const double> a,
                                      const Tensor& weights, const LrpConfig& config = {});

// Gamma rule: R_j = sum_k a_j (w_jk + g w_jk^+) / sum_j' a_j' (w_j'k + g w_j'k^+) * R_k.
Tensor propagate_linear_relu_gamma(std::span<const double> relevance, std::span<const double> a,
                                   const Tensor& weights, const LrpConfig& config = {});

// Backward pass through a recorded trace starting from `output_relevance` at
// the scalar output. Linear layers followed by ReLU use the gamma rule; any
// other Linear layer uses the whitening-transition rule. Returns relevance
// reshaped to the model input shape.
Tensor propagate_model(const NeuralizedModel& model, const ActivationTrace& trace,
                       double output_relevance, const LrpConfig& config = {});

// Forward pass, then relevance o(x) propagated back to the input.
Heatmap explain_model(const NeuralizedModel& model, const Tensor& x, const LrpConfig& config = {});

}  // namespace hanslens
