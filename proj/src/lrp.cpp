#include "hanslens/lrp.hpp"

#include <cmath>

#include "hanslens/error.hpp"

namespace hanslens {

void LrpConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("lrp gamma must be finite and >= 0");
  if (!(epsilon > 0.0)) throw ConfigError("lrp epsilon must be > 0");
}

double stabilize(double den, double eps) noexcept {
  if (std::abs(den) >= eps) return den;
  return den + (den < 0.0 ? -eps : eps);
}

Tensor propagate_average_pool(double relevance, std::span<const double> pooled,
                              const LrpConfig& config) {
  if (pooled.empty()) throw ShapeError("average pool relevance: empty pool");
  const double den = stabilize(sum(pooled), config.epsilon);
  std::vector<double> r(pooled.size());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = relevance * pooled[j] / den;
  return Tensor::vector(std::move(r));
}

Tensor propagate_neg_lse(double relevance, std::span<const double> distances, double stiffness) {
  if (!(stiffness > 0.0)) throw ConfigError("neglse relevance: stiffness must be positive");
  auto w = softargmin(distances, stiffness);
  for (double& v : w) v *= relevance;
  return Tensor::vector(std::move(w));
}

Tensor propagate_squared_distance(std::span<const double> relevance, std::span<const double> a,
                                  const Tensor& templates) {
  const std::size_t k_count = templates.rows(), in = templates.cols();
  if (relevance.size() != k_count) throw ShapeError("sqdist relevance: one value per template expected");
  if (a.size() != in) throw ShapeError("sqdist relevance: activation width mismatch");
  std::vector<double> r(in, 0.0);
  std::vector<double> diff2(in);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (relevance[k] == 0.0) continue;
    const auto mu = templates.row(k);
    double dist = 0.0;
    for (std::size_t j = 0; j < in; ++j) {
      const double d = a[j] - mu[j];
      diff2[j] = d * d;
      dist += diff2[j];
    }
    if (dist == 0.0)
      throw NumericalError("sqdist relevance: template " + std::to_string(k) +
                           " coincides with the input but carries relevance");
    const double c = relevance[k] / dist;
    for (std::size_t j = 0; j < in; ++j) r[j] += c * diff2[j];
  }
  return Tensor::vector(std::move(r));
}

namespace {

Tensor ratio_rule(std::span<const double> relevance, std::span<const double> a, const Tensor& weights,
                  double gamma, double eps) {
  const std::size_t out = weights.rows(), in = weights.cols();
  if (relevance.size() != out) throw ShapeError("linear relevance: one value per output expected");
  if (a.size() != in) throw ShapeError("linear relevance: activation width mismatch");
  std::vector<double> r(in, 0.0);
  for (std::size_t k = 0; k < out; ++k) {
    if (relevance[k] == 0.0) continue;
    const auto w = weights.row(k);
    double den = 0.0;
    for (std::size_t j = 0; j < in; ++j) den += a[j] * (w[j] + gamma * std::max(0.0, w[j]));
    const double c = relevance[k] / stabilize(den, eps);
    for (std::size_t j = 0; j < in; ++j) r[j] += a[j] * (w[j] + gamma * std::max(0.0, w[j])) * c;
  }
  return Tensor::vector(std::move(r));
}

}  // namespace

Tensor propagate_whitening_transition(std::span<const double> relevance, std::span<const double> a,
                                      const Tensor& weights, const LrpConfig& config) {
  return ratio_rule(relevance, a, weights, 0.0, config.epsilon);
}

Tensor propagate_linear_relu_gamma(std::span<const double> relevance, std::span<const double> a,
                                   const Tensor& weights, const LrpConfig& config) {
  return ratio_rule(relevance, a, weights, config.gamma, config.epsilon);
}

Tensor propagate_model(const NeuralizedModel& model, const ActivationTrace& trace,
                       double output_relevance, const LrpConfig& config) {
  config.validate();
  if (trace.size() != model.layers.size()) throw ShapeError("trace length does not match layer count");
  Tensor r = Tensor::vector({output_relevance});
  for (std::size_t i = model.layers.size(); i-- > 0;) {
    const auto& layer = model.layers[i];
    const auto a = trace.layers[i].input.values();
    if (const auto* l = std::get_if<Linear>(&layer)) {
      if (l->bias) throw ConfigError("relevance propagation through biased linear layers is not supported");
      const bool gated = i + 1 < model.layers.size() && std::holds_alternative<Relu>(model.layers[i + 1]);
      r = gated ? propagate_linear_relu_gamma(r.values(), a, l->weights, config)
                : propagate_whitening_transition(r.values(), a, l->weights, config);
    } else if (std::holds_alternative<Relu>(layer)) {
      // Relevance on ReLU outputs is handed to the Linear below unchanged.
    } else if (const auto* l = std::get_if<SquaredDistance>(&layer)) {
      r = propagate_squared_distance(r.values(), a, l->templates);
    } else if (const auto* l = std::get_if<NegLogSumExp>(&layer)) {
      r = propagate_neg_lse(r[0], a, l->gamma);
    } else if (std::holds_alternative<AveragePool>(layer)) {
      r = propagate_average_pool(r[0], a, config);
    }
  }
  return r.reshaped(model.input_shape);
}

Heatmap explain_model(const NeuralizedModel& model, const Tensor& x, const LrpConfig& config) {
  const auto fwd = model_forward(model, x);
  Heatmap h{propagate_model(model, fwd.trace, fwd.score, config), model.kind, {}};
  if (!h.values.all_finite()) throw NumericalError("explanation produced non-finite relevance");
  return h;
}

}  // namespace hanslens
