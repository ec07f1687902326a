#include "hanslens/neural.hpp"

#include <algorithm>
#include <cmath>

#include "hanslens/error.hpp"

namespace hanslens {

namespace {

template <class... F>
struct overloaded : F... {
  using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw ShapeError(std::string(what) + ": expected input of size " + std::to_string(want) +
                     ", got " + std::to_string(got));
}

}  // namespace

std::string layer_name(const Layer& layer) {
  return std::visit(overloaded{
                        [](const Linear&) { return std::string("linear"); },
                        [](const Relu&) { return std::string("relu"); },
                        [](const SquaredDistance&) { return std::string("sqdist"); },
                        [](const NegLogSumExp&) { return std::string("neglse"); },
                        [](const AveragePool&) { return std::string("avgpool"); },
                    },
                    layer);
}

Tensor linear_forward(const Linear& layer, std::span<const double> a) {
  const std::size_t in = layer.in(), out = layer.out();
  require_size(a.size(), in, "linear");
  std::vector<double> z(out);
  for (std::size_t k = 0; k < out; ++k) {
    const auto w = layer.weights.row(k);
    double s = 0.0;
    for (std::size_t j = 0; j < in; ++j) s += a[j] * w[j];
    if (layer.bias) s += (*layer.bias)[k];
    z[k] = s;
  }
  return Tensor::vector(std::move(z));
}

Tensor relu_forward(std::span<const double> a) {
  std::vector<double> z(a.begin(), a.end());
  for (double& v : z) v = std::max(0.0, v);
  return Tensor::vector(std::move(z));
}

Tensor squared_distance_forward(const SquaredDistance& layer, std::span<const double> a) {
  require_size(a.size(), layer.in(), "sqdist");
  std::vector<double> d(layer.count());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = squared_distance(a, layer.templates.row(k));
  return Tensor::vector(std::move(d));
}

double neg_lse_pool_forward(const NegLogSumExp& layer, std::span<const double> d) {
  if (d.empty()) throw ShapeError("neglse: empty pool");
  if (!(layer.gamma > 0.0)) throw ConfigError("neglse: stiffness must be positive");
  const double m = *std::min_element(d.begin(), d.end());
  double s = 0.0;
  for (double v : d) s += std::exp(-layer.gamma * (v - m));
  return m - std::log(s) / layer.gamma;
}

double average_pool_forward(const AveragePool& layer, std::span<const double> a) {
  require_size(a.size(), layer.size, "avgpool");
  if (a.empty()) throw ShapeError("avgpool: empty pool");
  return sum(a) / static_cast<double>(a.size());
}

std::vector<double> softargmin(std::span<const double> d, double gamma) {
  if (d.empty()) throw ShapeError("softargmin: empty pool");
  const double m = *std::min_element(d.begin(), d.end());
  std::vector<double> w(d.size());
  double s = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    w[j] = std::exp(-gamma * (d[j] - m));
    s += w[j];
  }
  for (double& v : w) v /= s;
  return w;
}

Tensor layer_forward(const Layer& layer, std::span<const double> a) {
  return std::visit(
      overloaded{
          [&](const Linear& l) { return linear_forward(l, a); },
          [&](const Relu&) { return relu_forward(a); },
          [&](const SquaredDistance& l) { return squared_distance_forward(l, a); },
          [&](const NegLogSumExp& l) { return Tensor::vector({neg_lse_pool_forward(l, a)}); },
          [&](const AveragePool& l) { return Tensor::vector({average_pool_forward(l, a)}); },
      },
      layer);
}

std::size_t layer_output_size(const Layer& layer, std::size_t input_size) {
  return std::visit(
      overloaded{
          [&](const Linear& l) {
            if (l.weights.rank() != 2) throw ShapeError("linear: weights must be rank 2");
            if (l.bias && l.bias->size() != l.out()) throw ShapeError("linear: bias length mismatch");
            require_size(input_size, l.in(), "linear");
            return l.out();
          },
          [&](const Relu&) { return input_size; },
          [&](const SquaredDistance& l) {
            if (l.templates.rank() != 2) throw ShapeError("sqdist: templates must be rank 2");
            if (!l.templates.all_finite()) throw NumericalError("sqdist: non-finite templates");
            require_size(input_size, l.in(), "sqdist");
            return l.count();
          },
          [&](const NegLogSumExp& l) {
            if (!(l.gamma > 0.0) || !std::isfinite(l.gamma))
              throw ConfigError("neglse: stiffness must be positive and finite");
            if (input_size == 0) throw ShapeError("neglse: empty pool");
            return std::size_t{1};
          },
          [&](const AveragePool& l) {
            if (l.size == 0) throw ConfigError("avgpool: pool size must be positive");
            require_size(input_size, l.size, "avgpool");
            return std::size_t{1};
          },
      },
      layer);
}

std::size_t validate_stack(std::span<const Layer> layers, std::size_t input_size) {
  std::size_t width = input_size;
  for (const auto& layer : layers) width = layer_output_size(layer, width);
  return width;
}

Tensor stack_forward(std::span<const Layer> layers, const Tensor& x, ActivationTrace* trace) {
  Tensor a = x.flattened();
  if (trace) {
    trace->layers.clear();
    trace->layers.reserve(layers.size());
  }
  for (const auto& layer : layers) {
    Tensor next = layer_forward(layer, a.values());
    if (trace) trace->layers.push_back({a, next});
    a = std::move(next);
  }
  return a;
}

void NeuralizedModel::validate() const {
  if (layers.empty()) throw ShapeError("neuralized model has no layers");
  const std::size_t out = validate_stack(layers, shape_size(input_shape));
  if (out != 1) throw ShapeError("neuralized model must end in a scalar, got width " + std::to_string(out));
}

static void check_input(const NeuralizedModel& model, const Tensor& x) {
  if (x.size() != shape_size(model.input_shape))
    throw ShapeError("input of shape " + shape_str(x.shape()) + " does not match model input " +
                     shape_str(model.input_shape));
}

ForwardResult model_forward(const NeuralizedModel& model, const Tensor& x) {
  check_input(model, x);
  ForwardResult r;
  const Tensor out = stack_forward(model.layers, x, &r.trace);
  if (out.size() != 1) throw ShapeError("model output is not a scalar");
  r.score = out[0];
  return r;
}

double model_score(const NeuralizedModel& model, const Tensor& x) {
  check_input(model, x);
  const Tensor out = stack_forward(model.layers, x);
  if (out.size() != 1) throw ShapeError("model output is not a scalar");
  return out[0];
}

double reconstruction_loss(std::span<const Layer> layers, std::span<const Tensor> batch) {
  if (batch.empty()) throw ConfigError("reconstruction loss over an empty batch");
  double loss = 0.0;
  for (const auto& x : batch) {
    const Tensor r = stack_forward(layers, x);
    loss += squared_distance(r.values(), x.values());
  }
  return loss / static_cast<double>(batch.size());
}

Gradients reconstruction_gradient(std::span<const Layer> layers, std::span<const Tensor> batch) {
  if (batch.empty()) throw ConfigError("gradient over an empty batch");
  Gradients g;
  g.layers.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (const auto* l = std::get_if<Linear>(&layers[i])) {
      LinearGradient lg{Tensor(l->weights.shape()), std::nullopt};
      if (l->bias) lg.bias = Tensor(l->bias->shape());
      g.layers[i] = std::move(lg);
    } else if (!std::holds_alternative<Relu>(layers[i])) {
      throw ConfigError("reconstruction gradient supports only linear and relu layers, got " +
                        layer_name(layers[i]));
    }
  }

  const double scale = 2.0 / static_cast<double>(batch.size());
  ActivationTrace trace;
  for (const auto& x : batch) {
    const Tensor r = stack_forward(layers, x, &trace);
    if (r.size() != x.size()) throw ShapeError("reconstruction width differs from input width");
    g.loss += squared_distance(r.values(), x.values());

    std::vector<double> delta(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) delta[i] = scale * (r[i] - x[i]);

    for (std::size_t li = layers.size(); li-- > 0;) {
      const auto& in = trace.layers[li].input;
      if (const auto* l = std::get_if<Linear>(&layers[li])) {
        auto& lg = *g.layers[li];
        const std::size_t nin = l->in(), nout = l->out();
        std::vector<double> prev(nin, 0.0);
        for (std::size_t k = 0; k < nout; ++k) {
          const double dk = delta[k];
          if (dk == 0.0) continue;
          auto gw = lg.weights.row(k);
          const auto w = l->weights.row(k);
          for (std::size_t j = 0; j < nin; ++j) {
            gw[j] += dk * in[j];
            prev[j] += dk * w[j];
          }
          if (lg.bias) (*lg.bias)[k] += dk;
        }
        delta = std::move(prev);
      } else {
        for (std::size_t j = 0; j < delta.size(); ++j)
          if (!(in[j] > 0.0)) delta[j] = 0.0;
      }
    }
  }
  g.loss /= static_cast<double>(batch.size());
  if (!std::isfinite(g.loss)) throw NumericalError("non-finite reconstruction loss");
  return g;
}

}  // namespace hanslens
