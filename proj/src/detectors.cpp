#include "hanslens/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "hanslens/error.hpp"
#include "hanslens/eval.hpp"
#include "hanslens/linalg.hpp"
#include "hanslens/rng.hpp"

namespace hanslens {

namespace {

void require_nonempty(std::span<const Tensor> s, const char* what) {
  if (s.empty()) throw ConfigError(std::string(what) + " split is empty");
}

void require_sorted_unique_grid(std::span<const double> grid, const char* what, bool allow_zero) {
  if (grid.empty()) throw ConfigError(std::string(what) + " grid is empty");
  for (double g : grid)
    if (!std::isfinite(g) || g < 0.0 || (!allow_zero && g == 0.0))
      throw ConfigError(std::string(what) + " grid contains an invalid value");
}

}  // namespace

Tensor stack_rows(std::span<const Tensor> samples) {
  if (samples.empty()) throw ConfigError("cannot stack an empty sample list");
  const std::size_t d = samples.front().size();
  std::vector<double> v;
  v.reserve(samples.size() * d);
  for (const auto& s : samples) {
    if (s.size() != d) throw ShapeError("samples of differing size cannot be stacked");
    v.insert(v.end(), s.values().begin(), s.values().end());
  }
  return Tensor({samples.size(), d}, std::move(v));
}

// --- KDE --------------------------------------------------------------------

KdeModel::KdeModel(Tensor points, double gamma, Shape input_shape) {
  if (points.rank() != 2 || points.rows() == 0) throw ShapeError("kde: points must be (N x d) with N >= 1");
  if (points.cols() != shape_size(input_shape)) throw ShapeError("kde: point width does not match input shape");
  network_.layers = {SquaredDistance{std::move(points)}, NegLogSumExp{gamma}};
  network_.input_shape = std::move(input_shape);
  network_.kind = "kde";
  network_.validate();
}

const Tensor& KdeModel::points() const { return std::get<SquaredDistance>(network_.layers[0]).templates; }
double KdeModel::gamma() const { return std::get<NegLogSumExp>(network_.layers[1]).gamma; }

double mean_pairwise_sqdist(const Tensor& points) {
  const std::size_t n = points.rows();
  if (n < 2) throw ConfigError("mean pairwise distance needs at least two points");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += squared_distance(points.row(i), points.row(j));
  return s / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

std::vector<double> default_gamma_grid(const Tensor& points) {
  const double dbar = mean_pairwise_sqdist(points);
  if (!(dbar > 0.0)) throw ConfigError("default gamma grid: training points are all identical");
  std::vector<double> grid;
  for (int i = -8; i <= 8; ++i) grid.push_back(std::ldexp(1.0, i) / dbar);
  return grid;
}

double kde_validation_loglik(const Tensor& points, std::span<const Tensor> validation, double gamma) {
  require_nonempty(validation, "validation");
  const double n = static_cast<double>(points.rows());
  const double d = static_cast<double>(points.cols());
  const SquaredDistance dist{points};
  const NegLogSumExp pool{gamma};
  double total = 0.0;
  for (const auto& x : validation) {
    const Tensor dj = squared_distance_forward(dist, x.values());
    // log sum_j exp(-gamma d_j) = -gamma * smin
    const double log_sum = -gamma * neg_lse_pool_forward(pool, dj.values());
    total += log_sum - std::log(n) + 0.5 * d * std::log(gamma / std::numbers::pi);
  }
  return total / static_cast<double>(validation.size());
}

KdeModel fit_kde(std::span<const Tensor> train, std::span<const Tensor> validation,
                 std::span<const double> gamma_grid) {
  require_nonempty(train, "train");
  require_nonempty(validation, "validation");
  require_sorted_unique_grid(gamma_grid, "gamma", false);
  Tensor points = stack_rows(train);

  std::vector<double> grid(gamma_grid.begin(), gamma_grid.end());
  std::sort(grid.begin(), grid.end());
  std::vector<GridPoint> selection;
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double ll = kde_validation_loglik(points, validation, grid[i]);
    selection.push_back({grid[i], ll});
    if (i == 0 || ll > selection[best].objective) best = i;
  }
  KdeModel model(std::move(points), grid[best], train.front().shape());
  model.selection = std::move(selection);
  return model;
}

double kde_score(const KdeModel& model, const Tensor& x) {
  if (x.size() != shape_size(model.input_shape())) throw ShapeError("kde_score: input shape mismatch");
  const auto& layers = model.neuralized().layers;
  const Tensor d = squared_distance_forward(std::get<SquaredDistance>(layers[0]), x.values());
  return neg_lse_pool_forward(std::get<NegLogSumExp>(layers[1]), d.values());
}

KdeApproxDiagnostics kde_mean_approx(const KdeModel& model, const Tensor& x) {
  const Tensor& pts = model.points();
  const std::size_t n = pts.rows(), d = pts.cols();
  if (x.size() != d) throw ShapeError("kde_mean_approx: input shape mismatch");

  KdeApproxDiagnostics diag;
  diag.mean = Tensor({d});
  double mean_sq_norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto r = pts.row(j);
    for (std::size_t i = 0; i < d; ++i) diag.mean[i] += r[i];
    mean_sq_norm += squared_norm(r);
    diag.mean_sqdist += squared_distance(x.values(), r);
  }
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < d; ++i) diag.mean[i] /= nn;
  mean_sq_norm /= nn;
  diag.mean_sqdist /= nn;

  const double constant = mean_sq_norm - squared_norm(diag.mean.values());
  diag.exact = kde_score(model, x);
  diag.approx = (squared_distance(x.values(), diag.mean.values()) + constant) - std::log(nn) / model.gamma();
  diag.residual = diag.exact - diag.approx;
  return diag;
}

// --- Autoencoder -------------------------------------------------------------

AutoencoderArchitecture AutoencoderArchitecture::standard(std::size_t input_dim, std::size_t bottleneck) {
  return {{input_dim, 128, bottleneck, 128, input_dim}, true, true};
}

void AutoencoderArchitecture::validate() const {
  if (widths.size() < 2) throw ConfigError("autoencoder needs at least two widths");
  if (widths.front() != widths.back()) throw ShapeError("autoencoder output width must equal input width");
  for (auto w : widths)
    if (w == 0) throw ConfigError("autoencoder widths must be positive");
}

std::vector<Layer> init_autoencoder(const AutoencoderArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  std::vector<Layer> layers;
  const std::size_t n_linear = arch.widths.size() - 1;
  for (std::size_t i = 0; i < n_linear; ++i) {
    const std::size_t in = arch.widths[i], out = arch.widths[i + 1];
    const bool hidden = i + 1 < n_linear;
    // He-uniform ahead of a ReLU, Glorot-uniform on the linear output layer.
    const double limit = hidden && arch.relu_hidden ? std::sqrt(6.0 / static_cast<double>(in))
                                                    : std::sqrt(6.0 / static_cast<double>(in + out));
    auto eng = make_engine(seed, "autoencoder/init", i);
    Tensor w({out, in});
    for (double& v : w.values()) v = (2.0 * uniform01(eng) - 1.0) * limit;
    Linear l{std::move(w), std::nullopt};
    if (arch.bias) l.bias = Tensor({out});
    layers.emplace_back(std::move(l));
    if (hidden && arch.relu_hidden) layers.emplace_back(Relu{});
  }
  return layers;
}

AutoencoderModel::AutoencoderModel(std::vector<Layer> network, Shape input_shape)
    : network_(std::move(network)), input_shape_(std::move(input_shape)) {
  const std::size_t d = shape_size(input_shape_);
  if (validate_stack(network_, d) != d) throw ShapeError("autoencoder output width must equal input width");
}

Tensor AutoencoderModel::reconstruct(const Tensor& x) const {
  if (x.size() != shape_size(input_shape_)) throw ShapeError("autoencoder: input shape mismatch");
  return stack_forward(network_, x);
}

NeuralizedModel AutoencoderModel::neuralize(const Tensor& x) const {
  const Tensor r = reconstruct(x);
  NeuralizedModel m;
  m.layers = {SquaredDistance{r.reshaped({1, r.size()})}};
  m.input_shape = input_shape_;
  m.kind = "autoencoder";
  m.class_name = class_name;
  return m;
}

double autoencoder_score(const AutoencoderModel& model, const Tensor& x) {
  return model_score(model.neuralize(x), x);
}

namespace {

struct AdamState {
  std::vector<std::vector<double>> m, v;  // per parameter tensor
  std::size_t step = 0;
};

// Parameter tensors of all Linear layers in a fixed order: weights, then bias.
std::vector<std::span<double>> parameter_views(std::vector<Layer>& layers) {
  std::vector<std::span<double>> views;
  for (auto& layer : layers)
    if (auto* l = std::get_if<Linear>(&layer)) {
      views.push_back(l->weights.values());
      if (l->bias) views.push_back(l->bias->values());
    }
  return views;
}

std::vector<std::span<const double>> gradient_views(const Gradients& g) {
  std::vector<std::span<const double>> views;
  for (const auto& lg : g.layers)
    if (lg) {
      views.push_back(lg->weights.values());
      if (lg->bias) views.push_back(lg->bias->values());
    }
  return views;
}

void adam_step(std::vector<Layer>& layers, const Gradients& grads, AdamState& state, const AdamConfig& cfg) {
  auto params = parameter_views(layers);
  const auto g = gradient_views(grads);
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double gi = g[p][i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      params[p][i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
    }
  }
}

}  // namespace

AutoencoderModel fit_autoencoder(std::span<const Tensor> train, std::span<const Tensor> validation,
                                 const AutoencoderArchitecture& arch, const AdamConfig& config) {
  require_nonempty(train, "train");
  if (arch.widths.front() != train.front().size())
    throw ShapeError("autoencoder input width does not match the data");
  return fit_autoencoder(train, validation, init_autoencoder(arch, derive_seed(config.seed, "autoencoder")),
                         config);
}

AutoencoderModel fit_autoencoder(std::span<const Tensor> train, std::span<const Tensor> validation,
                                 std::vector<Layer> initial, const AdamConfig& config) {
  require_nonempty(train, "train");
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  const Shape shape = train.front().shape();
  AutoencoderModel best(initial, shape);
  const auto selection_set = validation.empty() ? train : validation;

  std::vector<Layer> net = std::move(initial);
  std::vector<double> train_loss{reconstruction_loss(net, train)};
  std::vector<double> val_loss{reconstruction_loss(net, selection_set)};
  if (!std::isfinite(train_loss[0]) || !std::isfinite(val_loss[0]))
    throw NumericalError("autoencoder diverged at epoch 0 (non-finite loss)");
  double best_val = val_loss[0];
  std::size_t best_epoch = 0;

  AdamState state;
  std::vector<std::size_t> order(train.size());
  std::vector<Tensor> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto eng = make_engine(config.seed, "autoencoder/shuffle", epoch);
    std::shuffle(order.begin(), order.end(), eng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train[order[i]]);
      Gradients g;
      try {
        g = reconstruction_gradient(net, batch);
      } catch (const NumericalError&) {
        throw NumericalError("autoencoder diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
      }
      adam_step(net, g, state, config);
    }
    const double tl = reconstruction_loss(net, train);
    const double vl = reconstruction_loss(net, selection_set);
    if (!std::isfinite(tl) || !std::isfinite(vl))
      throw NumericalError("autoencoder diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
    train_loss.push_back(tl);
    val_loss.push_back(vl);
    if (vl < best_val) {
      best_val = vl;
      best_epoch = epoch;
      best = AutoencoderModel(net, shape);
    }
  }
  best.train_loss = std::move(train_loss);
  best.validation_loss = std::move(val_loss);
  best.best_epoch = best_epoch;
  return best;
}

// --- Deep one-class ----------------------------------------------------------

std::vector<Layer> random_backbone(std::size_t input_dim, std::span<const std::size_t> widths,
                                   std::uint64_t seed) {
  if (widths.empty()) throw ConfigError("backbone needs at least one layer width");
  std::vector<Layer> layers;
  std::size_t in = input_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::size_t out = widths[i];
    if (out == 0) throw ConfigError("backbone widths must be positive");
    auto eng = make_engine(seed, "backbone/layer", i);
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(in)));
    Tensor w({out, in});
    for (double& v : w.values()) v = normal(eng);
    layers.emplace_back(Linear{std::move(w), std::nullopt});
    layers.emplace_back(Relu{});
    in = out;
  }
  return layers;
}

void check_backbone(std::span<const Layer> backbone) {
  if (backbone.empty()) throw ConfigError("backbone has no layers");
  for (const auto& layer : backbone) {
    if (const auto* l = std::get_if<Linear>(&layer)) {
      if (l->bias) throw ConfigError("backbone linear layers must be bias-free");
    } else if (!std::holds_alternative<Relu>(layer)) {
      throw ConfigError("backbone supports only linear and relu layers, got " + layer_name(layer));
    }
  }
}

DeepOneClassModel::DeepOneClassModel(std::vector<Layer> backbone, Tensor whitening, double lambda,
                                     Shape input_shape)
    : lambda_(lambda) {
  check_backbone(backbone);
  const std::size_t f = validate_stack(backbone, shape_size(input_shape));
  if (whitening.rank() != 2 || whitening.rows() != f || whitening.cols() != f)
    throw ShapeError("whitening matrix must be (f x f) for feature width " + std::to_string(f));
  network_.layers = std::move(backbone);
  network_.layers.emplace_back(Linear{std::move(whitening), std::nullopt});
  network_.layers.emplace_back(SquaredDistance{Tensor({1, f})});
  network_.input_shape = std::move(input_shape);
  network_.kind = "deep";
  network_.validate();
}

std::span<const Layer> DeepOneClassModel::backbone() const {
  return std::span<const Layer>(network_.layers).first(network_.layers.size() - 2);
}

const Tensor& DeepOneClassModel::whitening() const {
  return std::get<Linear>(network_.layers[network_.layers.size() - 2]).weights;
}

Tensor DeepOneClassModel::features(const Tensor& x) const {
  const auto bb = backbone();
  return stack_forward(bb, x);
}

Tensor whitening_matrix(const Tensor& second_moment, double lambda) {
  return inverse_sqrt_shifted(second_moment, lambda);
}

std::vector<double> default_lambda_grid(const Tensor& second_moment) {
  const std::size_t f = second_moment.rows();
  double tr = 0.0;
  for (std::size_t i = 0; i < f; ++i) tr += second_moment.at(i, i);
  const double scale = tr > 0.0 ? tr / static_cast<double>(f) : 1.0;
  return {1e-3 * scale, 1e-2 * scale, 1e-1 * scale, scale};
}

DeepOneClassModel fit_deep_one_class(std::vector<Layer> backbone, std::span<const Tensor> train,
                                     std::span<const Tensor> validation_inliers,
                                     std::span<const Tensor> validation_outliers,
                                     std::span<const double> lambda_grid) {
  require_nonempty(train, "train");
  if (validation_inliers.empty() || validation_outliers.empty())
    throw ConfigError("deep one-class selection needs validation inliers and outliers");
  check_backbone(backbone);
  const Shape shape = train.front().shape();
  validate_stack(backbone, shape_size(shape));

  auto featurize = [&](std::span<const Tensor> xs) {
    std::vector<Tensor> f;
    f.reserve(xs.size());
    for (const auto& x : xs) f.push_back(stack_forward(backbone, x));
    return stack_rows(f);
  };
  const Tensor s = second_moment(featurize(train));
  const Tensor val_in = featurize(validation_inliers);
  const Tensor val_out = featurize(validation_outliers);

  std::vector<double> grid = lambda_grid.empty() ? default_lambda_grid(s)
                                                 : std::vector<double>(lambda_grid.begin(), lambda_grid.end());
  require_sorted_unique_grid(grid, "lambda", true);
  std::sort(grid.begin(), grid.end());

  std::vector<int> labels(val_in.rows(), 0);
  labels.resize(val_in.rows() + val_out.rows(), 1);

  std::vector<GridPoint> selection;
  std::optional<Tensor> best_w;
  double best_lambda = 0.0, best_roc = -1.0;
  for (double lambda : grid) {
    Tensor w;
    try {
      w = whitening_matrix(s, lambda);
    } catch (const NumericalError&) {
      continue;  // singular at this shift
    }
    const Linear wl{w, std::nullopt};
    std::vector<double> scores;
    for (const Tensor* m : {&val_in, &val_out})
      for (std::size_t r = 0; r < m->rows(); ++r) scores.push_back(squared_norm(linear_forward(wl, m->row(r)).values()));
    const double roc = roc_auc(scores, labels);
    selection.push_back({lambda, roc});
    if (roc > best_roc) {
      best_roc = roc;
      best_lambda = lambda;
      best_w = std::move(w);
    }
  }
  if (!best_w) throw NumericalError("no lambda in the grid yields a finite whitening");
  DeepOneClassModel model(std::move(backbone), std::move(*best_w), best_lambda, shape);
  model.selection = std::move(selection);
  return model;
}

double deep_score(const DeepOneClassModel& model, const Tensor& x) { return model_score(model.neuralized(), x); }

// --- Bag ---------------------------------------------------------------------

Standardizer standardize_scores(std::span<const double> training_scores) {
  if (training_scores.size() < 2) throw ConfigError("standardization needs at least two scores");
  const double n = static_cast<double>(training_scores.size());
  const double mean = sum(training_scores) / n;
  double var = 0.0;
  for (double s : training_scores) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / n);
  if (!(sd > 1e-12) || !std::isfinite(sd)) throw NumericalError("degenerate score distribution");
  return {mean, sd};
}

std::array<double, 3> BaggedModel::member_scores(const Tensor& x) const {
  return {kde_score(kde, x), autoencoder_score(autoencoder, x), deep_score(deep, x)};
}

std::array<double, 3> BaggedModel::standardized_scores(const Tensor& x) const {
  const auto raw = member_scores(x);
  return {standardizers[0].apply(raw[0]), standardizers[1].apply(raw[1]), standardizers[2].apply(raw[2])};
}

BaggedModel fit_bag(KdeModel kde, AutoencoderModel autoencoder, DeepOneClassModel deep,
                    std::span<const Tensor> train) {
  require_nonempty(train, "train");
  if (kde.input_shape() != autoencoder.input_shape() || kde.input_shape() != deep.input_shape())
    throw ShapeError("bag members have differing input shapes");
  std::array<std::vector<double>, 3> scores;
  for (const auto& x : train) {
    scores[0].push_back(kde_score(kde, x));
    scores[1].push_back(autoencoder_score(autoencoder, x));
    scores[2].push_back(deep_score(deep, x));
  }
  std::array<Standardizer, 3> st{standardize_scores(scores[0]), standardize_scores(scores[1]),
                                 standardize_scores(scores[2])};
  std::string cls = kde.class_name;
  return BaggedModel{std::move(kde), std::move(autoencoder), std::move(deep), st, std::move(cls)};
}

double bag_score(const BaggedModel& bag, const Tensor& x) {
  if (x.size() != shape_size(bag.kde.input_shape())) throw ShapeError("bag_score: input shape mismatch");
  const auto z = bag.standardized_scores(x);
  return average_pool_forward(AveragePool{3}, z);
}

// --- Variant dispatch ----------------------------------------------------------

std::string detector_kind(const Detector& detector) {
  switch (detector.index()) {
    case 0: return "kde";
    case 1: return "autoencoder";
    case 2: return "deep";
    default: return "bag";
  }
}

const Shape& detector_input_shape(const Detector& detector) {
  return std::visit(
      [](const auto& d) -> const Shape& {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, BaggedModel>)
          return d.kde.input_shape();
        else
          return d.input_shape();
      },
      detector);
}

double score(const Detector& detector, const Tensor& x) {
  switch (detector.index()) {
    case 0: return kde_score(std::get<0>(detector), x);
    case 1: return autoencoder_score(std::get<1>(detector), x);
    case 2: return deep_score(std::get<2>(detector), x);
    default: return bag_score(std::get<3>(detector), x);
  }
}

}  // namespace hanslens
