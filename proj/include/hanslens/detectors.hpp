#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hanslens/neural.hpp"
#include "hanslens/tensor.hpp"

namespace hanslens {

// ---------------------------------------------------------------------------
// Kernel density estimation: [SquaredDistance(training points) -> NegLogSumExp(gamma)]

struct GridPoint {
  double value = 0.0;
  double objective = 0.0;  // validation log-likelihood (KDE) or ROC (deep)
};

class KdeModel {
public:
  KdeModel(Tensor points, double gamma, Shape input_shape);

  const Tensor& points() const;
  double gamma() const;
  const Shape& input_shape() const { return network_.input_shape; }
  const NeuralizedModel& neuralized() const { return network_; }

  std::string class_name;
  std::vector<GridPoint> selection;  // filled by fit_kde

private:
  NeuralizedModel network_;
};

// Mean pairwise squared distance among the rows of `points`.
double mean_pairwise_sqdist(const Tensor& points);

// 17 points 2^i / mean_pairwise_sqdist, i = -8..8.
std::vector<double> default_gamma_grid(const Tensor& points);

// Mean over `validation` of log p(x) with the Gaussian normalizer included.
double kde_validation_loglik(const Tensor& points, std::span<const Tensor> validation, double gamma);

// Stacks flattened samples as rows of an (N x d) tensor.
Tensor stack_rows(std::span<const Tensor> samples);

KdeModel fit_kde(std::span<const Tensor> train, std::span<const Tensor> validation,
                 std::span<const double> gamma_grid);

double kde_score(const KdeModel& model, const Tensor& x);

struct KdeApproxDiagnostics {
  Tensor mean;               // inlier mean x-bar
  double mean_sqdist = 0.0;  // d-bar: mean of ||x - x_j||^2
  double approx = 0.0;       // ||x - x-bar||^2 - log(N)/gamma + const
  double exact = 0.0;        // soft-min score
  double residual = 0.0;     // exact - approx
};

// Distance-to-the-mean linearization of the KDE score, constant written out.
KdeApproxDiagnostics kde_mean_approx(const KdeModel& model, const Tensor& x);

// ---------------------------------------------------------------------------
// Autoencoder: o(x) = ||x - r(x)||^2, neuralized per-input as SquaredDistance(r(x)).

struct AutoencoderArchitecture {
  // Layer widths from input to output; first and last must match.
  std::vector<std::size_t> widths;
  bool relu_hidden = true;
  bool bias = true;

  // d -> 128 -> bottleneck -> 128 -> d
  static AutoencoderArchitecture standard(std::size_t input_dim, std::size_t bottleneck = 16);
  void validate() const;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
};

std::vector<Layer> init_autoencoder(const AutoencoderArchitecture& arch, std::uint64_t seed);

class AutoencoderModel {
public:
  AutoencoderModel(std::vector<Layer> network, Shape input_shape);

  const std::vector<Layer>& network() const { return network_; }
  const Shape& input_shape() const { return input_shape_; }

  Tensor reconstruct(const Tensor& x) const;
  // Single SquaredDistance layer whose template is r(x).
  NeuralizedModel neuralize(const Tensor& x) const;

  std::string class_name;
  std::vector<double> train_loss;       // per epoch, index 0 = initialization
  std::vector<double> validation_loss;  // per epoch, index 0 = initialization
  std::size_t best_epoch = 0;

private:
  std::vector<Layer> network_;
  Shape input_shape_;
};

// Adam on mean squared reconstruction error; keeps the parameters with the
// lowest validation loss seen (the initialization counts as epoch 0).
// When `validation` is empty the training loss is used for selection.
AutoencoderModel fit_autoencoder(std::span<const Tensor> train, std::span<const Tensor> validation,
                                 const AutoencoderArchitecture& arch, const AdamConfig& config);
AutoencoderModel fit_autoencoder(std::span<const Tensor> train, std::span<const Tensor> validation,
                                 std::vector<Layer> initial, const AdamConfig& config);

double autoencoder_score(const AutoencoderModel& model, const Tensor& x);

// ---------------------------------------------------------------------------
// Deep one-class: [backbone Linear/ReLU ... -> Linear(W) -> SquaredDistance(origin)]

// Seeded bias-free Linear/ReLU projection stack: input_dim -> widths[0] -> ...
std::vector<Layer> random_backbone(std::size_t input_dim, std::span<const std::size_t> widths,
                                   std::uint64_t seed);

// Throws ConfigError unless every layer is a bias-free Linear or a ReLU.
void check_backbone(std::span<const Layer> backbone);

class DeepOneClassModel {
public:
  DeepOneClassModel(std::vector<Layer> backbone, Tensor whitening, double lambda, Shape input_shape);

  const NeuralizedModel& neuralized() const { return network_; }
  std::span<const Layer> backbone() const;
  const Tensor& whitening() const;
  double lambda() const { return lambda_; }
  const Shape& input_shape() const { return network_.input_shape; }

  Tensor features(const Tensor& x) const;

  std::string class_name;
  std::vector<GridPoint> selection;  // filled by fit_deep_one_class

private:
  NeuralizedModel network_;
  double lambda_;
};

// W(lambda) = (S + lambda I)^(-1/2).
Tensor whitening_matrix(const Tensor& second_moment, double lambda);

// Ties in validation ROC go to the smallest lambda.
DeepOneClassModel fit_deep_one_class(std::vector<Layer> backbone, std::span<const Tensor> train,
                                     std::span<const Tensor> validation_inliers,
                                     std::span<const Tensor> validation_outliers,
                                     std::span<const double> lambda_grid);

// {1e-3, 1e-2, 1e-1, 1} times the mean eigenvalue tr(S)/f of the training features.
std::vector<double> default_lambda_grid(const Tensor& second_moment);

double deep_score(const DeepOneClassModel& model, const Tensor& x);

// ---------------------------------------------------------------------------
// Bag of standardized scores.

struct Standardizer {
  double mean = 0.0;
  double stddev = 1.0;

  double apply(double score) const { return (score - mean) / stddev; }
};

// Population mean and standard deviation; degenerate spreads are rejected.
Standardizer standardize_scores(std::span<const double> training_scores);

struct BaggedModel {
  KdeModel kde;
  AutoencoderModel autoencoder;
  DeepOneClassModel deep;
  std::array<Standardizer, 3> standardizers;  // kde, autoencoder, deep
  std::string class_name;

  std::array<double, 3> member_scores(const Tensor& x) const;
  std::array<double, 3> standardized_scores(const Tensor& x) const;
};

// Standardizers computed on the members' scores over `train`.
BaggedModel fit_bag(KdeModel kde, AutoencoderModel autoencoder, DeepOneClassModel deep,
                    std::span<const Tensor> train);

double bag_score(const BaggedModel& bag, const Tensor& x);

// ---------------------------------------------------------------------------

using Detector = std::variant<KdeModel, AutoencoderModel, DeepOneClassModel, BaggedModel>;

std::string detector_kind(const Detector& detector);
const Shape& detector_input_shape(const Detector& detector);
double score(const Detector& detector, const Tensor& x);

}  // namespace hanslens
