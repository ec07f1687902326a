#include "hanslens/explain.hpp"

#include <cmath>

#include "hanslens/error.hpp"

namespace hanslens {

std::array<double, 3> bag_relevance_shares(const std::array<double, 3>& standardized, double bag_score,
                                           const LrpConfig& config) {
  double positive = 0.0;
  for (double z : standardized) positive += std::max(0.0, z);
  std::array<double, 3> r{};
  if (positive > 0.0) {
    for (std::size_t m = 0; m < 3; ++m) r[m] = bag_score * std::max(0.0, standardized[m]) / positive;
  } else {
    const Tensor p = propagate_average_pool(bag_score, standardized, config);
    for (std::size_t m = 0; m < 3; ++m) r[m] = p[m];
  }
  return r;
}

namespace {

Heatmap explain_bag(const BaggedModel& bag, const Tensor& x, const LrpConfig& config) {
  const std::array<NeuralizedModel, 3> members{bag.kde.neuralized(), bag.autoencoder.neuralize(x),
                                               bag.deep.neuralized()};
  std::array<ForwardResult, 3> fwd;
  std::array<double, 3> z{};
  for (std::size_t m = 0; m < 3; ++m) {
    fwd[m] = model_forward(members[m], x);
    z[m] = bag.standardizers[m].apply(fwd[m].score);
  }
  const double o = average_pool_forward(AveragePool{3}, z);
  const auto shares = bag_relevance_shares(z, o, config);

  Tensor total(x.shape());
  for (std::size_t m = 0; m < 3; ++m) {
    if (shares[m] == 0.0) continue;
    const Tensor h = propagate_model(members[m], fwd[m].trace, shares[m], config);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += h[i];
  }
  return {std::move(total), "bag", {}};
}

}  // namespace

Heatmap explain(const Detector& detector, const Tensor& x, const LrpConfig& config) {
  Heatmap h;
  switch (detector.index()) {
    case 0: h = explain_model(std::get<0>(detector).neuralized(), x, config); break;
    case 1: h = explain_model(std::get<1>(detector).neuralize(x), x, config); break;
    case 2: h = explain_model(std::get<2>(detector).neuralized(), x, config); break;
    default: h = explain_bag(std::get<3>(detector), x, config); break;
  }
  if (!h.values.all_finite()) throw NumericalError("explanation produced non-finite relevance");
  h.detector_kind = detector_kind(detector);
  return h;
}

}  // namespace hanslens
