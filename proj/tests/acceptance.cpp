// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hanslens/cli.hpp"
#include "hanslens/data.hpp"
#include "hanslens/detectors.hpp"
#include "hanslens/error.hpp"
#include "hanslens/eval.hpp"
#include "hanslens/explain.hpp"
#include "hanslens/linalg.hpp"
#include "hanslens/lrp.hpp"
#include "hanslens/neural.hpp"
#include "hanslens/rng.hpp"

using namespace hanslens;
namespace fs = std::filesystem;

namespace {

// Tolerances and time budgets.
constexpr double kRuleTol = 1e-9;
constexpr double kRuleSeconds = 10.0;
constexpr double kExactModelTol = 1e-6;  // kde, autoencoder
constexpr double kStackModelTol = 1e-3;  // deep, bag
constexpr double kEndToEndSeconds = 30.0;
constexpr double kOneHotTol = 1e-6;
constexpr double kGapFactor = 50.0;
constexpr double kCosineMin = 0.99;
constexpr double kDemoGammaFactor = 3.0;  // KDE stiffness times mean pairwise distance
constexpr double kDemoSeconds = 60.0;
constexpr double kGradientTol = 1e-4;
constexpr double kWhiteningTol = 1e-8;
constexpr double kBagTol = 1e-12;
constexpr double kStandardizedTol = 1e-9;
constexpr double kSuiteSeconds = 300.0;
constexpr std::uint64_t kSeed = 20260101;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

double uniform(Engine& eng, double lo, double hi) { return lo + (hi - lo) * uniform01(eng); }

std::size_t uniform_size(Engine& eng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(eng);
}

double normal(Engine& eng) { return std::normal_distribution<double>(0.0, 1.0)(eng); }

std::vector<double> draw(Engine& eng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform(eng, lo, hi);
  return v;
}

Tensor gaussian_matrix(Engine& eng, std::size_t rows, std::size_t cols) {
  Tensor m({rows, cols});
  for (double& v : m.values()) v = normal(eng);
  return m;
}

double rel_diff(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), std::numeric_limits<double>::min());
}

double cosine(const Tensor& a, const Tensor& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// --- 1 ---------------------------------------------------------------------

Outcome rule_conservation() {
  const auto t0 = Clock::now();
  const LrpConfig cfg;
  constexpr int kTrials = 1000;
  std::map<std::string, double> worst;
  std::size_t redraws = 0;

  // Rejects draws whose denominators would trip the stabilizer.
  auto unstabilized = [&](const std::vector<double>& dens) {
    for (double v : dens)
      if (std::abs(v) < cfg.epsilon) return false;
    return true;
  };

  for (int t = 0; t < kTrials; ++t) {
    {
      Engine eng = make_engine(kSeed, "accept/pool", t);
      std::vector<double> a;
      do {
        a = draw(eng, uniform_size(eng, 1, 16), 0.0, 1.0);
        ++redraws;
      } while (!unstabilized({sum(a)}));
      --redraws;
      const double r = uniform(eng, 0.1, 2.0) * (uniform01(eng) < 0.5 ? -1.0 : 1.0);
      worst["pool"] = std::max(worst["pool"], rel_diff(sum(propagate_average_pool(r, a, cfg).values()), r));
    }
    {
      Engine eng = make_engine(kSeed, "accept/lse", t);
      const auto d = draw(eng, uniform_size(eng, 1, 64), 0.0, 10.0);
      const double g = std::pow(10.0, uniform(eng, -3.0, 3.0));
      const double r = uniform(eng, 0.1, 2.0) * (uniform01(eng) < 0.5 ? -1.0 : 1.0);
      worst["neg-lse"] = std::max(worst["neg-lse"], rel_diff(sum(propagate_neg_lse(r, d, g).values()), r));
    }
    {
      Engine eng = make_engine(kSeed, "accept/sqdist", t);
      const std::size_t k = uniform_size(eng, 1, 16), n = uniform_size(eng, 1, 32);
      const Tensor mu = gaussian_matrix(eng, k, n);
      std::vector<double> a(n);
      for (double& v : a) v = normal(eng);
      const auto r = draw(eng, k, 0.0, 1.0);
      worst["sqdist"] =
          std::max(worst["sqdist"], rel_diff(sum(propagate_squared_distance(r, a, mu).values()), sum(r)));
    }
    for (const bool gamma_rule : {false, true}) {
      Engine eng = make_engine(kSeed, gamma_rule ? "accept/gamma" : "accept/whiten", t);
      const std::size_t n = uniform_size(eng, 1, 32), k = uniform_size(eng, 1, 16);
      LrpConfig c = cfg;
      if (gamma_rule) c.gamma = uniform(eng, 0.0, 1.0);
      Tensor w;
      std::vector<double> a;
      for (;;) {
        w = gaussian_matrix(eng, k, n);
        a = draw(eng, n, 0.0, 1.0);
        std::vector<double> dens(k, 0.0);
        for (std::size_t o = 0; o < k; ++o)
          for (std::size_t j = 0; j < n; ++j) {
            const double wj = w.at(o, j);
            dens[o] += a[j] * (gamma_rule ? wj + c.gamma * std::max(0.0, wj) : wj);
          }
        if (unstabilized(dens)) break;
        ++redraws;
      }
      const auto r = draw(eng, k, 0.0, 1.0);
      const Tensor in = gamma_rule ? propagate_linear_relu_gamma(r, a, w, c) : propagate_whitening_transition(r, a, w, c);
      auto& slot = worst[gamma_rule ? "gamma" : "whitening"];
      slot = std::max(slot, rel_diff(sum(in.values()), sum(r)));
    }
  }
  const double secs = seconds_since(t0);
  bool ok = secs < kRuleSeconds;
  std::string detail;
  for (const auto& [rule, err] : worst) {
    ok = ok && err <= kRuleTol;
    detail += fmt("%s %.1e  ", rule.c_str(), err);
  }
  detail += fmt("(limit %.0e; %d instances per rule, %zu redraws; %.2f s, limit %.0f s)", kRuleTol, kTrials, redraws,
                secs, kRuleSeconds);
  return {ok, detail};
}

// --- fitted stripe detectors, shared by 2 and 9 ------------------------------

struct Fitted {
  Dataset data;
  std::vector<Detector> detectors;  // kde, autoencoder, deep, bag
  double fit_seconds = 0.0;
};

const Fitted& fitted() {
  static const Fitted f = [] {
    const auto t0 = Clock::now();
    Fitted r;
    SynthSpec spec;
    spec.kind = SynthKind::stripe;
    spec.seed = kSeed;
    r.data = generate_synthetic(spec);
    const auto train = Dataset::images(r.data.train);
    const auto val = Dataset::images(r.data.val);
    const auto val_out = Dataset::images(r.data.val_outliers);
    const std::size_t d = train.front().size();

    KdeModel kde = fit_kde(train, val, default_gamma_grid(stack_rows(train)));
    AdamConfig adam;
    adam.seed = derive_seed(kSeed, "accept/autoencoder");
    AutoencoderModel ae = fit_autoencoder(train, val, AutoencoderArchitecture::standard(d), adam);
    const std::vector<std::size_t> widths{128};
    DeepOneClassModel deep =
        fit_deep_one_class(random_backbone(d, widths, derive_seed(kSeed, "accept/backbone")), train, val, val_out, {});
    BaggedModel bag = fit_bag(kde, ae, deep, val);
    r.detectors = {std::move(kde), std::move(ae), std::move(deep), std::move(bag)};
    r.fit_seconds = seconds_since(t0);
    return r;
  }();
  return f;
}

// --- 2 ---------------------------------------------------------------------

Outcome end_to_end_conservation() {
  const auto t0 = Clock::now();
  const Fitted& f = fitted();
  std::vector<const Sample*> samples;
  for (const auto& s : f.data.test) samples.push_back(&s);
  for (std::size_t i = 0; samples.size() < 100; ++i) samples.push_back(&f.data.val[i]);

  bool ok = true;
  std::string detail;
  for (const auto& det : f.detectors) {
    const std::string kind = detector_kind(det);
    const double tol = (kind == "kde" || kind == "autoencoder") ? kExactModelTol : kStackModelTol;
    double err = 0.0;
    for (const Sample* s : samples) {
      const double o = score(det, s->image);
      err = std::max(err, rel_diff(sum(explain(det, s->image).values.values()), o));
    }
    ok = ok && err <= tol;
    detail += fmt("%s %.1e/%.0e  ", kind.c_str(), err, tol);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kEndToEndSeconds;
  detail += fmt("(%zu samples each; fit+explain %.2f s, limit %.0f s)", samples.size(), secs, kEndToEndSeconds);
  return {ok, detail};
}

// --- 3 ---------------------------------------------------------------------

Outcome softargmin_limit() {
  constexpr int kTrials = 1000;
  double worst = 0.0;
  for (int t = 0; t < kTrials; ++t) {
    Engine eng = make_engine(kSeed, "accept/softargmin", t);
    auto d = draw(eng, uniform_size(eng, 2, 50), 0.0, 100.0);
    auto sorted = d;
    std::sort(sorted.begin(), sorted.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < sorted.size(); ++i) gap = std::min(gap, sorted[i] - sorted[i - 1]);
    if (gap == 0.0) continue;
    const std::size_t best = std::min_element(d.begin(), d.end()) - d.begin();
    for (double factor : {1.0, 2.0, 10.0, 1000.0}) {
      const Tensor p = propagate_neg_lse(1.0, d, factor * kGapFactor / gap);
      for (std::size_t j = 0; j < d.size(); ++j) worst = std::max(worst, std::abs(p[j] - (j == best ? 1.0 : 0.0)));
    }
  }
  return {worst <= kOneHotTol,
          fmt("sup-norm to one-hot %.1e (limit %.0e) at gamma in {1,2,10,1000} x %.0f/gap, %d draws", worst, kOneHotTol,
              kGapFactor, kTrials)};
}

// --- 4 ---------------------------------------------------------------------

Outcome mean_approximation() {
  constexpr std::size_t kDim = 50, kPoints = 200, kQueries = 50;
  Engine eng = make_engine(kSeed, "accept/kde-approx");
  const Tensor pts = gaussian_matrix(eng, kPoints, kDim);
  const double dbar = mean_pairwise_sqdist(pts);
  const std::vector<double> factors{1.0, 0.3, 0.1, 0.03, 0.01};

  std::vector<Tensor> queries;
  for (std::size_t q = 0; q < kQueries; ++q) queries.push_back(gaussian_matrix(eng, 1, kDim).reshaped({kDim}));
  std::vector<double> mean_res(factors.size(), 0.0);
  std::size_t monotone = 0;
  for (const auto& x : queries) {
    double prev = std::numeric_limits<double>::infinity();
    bool mono = true;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const KdeModel m(pts, factors[i] / dbar, {kDim});
      const double r = std::abs(kde_mean_approx(m, x).residual);
      mono = mono && r < prev;
      prev = r;
      mean_res[i] += r / kQueries;
    }
    monotone += mono;
  }
  bool mean_mono = true;
  for (std::size_t i = 1; i < mean_res.size(); ++i) mean_mono = mean_mono && mean_res[i] < mean_res[i - 1];

  // Two points mirrored through the origin, queried on the bisecting hyperplane.
  // Integer coordinates keep every distance exact.
  double worst_sym = 0.0;
  for (int t = 0; t < 20; ++t) {
    Engine e = make_engine(kSeed, "accept/kde-symmetric", t);
    Tensor p({2, kDim});
    Tensor x({kDim});
    for (std::size_t j = 0; j < kDim; ++j) {
      const double v = static_cast<double>(uniform_size(e, 0, 6)) - 3.0;
      p.at(0, j) = v;
      p.at(1, j) = -v;
    }
    // x is orthogonal to p: pairs of coordinates (p_a, p_b) get (p_b, -p_a).
    for (std::size_t j = 0; j + 1 < kDim; j += 2) {
      const double c = static_cast<double>(uniform_size(e, 1, 3));
      x[j] = c * p.at(0, j + 1);
      x[j + 1] = -c * p.at(0, j);
    }
    for (double factor : factors) {
      const double pair = squared_distance(p.row(0), p.row(1));
      const KdeModel m(p, factor / std::max(pair, 1.0), {kDim});
      worst_sym = std::max(worst_sym, std::abs(kde_mean_approx(m, x).residual));
    }
  }

  std::string series;
  for (double r : mean_res) series += fmt("%.3g ", r);
  const bool ok = monotone == kQueries && mean_mono && worst_sym == 0.0;
  return {ok, fmt("mean |residual| %s; strictly decreasing on %zu/%zu queries; symmetric two-point max |residual| %g",
                  series.c_str(), monotone, kQueries, worst_sym)};
}

// --- 5 ---------------------------------------------------------------------

Outcome kde_clever_hans() {
  const auto t0 = Clock::now();
  double min_cos = 1.0, stripe_ch = 0.0, brightness_ch = 0.0;
  for (const SynthKind kind : {SynthKind::brightness, SynthKind::stripe}) {
    SynthSpec spec;
    spec.kind = kind;
    spec.seed = kSeed;
    const Dataset ds = generate_synthetic(spec);
    const auto train = Dataset::images(ds.train);
    const Tensor pts = stack_rows(train);
    const std::size_t d = pts.cols();
    const double gamma = kDemoGammaFactor / mean_pairwise_sqdist(pts);
    const Detector det = fit_kde(train, Dataset::images(ds.val), std::vector<double>{gamma});

    std::vector<double> mean(d, 0.0), var(d, 0.0);
    for (std::size_t k = 0; k < pts.rows(); ++k)
      for (std::size_t j = 0; j < d; ++j) mean[j] += pts.at(k, j) / pts.rows();
    for (std::size_t k = 0; k < pts.rows(); ++k)
      for (std::size_t j = 0; j < d; ++j) var[j] += std::pow(pts.at(k, j) - mean[j], 2) / pts.rows();

    std::vector<EvalSample> test;
    for (const auto& s : ds.test) test.push_back({&s.image, s.label, s.mask ? &*s.mask : nullptr, s.id});
    const auto rec = evaluate_class(
        to_string(kind), "kde", test, [&](const EvalSample& s) { return score(det, *s.image); },
        [&](const EvalSample& s) { return explain(det, *s.image).values; });
    if (kind == SynthKind::stripe) {
      stripe_ch = rec.clever_hans.value_or(-1.0);
      continue;
    }
    brightness_ch = rec.clever_hans.value_or(-1.0);
    for (const auto& s : ds.test) {
      if (s.label != 1) continue;
      Tensor pattern(s.image.shape());
      for (std::size_t j = 0; j < d; ++j) pattern[j] = std::pow(s.image[j] - mean[j], 2) + var[j];
      min_cos = std::min(min_cos, cosine(explain(det, s.image).values, pattern));
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = min_cos >= kCosineMin && stripe_ch > 0.0 && secs < kDemoSeconds;
  return {ok, fmt("gamma = %.0f/d_pair: brightness min cosine %.4f (limit %.2f), CH brightness %.4f, "
                  "stripe CH %.4f (> 0); %.2f s, limit %.0f s",
                  kDemoGammaFactor, min_cos, kCosineMin, brightness_ch, stripe_ch, secs, kDemoSeconds)};
}

// --- 6 ---------------------------------------------------------------------

Outcome roc_oracle() {
  constexpr int kTrials = 1000;
  int mismatches = 0;
  for (int t = 0; t < kTrials; ++t) {
    Engine eng = make_engine(kSeed, "accept/roc", t);
    const std::size_t n = uniform_size(eng, 2, 200);
    // Coarse levels on half the trials force ties.
    const std::size_t levels = t % 2 == 0 ? uniform_size(eng, 1, 8) : 0;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = levels ? static_cast<double>(uniform_size(eng, 0, levels)) : normal(eng);
      y[i] = uniform01(eng) < 0.5;
    }
    y[0] = 0;
    y[1] = 1;
    std::uint64_t twice_u = 0, pos = 0, neg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      (y[i] == 1 ? pos : neg) += 1;
      if (y[i] != 1) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (y[j] == 0) twice_u += s[i] > s[j] ? 2 : s[i] == s[j] ? 1 : 0;
    }
    const double brute = static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
    mismatches += roc_auc(s, y) != brute;
  }
  return {mismatches == 0, fmt("%d/%d trials differ from exhaustive pair counting (n <= 200, ties on half)",
                               mismatches, kTrials)};
}

// --- 7 ---------------------------------------------------------------------

std::vector<bool> relu_pattern(std::span<const Layer> layers, std::span<const Tensor> batch) {
  std::vector<bool> p;
  for (const auto& x : batch) {
    ActivationTrace tr;
    stack_forward(layers, x, &tr);
    for (std::size_t l = 0; l < layers.size(); ++l)
      if (std::holds_alternative<Relu>(layers[l]))
        for (double v : tr.layers[l].input.values()) p.push_back(v > 0.0);
  }
  return p;
}

Outcome gradient_check() {
  constexpr int kArchs = 20;
  double worst = 0.0;
  std::size_t params = 0, kinks = 0;
  for (int t = 0; t < kArchs; ++t) {
    Engine eng = make_engine(kSeed, "accept/gradient", t);
    AutoencoderArchitecture arch;
    const std::size_t d = uniform_size(eng, 1, 32);
    arch.widths.push_back(d);
    for (std::size_t h = uniform_size(eng, 1, 3); h > 0; --h) arch.widths.push_back(uniform_size(eng, 1, 32));
    arch.widths.push_back(d);
    arch.bias = uniform01(eng) < 0.7;
    arch.relu_hidden = uniform01(eng) < 0.8;
    std::vector<Layer> layers = init_autoencoder(arch, eng());
    std::vector<Tensor> batch;
    for (std::size_t b = uniform_size(eng, 1, 8); b > 0; --b) batch.push_back(gaussian_matrix(eng, 1, d).reshaped({d}));

    const Gradients g = reconstruction_gradient(layers, batch);
    const auto base_pattern = relu_pattern(layers, batch);
    double diff2 = 0.0, norm2 = 0.0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto* lin = std::get_if<Linear>(&layers[l]);
      if (lin == nullptr) continue;
      auto check = [&](Tensor& param, const Tensor& grad) {
        for (std::size_t i = 0; i < param.size(); ++i) {
          const double saved = param[i];
          // Central differences are exact on the piecewise-quadratic loss unless
          // a step crosses a ReLU kink; shrink the step until it does not.
          double fd = 0.0;
          bool clean = false;
          for (double h = 1e-5; h >= 1e-8 && !clean; h /= 10.0) {
            param[i] = saved + h;
            const double up = reconstruction_loss(layers, batch);
            const bool up_clean = relu_pattern(layers, batch) == base_pattern;
            param[i] = saved - h;
            const double down = reconstruction_loss(layers, batch);
            const bool down_clean = relu_pattern(layers, batch) == base_pattern;
            param[i] = saved;
            fd = (up - down) / (2.0 * h);
            clean = up_clean && down_clean;
          }
          if (!clean) {
            ++kinks;
            continue;
          }
          diff2 += (grad[i] - fd) * (grad[i] - fd);
          norm2 += std::max(grad[i] * grad[i], fd * fd);
          ++params;
        }
      };
      check(lin->weights, g.layers[l]->weights);
      if (lin->bias) check(*lin->bias, *g.layers[l]->bias);
    }
    worst = std::max(worst, norm2 > 0.0 ? std::sqrt(diff2 / norm2) : std::sqrt(diff2));
  }
  return {worst <= kGradientTol,
          fmt("max relative error %.1e (limit %.0e) over %d architectures, %zu parameters, %zu at ReLU kinks skipped",
              worst, kGradientTol, kArchs, params, kinks)};
}

// --- 8 ---------------------------------------------------------------------

Outcome whitening_identity() {
  double worst = 0.0;
  int cases = 0;
  for (int t = 0; t < 16; ++t) {
    Engine eng = make_engine(kSeed, "accept/whitening", t);
    const std::size_t n = t == 0 ? 64 : t == 1 ? 1 : uniform_size(eng, 1, 64);
    const std::size_t m = 2 * n + 2;
    const Tensor a = gaussian_matrix(eng, m, n);
    const Tensor s = second_moment(a);
    for (double lambda : {0.0, 0.1, 1.0}) {
      const Tensor w = whitening_matrix(s, lambda);
      Tensor shifted = s;
      for (std::size_t i = 0; i < n; ++i) shifted.at(i, i) += lambda;
      Tensor e = matmul(matmul(w, shifted), w);
      for (std::size_t i = 0; i < n; ++i) e.at(i, i) -= 1.0;
      worst = std::max(worst, frobenius_norm(e) / std::sqrt(static_cast<double>(n)));
      ++cases;
    }
  }
  return {worst <= kWhiteningTol,
          fmt("max ||W(S+lI)W - I||_F / ||I||_F %.1e (limit %.0e) over %d cases, dims 1..64, l in {0, 0.1, 1}", worst,
              kWhiteningTol, cases)};
}

// --- 9 ---------------------------------------------------------------------

Outcome bagging_identity() {
  const Fitted& f = fitted();
  const auto& bag = std::get<BaggedModel>(f.detectors[3]);
  double worst = 0.0;
  std::vector<const Sample*> all;
  for (const auto* split : {&f.data.train, &f.data.val, &f.data.val_outliers, &f.data.test})
    for (const auto& s : *split) all.push_back(&s);
  for (const Sample* s : all) {
    const auto raw = bag.member_scores(s->image);
    double mean = 0.0;
    for (std::size_t m = 0; m < 3; ++m) mean += bag.standardizers[m].apply(raw[m]);
    mean /= 3.0;
    worst = std::max(worst, std::abs(bag_score(bag, s->image) - mean) / std::max(1.0, std::abs(mean)));
  }

  // The standardizers were fitted on the validation inliers.
  double worst_mean = 0.0, worst_var = 0.0;
  for (std::size_t m = 0; m < 3; ++m) {
    std::vector<double> z;
    for (const auto& s : f.data.val) z.push_back(bag.standardized_scores(s.image)[m]);
    double mu = 0.0, var = 0.0;
    for (double v : z) mu += v / z.size();
    for (double v : z) var += (v - mu) * (v - mu) / z.size();
    worst_mean = std::max(worst_mean, std::abs(mu));
    worst_var = std::max(worst_var, std::abs(var - 1.0));
  }
  const bool ok = worst <= kBagTol && worst_mean < kStandardizedTol && worst_var <= kStandardizedTol;
  return {ok, fmt("bag vs mean of standardized %.1e (limit %.0e, %zu samples); standardized reference |mean| %.1e, "
                  "|var - 1| %.1e (limit %.0e)",
                  worst, kBagTol, all.size(), worst_mean, worst_var, kStandardizedTol)};
}

// --- 10 --------------------------------------------------------------------

Outcome clever_hans_arithmetic() {
  const double ch = clever_hans_score(0.964, 0.204);
  const std::string pct = fmt("%.1f", 100.0 * ch);
  return {ch == 0.76 && pct == "76.0", fmt("clever_hans_score(0.964, 0.204) = %.17g, %s on the percentage scale", ch,
                                           pct.c_str())};
}

// --- 11 --------------------------------------------------------------------

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Relative path -> contents with the run root replaced, so two roots compare.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  const std::string needle = root.string();
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::string bytes = read_bytes(e.path());
    for (std::size_t at = bytes.find(needle); at != std::string::npos; at = bytes.find(needle, at))
      bytes.replace(at, needle.size(), "<root>");
    files[fs::relative(e.path(), root).string()] = std::move(bytes);
  }
  return files;
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

int run_demo(const std::string& cli, const fs::path& root, const fs::path& log) {
  std::vector<std::vector<std::string>> steps;
  std::vector<std::string> evaluate{"evaluate"};
  for (const std::string kind : {"stripe", "brightness"}) {
    const std::string data = (root / kind / "data").string();
    const std::string manifest = data + "/manifest.json";
    const auto dir = [&](const std::string& name) { return (root / kind / name).string(); };
    steps.push_back({"synth", "--kind", kind, "--seed", "7", "--out", data});
    for (const std::string model : {"kde", "autoencoder", "deep"})
      steps.push_back({"fit", "--model", model, "--seed", "7", "--data", manifest, "--out", dir(model)});
    steps.push_back({"bag", "--data", manifest, "--members", dir("kde"), dir("autoencoder"), dir("deep"), "--out",
                     dir("bag")});
    for (const std::string model : {"kde", "autoencoder", "deep", "bag"})
      evaluate.insert(evaluate.end(), {"--model", dir(model), "--data", manifest});
  }
  evaluate.insert(evaluate.end(), {"--out", (root / "report").string()});
  steps.push_back(evaluate);
  for (const auto& step : steps) {
    std::string cmd = quoted(cli);
    for (const auto& a : step) cmd += " " + quoted(a);
    cmd += " >>" + quoted(log.string()) + " 2>&1";
    if (const int rc = std::system(cmd.c_str()); rc != 0) return rc;
  }
  return 0;
}

Outcome suite_and_demo() {
  const auto t0 = Clock::now();
  std::string detail;
  bool ok = true;

  std::vector<std::string> unit;
  std::stringstream list(HANSLENS_UNIT_TESTS);
  for (std::string item; std::getline(list, item, '|');)
    if (!item.empty()) unit.push_back(item);
  const fs::path scratch = fs::temp_directory_path() / ("hanslens_acceptance_" + std::to_string(kSeed));
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const fs::path log = scratch / "log.txt";

  int unit_failures = 0;
  for (const auto& exe : unit) {
    const std::string cmd = quoted(exe) + " >>" + quoted(log.string()) + " 2>&1";
    unit_failures += std::system(cmd.c_str()) != 0;
  }
  ok = ok && unit_failures == 0;
  const double unit_secs = seconds_since(t0);
  detail += fmt("unit suites %zu run, %d failed (%.1f s); ", unit.size(), unit_failures, unit_secs);

  const char* env = std::getenv("HANSLENS_CLI");
  const std::string cli = env && *env ? env : HANSLENS_CLI_PATH;
  const int rc1 = run_demo(cli, scratch / "run1", log);
  const int rc2 = rc1 == 0 ? run_demo(cli, scratch / "run2", log) : rc1;
  if (rc1 != 0 || rc2 != 0) {
    ok = false;
    detail += fmt("demo failed (see %s); ", log.string().c_str());
  } else {
    const auto a = snapshot(scratch / "run1"), b = snapshot(scratch / "run2");
    std::size_t differ = a.size() == b.size() ? 0 : std::max(a.size(), b.size());
    for (const auto& [name, bytes] : a) {
      const auto it = b.find(name);
      differ += it == b.end() || it->second != bytes;
    }
    ok = ok && differ == 0;
    detail += fmt("demo x2 (2 classes, synth, fit x3, bag, evaluate): %zu files, %zu differ; ", a.size(), differ);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kSuiteSeconds;
  detail += fmt("total %.1f s, limit %.0f s", secs, kSuiteSeconds);
  if (ok) fs::remove_all(scratch);
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"rule conservation", rule_conservation},
      {"end-to-end conservation", end_to_end_conservation},
      {"softargmin limit", softargmin_limit},
      {"mean approximation of KDE", mean_approximation},
      {"KDE Clever Hans demonstration", kde_clever_hans},
      {"ROC oracle", roc_oracle},
      {"autoencoder gradients", gradient_check},
      {"whitening", whitening_identity},
      {"bagging identity", bagging_identity},
      {"Clever Hans arithmetic", clever_hans_arithmetic},
      {"test suite and demo", suite_and_demo},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failures += !r.pass;
    std::printf("%s %2zu %s: %s\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
