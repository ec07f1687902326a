#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hanslens/tensor.hpp"

namespace hanslens {

// Mann-Whitney statistic: fraction of (outlier, inlier) pairs where the
// outlier scores strictly higher, ties counted one half. Labels are 0/1.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Cosine between max(0, heatmap) and the mask, both flattened. Zero when the
// rectified heatmap vanishes.
double explanation_accuracy(const Tensor& heatmap, const Tensor& mask);

// detection - explanation, both in [0, 1].
double clever_hans_score(double detection_accuracy, double explanation_accuracy);

struct ClassRecord {
  std::string class_name;
  std::string detector;
  double detection_accuracy = 0.0;
  std::optional<double> explanation_accuracy;  // absent without masked outliers
  std::optional<double> clever_hans;
  std::size_t n_test = 0;
  std::size_t n_explained = 0;
};

struct EvaluationReport {
  std::string detector;
  std::vector<ClassRecord> classes;
};

// One test sample as seen by the evaluator.
struct EvalSample {
  const Tensor* image = nullptr;
  int label = 0;
  const Tensor* mask = nullptr;  // null when unannotated
  std::string id;
};

using ScoreFn = std::function<double(const EvalSample&)>;
using ExplainFn = std::function<Tensor(const EvalSample&)>;

// Detection accuracy over all samples; explanation accuracy averaged over
// outliers that carry a mask.
ClassRecord evaluate_class(const std::string& class_name, const std::string& detector,
                           std::span<const EvalSample> test, const ScoreFn& score,
                           const ExplainFn& explain);

// Top-k records by Clever Hans score, descending; ties by class name.
// Records without a score are skipped.
std::vector<ClassRecord> rank_classes(std::span<const ClassRecord> records, std::size_t k);

// {detector, classes: [{class, roc, expl, ch, n_test, n_explained}]}
std::string report_json(const EvaluationReport& report);

// Fixed-width table on the percentage scale, followed by the top-k ranking.
std::string report_table(const EvaluationReport& report, std::size_t top_k = 3);

}  // namespace hanslens
