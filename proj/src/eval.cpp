#include "hanslens/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hanslens/error.hpp"

namespace hanslens {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("roc_auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw NumericalError("roc_auc: non-finite score");
    if (labels[i] == 1) ++n_pos;
    else if (labels[i] == 0) ++n_neg;
    else throw ConfigError("roc_auc: labels must be 0 or 1");
  }
  if (n_pos == 0 || n_neg == 0) throw ConfigError("roc_auc: both labels must be present");
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the Mann-Whitney U as an exact integer: 2 per win, 1 per tie.
  std::uint64_t twice_u = 0, neg_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0, neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? pos : neg) += 1;
      ++j;
    }
    twice_u += 2 * pos * neg_below + pos * neg;
    neg_below += neg;
    i = j;
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double explanation_accuracy(const Tensor& heatmap, const Tensor& mask) {
  if (heatmap.size() != mask.size()) throw ShapeError("explanation_accuracy: heatmap and mask differ in size");
  if (!heatmap.all_finite()) throw NumericalError("explanation_accuracy: non-finite heatmap");
  double hm = 0.0, mm = 0.0, hh = 0.0;
  for (std::size_t i = 0; i < heatmap.size(); ++i) {
    const double h = std::max(0.0, heatmap[i]);
    const double m = mask[i];
    hm += h * m;
    hh += h * h;
    mm += m * m;
  }
  if (mm == 0.0) throw ConfigError("explanation_accuracy: mask is empty");
  if (hh == 0.0) return 0.0;
  // One square root keeps self-similarity exact; the split form guards overflow.
  const double hhmm = hh * mm;
  const double norm = std::isfinite(hhmm) ? std::sqrt(hhmm) : std::sqrt(hh) * std::sqrt(mm);
  return std::clamp(hm / norm, 0.0, 1.0);
}

double clever_hans_score(double detection_accuracy, double explanation_accuracy) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(detection_accuracy) || !in_unit(explanation_accuracy))
    throw ConfigError("clever_hans_score: accuracies must lie in [0, 1]");
  return detection_accuracy - explanation_accuracy;
}

ClassRecord evaluate_class(const std::string& class_name, const std::string& detector,
                           std::span<const EvalSample> test, const ScoreFn& score, const ExplainFn& explain) {
  ClassRecord rec;
  rec.class_name = class_name;
  rec.detector = detector;
  rec.n_test = test.size();

  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(test.size());
  for (const auto& s : test) {
    scores.push_back(score(s));
    labels.push_back(s.label);
  }
  rec.detection_accuracy = roc_auc(scores, labels);

  double total = 0.0;
  for (const auto& s : test) {
    if (s.label != 1 || s.mask == nullptr) continue;
    total += explanation_accuracy(explain(s), *s.mask);
    ++rec.n_explained;
  }
  if (rec.n_explained > 0) {
    rec.explanation_accuracy = total / static_cast<double>(rec.n_explained);
    rec.clever_hans = clever_hans_score(rec.detection_accuracy, *rec.explanation_accuracy);
  }
  return rec;
}

std::vector<ClassRecord> rank_classes(std::span<const ClassRecord> records, std::size_t k) {
  if (k == 0) throw ConfigError("rank_classes: k must be at least 1");
  std::vector<ClassRecord> scored;
  for (const auto& r : records)
    if (r.clever_hans) scored.push_back(r);
  std::stable_sort(scored.begin(), scored.end(), [](const ClassRecord& a, const ClassRecord& b) {
    if (*a.clever_hans != *b.clever_hans) return *a.clever_hans > *b.clever_hans;
    return a.class_name < b.class_name;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

std::string report_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["detector"] = report.detector;
  j["classes"] = nlohmann::ordered_json::array();
  for (const auto& r : report.classes) {
    nlohmann::ordered_json c;
    c["class"] = r.class_name;
    c["roc"] = r.detection_accuracy;
    c["expl"] = r.explanation_accuracy ? nlohmann::ordered_json(*r.explanation_accuracy) : nlohmann::ordered_json(nullptr);
    c["ch"] = r.clever_hans ? nlohmann::ordered_json(*r.clever_hans) : nlohmann::ordered_json(nullptr);
    c["n_test"] = r.n_test;
    c["n_explained"] = r.n_explained;
    j["classes"].push_back(std::move(c));
  }
  return j.dump(2) + "\n";
}

std::string report_table(const EvaluationReport& report, std::size_t top_k) {
  auto pct = [](std::optional<double> v) {
    if (!v) return std::string("     -");
    char buf[16];
    std::snprintf(buf, sizeof buf, "%6.1f", 100.0 * *v);
    return std::string(buf);
  };
  // Rows are labeled by class, or by class/detector when kinds are mixed.
  auto label = [&](const ClassRecord& r) {
    return report.detector == "mixed" ? r.class_name + "/" + r.detector : r.class_name;
  };
  std::size_t width = 5;
  for (const auto& r : report.classes) width = std::max(width, label(r).size());

  std::ostringstream os;
  os << report.detector << "\n";
  os << std::string(width, ' ') << "     ROC   Expl     CH\n";
  for (const auto& r : report.classes) {
    const std::string name = label(r);
    os << std::string(width - name.size(), ' ') << name << "  " << pct(r.detection_accuracy) << " "
       << pct(r.explanation_accuracy) << " " << pct(r.clever_hans) << "\n";
  }
  const auto top = rank_classes(report.classes, std::max<std::size_t>(top_k, 1));
  if (!top.empty()) {
    os << "\nTop-" << top.size() << " Clever Hans classes\n";
    for (std::size_t i = 0; i < top.size(); ++i)
      os << "  " << (i + 1) << ". " << label(top[i]) << "  " << pct(top[i].clever_hans) << "\n";
  }
  return os.str();
}

}  // namespace hanslens
