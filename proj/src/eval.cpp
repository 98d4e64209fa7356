#include "salgrain/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "salgrain/error.hpp"

namespace salgrain {

RocCurve roc_curve(const ScoredSet& set) {
  if (set.scores.size() != set.labels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "scores and labels differ in length");
  }
  const auto positives = static_cast<std::size_t>(std::count(set.labels.begin(), set.labels.end(), true));
  const std::size_t negatives = set.labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorCode::DegenerateLabels, "ROC needs at least one positive and one negative sample");
  }
  for (double s : set.scores) {
    if (std::isnan(s)) throw Error(ErrorCode::NumericFailure, "NaN score");
  }

  std::vector<std::size_t> order(set.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return set.scores[a] > set.scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = set.scores[order[i]];
    while (i < order.size() && set.scores[order[i]] == threshold) {
      if (set.labels[order[i]]) ++tp; else ++fp;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
  }
  return curve;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

double auc(const ScoredSet& set) { return auc(roc_curve(set)); }

double tpr_at(const RocCurve& curve, double fpr) {
  const auto& pts = curve.points;
  // Last point whose FPR does not exceed the query.
  auto it = std::upper_bound(pts.begin(), pts.end(), fpr,
                             [](double f, const RocPoint& p) { return f < p.fpr; });
  if (it == pts.begin()) return pts.front().tpr;
  const RocPoint& left = *(it - 1);
  if (left.fpr == fpr || it == pts.end()) return left.tpr;
  const RocPoint& right = *it;
  const double t = (fpr - left.fpr) / (right.fpr - left.fpr);
  return left.tpr + t * (right.tpr - left.tpr);
}

// Shifted by the first value so that identical inputs give that value exactly
// (and a standard deviation of exactly zero).
double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double base = values.front();
  double sum = 0.0;
  for (double v : values) sum += v - base;
  return base + sum / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean_of(values);
  double sum = 0.0;
  for (double v : values) sum += (v - m) * (v - m);
  return std::sqrt(sum / static_cast<double>(values.size()));
}

EvalReport summarize_runs(std::span<const ScoredSet> runs, std::size_t fpr_grid_size) {
  if (runs.empty()) throw Error(ErrorCode::EmptyDataset, "no runs to summarize");
  if (fpr_grid_size < 2) throw Error(ErrorCode::ConfigInvalid, "FPR grid needs at least two points");

  EvalReport report;
  std::vector<RocCurve> curves;
  for (const auto& run : runs) {
    curves.push_back(roc_curve(run));
    report.per_run_auc.push_back(auc(curves.back()));
  }
  report.mean = mean_of(report.per_run_auc);
  report.std = population_std(report.per_run_auc);

  report.fpr_grid.resize(fpr_grid_size);
  report.mean_tpr.resize(fpr_grid_size);
  report.std_tpr.resize(fpr_grid_size);
  std::vector<double> tprs(curves.size());
  for (std::size_t g = 0; g < fpr_grid_size; ++g) {
    const double f = static_cast<double>(g) / static_cast<double>(fpr_grid_size - 1);
    report.fpr_grid[g] = f;
    for (std::size_t r = 0; r < curves.size(); ++r) tprs[r] = tpr_at(curves[r], f);
    report.mean_tpr[g] = mean_of(tprs);
    report.std_tpr[g] = population_std(tprs);
  }
  return report;
}

}  // namespace salgrain
