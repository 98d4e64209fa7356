#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace salgrain {

// Higher score = more likely positive (attack / synthetic).
struct ScoredSet {
  std::vector<double> scores;
  std::vector<bool> labels;  // true = positive
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

// Threshold sweep from (0,0) to (1,1); tied scores form one step.
struct RocCurve {
  std::vector<RocPoint> points;
};

RocCurve roc_curve(const ScoredSet& set);

// Trapezoidal area under roc_curve(set).
double auc(const ScoredSet& set);
double auc(const RocCurve& curve);

// TPR at the given FPR: the highest TPR reached at exactly that FPR, otherwise
// linear interpolation between the neighbouring curve points.
double tpr_at(const RocCurve& curve, double fpr);

struct EvalReport {
  std::vector<double> per_run_auc;
  double mean = 0.0;
  double std = 0.0;  // population
  std::vector<double> fpr_grid;
  std::vector<double> mean_tpr;
  std::vector<double> std_tpr;
};

EvalReport summarize_runs(std::span<const ScoredSet> runs, std::size_t fpr_grid_size = 101);

// Population mean and standard deviation.
double mean_of(std::span<const double> values);
double population_std(std::span<const double> values);

}  // namespace salgrain
