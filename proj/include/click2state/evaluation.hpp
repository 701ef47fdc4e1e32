#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "click2state/training.hpp"

namespace click2state {

// Mann-Whitney AUC: (concordant pairs + 0.5 ties) / (#pos * #neg), O(n log n).
double auc(std::span<const double> scores, std::span<const int> labels);

struct WeekScores {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<double> note_klds;  // one per note inside the window
};

// Fail scores from sequences truncated at `week`, plus per-note KLD.
WeekScores score_week(const ModelParams& model, const std::vector<PreparedStudent>& test, int week);

struct WeeklyMetrics {
  int week = 0;
  double auc_model = 0.0;
  double auc_baseline = 0.0;  // NaN when no baseline is evaluated
  double kld_model = 0.0;
  int n_eval = 0;
};

WeeklyMetrics eval_week(const ModelParams& model, const std::vector<PreparedStudent>& test, int week);
WeeklyMetrics eval_week(const ModelParams& model, const ModelParams& baseline,
                        const std::vector<PreparedStudent>& test, int week);
// Featurizes with the model's stored normalization stats.
WeeklyMetrics eval_week(const ModelParams& model, const Dataset& test, const TopicModel& topics, int week,
                        const ThetaInference& inference = {});

struct BootstrapResult {
  double delta = 0.0;    // AUC(a) - AUC(b) on the full sample
  double p_value = 1.0;  // two-sided
};

// One evaluation group: paired scores of two models on the same students.
struct PairedScores {
  std::vector<double> scores_a;
  std::vector<double> scores_b;
  std::vector<int> labels;
};

// Paired bootstrap of the mean per-group AUC difference. Students are
// resampled with replacement within each group; resamples missing a label
// are redrawn. p = min(1, 2 (min(#delta* <= 0, #delta* >= 0) + 1) / (n_boot + 1)).
BootstrapResult bootstrap_auc_diff(const std::vector<PairedScores>& groups, int n_boot, std::uint64_t seed);
BootstrapResult bootstrap_auc_diff(const ModelParams& a, const ModelParams& b,
                                   const std::vector<PreparedStudent>& test, int week, int n_boot,
                                   std::uint64_t seed);

void write_metrics_csv(std::ostream& out, const std::vector<WeeklyMetrics>& rows);

}  // namespace click2state
