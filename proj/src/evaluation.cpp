#include "click2state/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "click2state/common.hpp"

namespace click2state {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("auc: labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(y);
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("auc: both labels must be present");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of (1-based, tie-averaged) ranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[idx[k]] == 1) rank_sum += avg_rank;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

WeekScores score_week(const ModelParams& model, const std::vector<PreparedStudent>& test, int week) {
  WeekScores out;
  for (const auto& s : test) {
    if (s.features.empty()) continue;
    const std::size_t T = week > 0 ? std::min(s.features.size(), static_cast<std::size_t>(week)) : s.features.size();
    const std::vector<FeatureVector> seq(s.features.begin(), s.features.begin() + static_cast<std::ptrdiff_t>(T));
    const auto states = encode(model, seq);
    out.scores.push_back(predict_fail(model, states.back()));
    out.labels.push_back(s.label);
    for (const auto& n : s.notes)
      if (static_cast<std::size_t>(n.week) < T) out.note_klds.push_back(kld_loss(n.theta, predict_topics(model, states[n.week])));
  }
  return out;
}

namespace {

double mean_or_nan(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

WeeklyMetrics eval_week(const ModelParams& model, const std::vector<PreparedStudent>& test, int week) {
  const auto ws = score_week(model, test, week);
  WeeklyMetrics m;
  m.week = week;
  m.auc_model = auc(ws.scores, ws.labels);
  m.auc_baseline = std::nan("");
  m.kld_model = mean_or_nan(ws.note_klds);
  m.n_eval = static_cast<int>(ws.scores.size());
  return m;
}

WeeklyMetrics eval_week(const ModelParams& model, const ModelParams& baseline,
                        const std::vector<PreparedStudent>& test, int week) {
  auto m = eval_week(model, test, week);
  const auto wb = score_week(baseline, test, week);
  m.auc_baseline = auc(wb.scores, wb.labels);
  return m;
}

WeeklyMetrics eval_week(const ModelParams& model, const Dataset& test, const TopicModel& topics, int week,
                        const ThetaInference& inference) {
  if (week > test.term_length) throw DataError("eval_week: week exceeds term length");
  return eval_week(model, prepare_students(test, model.norm_stats, topics, inference), week);
}

BootstrapResult bootstrap_auc_diff(const std::vector<PairedScores>& groups, int n_boot, std::uint64_t seed) {
  if (groups.empty()) throw DataError("bootstrap_auc_diff: no evaluation groups");
  if (n_boot < 1) throw DataError("bootstrap_auc_diff: n_boot must be positive");
  BootstrapResult res;
  for (const auto& g : groups) {
    if (g.scores_a.size() != g.labels.size() || g.scores_b.size() != g.labels.size())
      throw DataError("bootstrap_auc_diff: paired score lengths differ");
    res.delta += auc(g.scores_a, g.labels) - auc(g.scores_b, g.labels);
  }
  res.delta /= static_cast<double>(groups.size());

  std::mt19937_64 rng(derive_seed(seed, 0xb007));
  long n_le = 0, n_ge = 0;
  std::vector<double> sa, sb;
  std::vector<int> lab;
  for (int b = 0; b < n_boot; ++b) {
    double delta = 0.0;
    for (const auto& g : groups) {
      const std::size_t n = g.labels.size();
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (;;) {
        sa.clear();
        sb.clear();
        lab.clear();
        int pos = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const auto k = pick(rng);
          sa.push_back(g.scores_a[k]);
          sb.push_back(g.scores_b[k]);
          lab.push_back(g.labels[k]);
          pos += g.labels[k];
        }
        if (pos > 0 && static_cast<std::size_t>(pos) < n) break;
      }
      delta += auc(sa, lab) - auc(sb, lab);
    }
    delta /= static_cast<double>(groups.size());
    // Exact zero counts on both sides so identical models give p = 1.
    if (delta <= 0.0) ++n_le;
    if (delta >= 0.0) ++n_ge;
  }
  res.p_value = std::min(1.0, 2.0 * (static_cast<double>(std::min(n_le, n_ge)) + 1.0) / (n_boot + 1.0));
  return res;
}

BootstrapResult bootstrap_auc_diff(const ModelParams& a, const ModelParams& b,
                                   const std::vector<PreparedStudent>& test, int week, int n_boot,
                                   std::uint64_t seed) {
  const auto wa = score_week(a, test, week);
  const auto wb = score_week(b, test, week);
  return bootstrap_auc_diff({PairedScores{wa.scores, wb.scores, wa.labels}}, n_boot, seed);
}

void write_metrics_csv(std::ostream& out, const std::vector<WeeklyMetrics>& rows) {
  out << "week,auc_model,auc_baseline,kld_model,n_eval\n";
  for (const auto& r : rows)
    out << r.week << ',' << format_double(r.auc_model) << ',' << format_double(r.auc_baseline) << ','
        << format_double(r.kld_model) << ',' << r.n_eval << '\n';
}

}  // namespace click2state
