#include "click2state/features.hpp"

#include <algorithm>

#include "click2state/common.hpp"

namespace click2state {

RawVector build_raw_vector(const WeekObservation& w, std::int64_t transferred_units) {
  RawVector v(kFeatureDim);
  for (int k = 0; k < kNumCounts; ++k) v[k] = static_cast<double>(w.counts[k]);
  v[kUnitsDim] = static_cast<double>(transferred_units);
  return v;
}

NormalizationStats fit_minmax(const std::vector<RawVector>& train) {
  if (train.empty()) throw DataError("fit_minmax: empty training set");
  NormalizationStats s{train.front(), train.front()};
  for (const auto& v : train) {
    if (v.size() != kFeatureDim) throw DataError("fit_minmax: raw vector must have 31 entries");
    s.min = s.min.cwiseMin(v);
    s.max = s.max.cwiseMax(v);
  }
  return s;
}

NormalizationStats fit_minmax(const Dataset& train) {
  std::vector<RawVector> raws;
  for (const auto& r : train.students)
    for (const auto& w : r.weeks) raws.push_back(build_raw_vector(w, r.transferred_units));
  return fit_minmax(raws);
}

FeatureVector apply_minmax(const NormalizationStats& stats, const RawVector& raw) {
  FeatureVector out(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const double range = stats.max[i] - stats.min[i];
    out[i] = range > 0 ? std::clamp((raw[i] - stats.min[i]) / range, 0.0, 1.0) : 0.0;
  }
  return out;
}

std::vector<FeatureVector> featurize(const StudentRecord& r, const NormalizationStats& stats, int cutoff) {
  const std::size_t n = cutoff > 0 ? std::min(r.weeks.size(), static_cast<std::size_t>(cutoff)) : r.weeks.size();
  std::vector<FeatureVector> seq;
  seq.reserve(n);
  for (std::size_t t = 0; t < n; ++t) seq.push_back(apply_minmax(stats, build_raw_vector(r.weeks[t], r.transferred_units)));
  return seq;
}

}  // namespace click2state
