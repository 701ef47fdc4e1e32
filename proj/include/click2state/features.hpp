#pragma once

#include <vector>

#include <Eigen/Dense>

#include "click2state/datamodel.hpp"

namespace click2state {

// Dims 0..29 hold counts in (source-major, type-minor) order; dim 30 holds
// transferred units, repeated every week.
inline constexpr int kFeatureDim = kNumCounts + 1;
inline constexpr int kUnitsDim = kNumCounts;

using RawVector = Eigen::VectorXd;
using FeatureVector = Eigen::VectorXd;

struct NormalizationStats {
  Eigen::VectorXd min;
  Eigen::VectorXd max;
};

RawVector build_raw_vector(const WeekObservation& w, std::int64_t transferred_units);

NormalizationStats fit_minmax(const std::vector<RawVector>& train);
// Every week of every student in the dataset.
NormalizationStats fit_minmax(const Dataset& train);

// (x - min) / (max - min), clamped to [0, 1]; constant dims map to 0.
FeatureVector apply_minmax(const NormalizationStats& stats, const RawVector& raw);

// Normalized weekly sequence of a record, truncated to the first `cutoff`
// weeks (cutoff <= 0 keeps all).
std::vector<FeatureVector> featurize(const StudentRecord& r, const NormalizationStats& stats, int cutoff = 0);

}  // namespace click2state
