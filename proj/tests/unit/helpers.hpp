#pragma once

#include <random>
#include <string>
#include <vector>

#include "click2state/datamodel.hpp"
#include "click2state/model.hpp"
#include "click2state/training.hpp"

namespace testutil {

using namespace click2state;

inline Eigen::VectorXd random_simplex(int k, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Eigen::VectorXd v(k);
  for (int i = 0; i < k; ++i) v[i] = g(rng) + 1e-3;
  return v / v.sum();
}

// Small random weights so gates are away from saturation.
inline ModelParams random_model(int hidden, int topics, std::uint64_t seed, double scale = 0.5) {
  ModelParams p = init_params(hidden, topics, seed);
  std::mt19937_64 rng(seed ^ 0xabcdef);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto v : p.weights.views())
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
  return p;
}

inline PreparedStudent random_student(int T, int topics, std::uint64_t seed, int label = -1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PreparedStudent s;
  s.student_id = "s" + std::to_string(seed);
  s.label = label >= 0 ? label : static_cast<int>(rng() % 2);
  for (int t = 0; t < T; ++t) {
    FeatureVector x(kFeatureDim);
    for (int d = 0; d < kFeatureDim; ++d) x[d] = u(rng);
    s.features.push_back(x);
    if (u(rng) < 0.6) s.notes.push_back({t, TopicDistribution{random_simplex(topics, rng)}});
  }
  return s;
}

inline StudentRecord make_record(const std::string& id, int label, int T, std::uint64_t seed, bool notes = true) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> c(0, 50);
  StudentRecord r;
  r.student_id = id;
  r.label = label;
  r.transferred_units = c(rng);
  for (int t = 0; t < T; ++t) {
    WeekObservation w;
    w.week = t;
    for (auto& v : w.counts) v = c(rng);
    if (notes && t % 2 == 0) w.note = "student reviewed task w" + std::to_string(1000 + c(rng) % 5) + " progress";
    r.weeks.push_back(w);
  }
  return r;
}

inline Dataset make_dataset(int n, int T, std::uint64_t seed) {
  Dataset d;
  d.term_length = T;
  for (int i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "s%04d", i);
    d.students.push_back(make_record(id, i % 2, T, seed * 1000 + static_cast<std::uint64_t>(i)));
  }
  return d;
}

}  // namespace testutil
