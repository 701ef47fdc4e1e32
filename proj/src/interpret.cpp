#include "click2state/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <tuple>

#include "click2state/common.hpp"

namespace click2state {

const char* outcome_name(Outcome o) { return o == Outcome::P ? "P" : "F"; }

StateExtremes find_extreme_states(const ModelParams& model, const std::vector<PreparedStudent>& pool) {
  StateExtremes ex;
  bool any = false;
  for (const auto& s : pool) {
    if (s.features.empty()) continue;
    const auto states = encode(model, s.features);
    for (std::size_t t = 0; t < states.size(); ++t) {
      const double p = predict_fail(model, states[t]);
      const int week = static_cast<int>(t);
      auto before = [&](const StateRef& ref) {
        return std::tie(s.student_id, week) < std::tie(ref.student_id, ref.week);
      };
      if (!any || p < ex.p_ref.fail_prob || (p == ex.p_ref.fail_prob && before(ex.p_ref))) {
        ex.h_P = states[t];
        ex.p_ref = {s.student_id, week, p};
      }
      if (!any || p > ex.f_ref.fail_prob || (p == ex.f_ref.fail_prob && before(ex.f_ref))) {
        ex.h_F = states[t];
        ex.f_ref = {s.student_id, week, p};
      }
      any = true;
    }
  }
  if (!any) throw DataError("find_extreme_states: empty pool");
  return ex;
}

StateExtremes optimize_extreme_states(const ModelParams& model, int steps, double lr) {
  const Eigen::VectorXd w = model.weights.heads.W_y.row(0).transpose();
  auto run = [&](double direction) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(model.hidden);
    for (int i = 0; i < steps; ++i) {
      const Eigen::VectorXd h = u.array().tanh().matrix();
      u += direction * lr * w.cwiseProduct((1.0 - h.array().square()).matrix());
    }
    return HiddenState(u.array().tanh().matrix());
  };
  StateExtremes ex;
  ex.h_P = run(-1.0);
  ex.h_F = run(+1.0);
  ex.p_ref = {"<optimized>", -1, predict_fail(model, ex.h_P)};
  ex.f_ref = {"<optimized>", -1, predict_fail(model, ex.h_F)};
  return ex;
}

TopicStandardizer fit_standardizer(const std::vector<Eigen::VectorXd>& population) {
  if (population.empty()) throw DataError("fit_standardizer: empty population");
  const auto K = population.front().size();
  TopicStandardizer s;
  s.mean = Eigen::VectorXd::Zero(K);
  for (const auto& v : population) s.mean += v;
  s.mean /= static_cast<double>(population.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(K);
  for (const auto& v : population) var += (v - s.mean).array().square().matrix();
  s.std = (var / static_cast<double>(population.size())).array().sqrt().matrix();
  s.degenerate.resize(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k)
    s.degenerate[k] = !(s.std[k] > 1e-12 * std::max(1.0, std::abs(s.mean[k])));
  return s;
}

TopicStandardizer fit_standardizer(const ModelParams& model, const std::vector<PreparedStudent>& pool) {
  std::vector<Eigen::VectorXd> population;
  for (const auto& s : pool) {
    if (s.features.empty()) continue;
    for (const auto& h : encode(model, s.features)) population.push_back(predict_topics(model, h).probs);
  }
  return fit_standardizer(population);
}

std::vector<int> reported_topics(int num_topics, const std::vector<int>& exclude) {
  std::vector<int> out;
  for (int k = 0; k < num_topics; ++k)
    if (std::find(exclude.begin(), exclude.end(), k) == exclude.end()) out.push_back(k);
  return out;
}

namespace {

std::vector<TopicScore> zscores(const TopicStandardizer& st, const Eigen::VectorXd& probs, const std::vector<int>& topics) {
  std::vector<TopicScore> out;
  out.reserve(topics.size());
  for (int k : topics) {
    if (st.degenerate.at(static_cast<std::size_t>(k)))
      throw DataError("topic " + std::to_string(k) + " has zero variance in the reference population");
    out.push_back({k, (probs[k] - st.mean[k]) / st.std[k]});
  }
  return out;
}

}  // namespace

std::vector<TopicScore> state_topic_zscores(const ModelParams& model, const TopicStandardizer& st,
                                            const HiddenState& h, const std::vector<int>& exclude) {
  return zscores(st, predict_topics(model, h).probs, reported_topics(model.num_topics, exclude));
}

TopicTrajectory topic_trajectories(const ModelParams& model, const TopicStandardizer& st,
                                   const std::vector<PreparedStudent>& test, const std::vector<int>& exclude) {
  bool has[2] = {false, false};
  std::size_t max_weeks = 0;
  for (const auto& s : test) {
    has[s.label] = true;
    max_weeks = std::max(max_weeks, s.features.size());
  }
  if (!has[0] || !has[1]) throw DataError("topic_trajectories: both outcomes must be present");
  const auto topics = reported_topics(model.num_topics, exclude);
  // sums[group][week][topic index]
  std::vector<std::vector<std::vector<double>>> sums(2, std::vector<std::vector<double>>(max_weeks, std::vector<double>(topics.size(), 0.0)));
  std::vector<std::vector<int>> counts(2, std::vector<int>(max_weeks, 0));
  for (const auto& s : test) {
    if (s.features.empty()) continue;
    const auto states = encode(model, s.features);
    for (std::size_t t = 0; t < states.size(); ++t) {
      const auto z = zscores(st, predict_topics(model, states[t]).probs, topics);
      for (std::size_t i = 0; i < z.size(); ++i) sums[s.label][t][i] += z[i].z;
      ++counts[s.label][t];
    }
  }
  TopicTrajectory out;
  for (int g = 0; g < 2; ++g)
    for (std::size_t t = 0; t < max_weeks; ++t) {
      if (counts[g][t] == 0) continue;
      for (std::size_t i = 0; i < topics.size(); ++i)
        out.rows.push_back({static_cast<Outcome>(g), static_cast<int>(t), topics[i],
                            sums[g][t][i] / counts[g][t], counts[g][t]});
    }
  return out;
}

std::vector<DistanceRow> distance_trajectories(const ModelParams& model, const StateExtremes& ex,
                                               const std::vector<PreparedStudent>& test) {
  std::size_t max_weeks = 0;
  for (const auto& s : test) max_weeks = std::max(max_weeks, s.features.size());
  std::vector<std::vector<DistanceRow>> acc(2, std::vector<DistanceRow>(max_weeks));
  for (const auto& s : test) {
    if (s.features.empty()) continue;
    const auto states = encode(model, s.features);
    for (std::size_t t = 0; t < states.size(); ++t) {
      auto& row = acc[s.label][t];
      row.mean_dist_p += (states[t] - ex.h_P).norm();
      row.mean_dist_f += (states[t] - ex.h_F).norm();
      ++row.n;
    }
  }
  std::vector<DistanceRow> out;
  for (int g = 0; g < 2; ++g)
    for (std::size_t t = 0; t < max_weeks; ++t) {
      auto row = acc[g][t];
      if (row.n == 0) continue;
      row.group = static_cast<Outcome>(g);
      row.week = static_cast<int>(t);
      row.mean_dist_p /= row.n;
      row.mean_dist_f /= row.n;
      out.push_back(row);
    }
  return out;
}

void write_extremes_csv(std::ostream& out, const ModelParams& model, const TopicStandardizer& st,
                        const StateExtremes& ex, const std::vector<int>& exclude) {
  out << "state,student_id,week,fail_prob,topic,zscore\n";
  auto emit = [&](const char* name, const HiddenState& h, const StateRef& ref) {
    for (const auto& z : state_topic_zscores(model, st, h, exclude))
      out << name << ',' << ref.student_id << ',' << ref.week << ',' << format_double(ref.fail_prob) << ','
          << z.topic << ',' << format_double(z.z) << '\n';
  };
  emit("P", ex.h_P, ex.p_ref);
  emit("F", ex.h_F, ex.f_ref);
}

void write_topic_trajectories_csv(std::ostream& out, const TopicTrajectory& traj) {
  out << "group,week,topic,mean_zscore,n_students\n";
  for (const auto& r : traj.rows)
    out << outcome_name(r.group) << ',' << r.week << ',' << r.topic << ',' << format_double(r.mean_z) << ',' << r.n
        << '\n';
}

void write_distance_csv(std::ostream& out, const std::vector<DistanceRow>& rows) {
  out << "group,week,mean_dist_p,mean_dist_f,n_students\n";
  for (const auto& r : rows)
    out << outcome_name(r.group) << ',' << r.week << ',' << format_double(r.mean_dist_p) << ','
        << format_double(r.mean_dist_f) << ',' << r.n << '\n';
}

}  // namespace click2state
