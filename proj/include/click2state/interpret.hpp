#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "click2state/model.hpp"
#include "click2state/training.hpp"

namespace click2state {

struct StateRef {
  std::string student_id;
  int week = -1;  // -1 for states not observed in the pool
  double fail_prob = 0.0;
};

// P state minimizes and F state maximizes the predicted fail probability.
struct StateExtremes {
  HiddenState h_P;
  HiddenState h_F;
  StateRef p_ref;
  StateRef f_ref;
};

// Scans every hidden state of every student and week in the pool. Ties go to
// the lexicographically smallest (student_id, week).
StateExtremes find_extreme_states(const ModelParams& model, const std::vector<PreparedStudent>& pool);

// Exploration variant: gradient ascent/descent on the fail logit over
// h = tanh(u). Not an observed state.
StateExtremes optimize_extreme_states(const ModelParams& model, int steps = 200, double lr = 0.5);

// Population statistics of model-inferred topic probabilities.
struct TopicStandardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // population standard deviation
  std::vector<bool> degenerate;
};

// Population: softmax(W_theta h_t) over all students and weeks of the pool.
TopicStandardizer fit_standardizer(const ModelParams& model, const std::vector<PreparedStudent>& pool);
TopicStandardizer fit_standardizer(const std::vector<Eigen::VectorXd>& population);

struct TopicScore {
  int topic = 0;
  double z = 0.0;
};

// Topics to report: all K minus the exclusion list, ascending.
std::vector<int> reported_topics(int num_topics, const std::vector<int>& exclude);

// z_k = (softmax(W_theta h)_k - mean_k) / std_k for every reported topic.
std::vector<TopicScore> state_topic_zscores(const ModelParams& model, const TopicStandardizer& std_,
                                            const HiddenState& h, const std::vector<int>& exclude = {});

enum class Outcome { P = 0, F = 1 };  // P: passed (label 0), F: failed (label 1)

struct TrajectoryRow {
  Outcome group = Outcome::P;
  int week = 0;
  int topic = 0;
  double mean_z = 0.0;
  int n = 0;
};

struct TopicTrajectory {
  std::vector<TrajectoryRow> rows;  // ordered by group, week, topic
};

TopicTrajectory topic_trajectories(const ModelParams& model, const TopicStandardizer& std_,
                                   const std::vector<PreparedStudent>& test, const std::vector<int>& exclude = {});

struct DistanceRow {
  Outcome group = Outcome::P;
  int week = 0;
  double mean_dist_p = 0.0;
  double mean_dist_f = 0.0;
  int n = 0;
};

std::vector<DistanceRow> distance_trajectories(const ModelParams& model, const StateExtremes& extremes,
                                               const std::vector<PreparedStudent>& test);

void write_extremes_csv(std::ostream& out, const ModelParams& model, const TopicStandardizer& std_,
                        const StateExtremes& extremes, const std::vector<int>& exclude);
void write_topic_trajectories_csv(std::ostream& out, const TopicTrajectory& traj);
void write_distance_csv(std::ostream& out, const std::vector<DistanceRow>& rows);

const char* outcome_name(Outcome o);

}  // namespace click2state
