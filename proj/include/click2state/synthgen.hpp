#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "click2state/datamodel.hpp"

namespace click2state {

// Every student carries a latent weekly risk signal
//   m[t] = s * (a + b * t / (T - 1)) + eta[t],   s = +1 fail, -1 pass,
// where eta is a stationary AR(1) process independent of the label. Click
// log-rates load on m scaled by click_signal_strength and note topic logits
// load on m scaled by topic_signal_strength, so with both strengths at zero
// nothing observable depends on the label.
struct SynthConfig {
  int n_students = 1000;
  int term_length = 25;
  double fail_rate = 0.5;
  int n_topics_planted = 10;
  int vocab_size = 300;
  int note_period = 2;
  int note_length_mean = 30;
  double click_signal_strength = 1.0;
  double topic_signal_strength = 1.0;
  std::uint64_t seed = 0;

  double note_drop_prob = 0.1;
  double mixture_concentration = 3.0;  // Dirichlet concentration of note mixtures
  double latent_sd = 1.0;              // stationary sd of eta
  double latent_persistence = 0.8;     // AR(1) coefficient of eta
  double trend_intercept = 0.25;       // a
  double trend_slope = 0.75;           // b
  double student_activity_sd = 0.5;    // per-student, per-dimension log-rate noise
  double week_activity_sd = 0.3;       // per-week log-rate noise shared across dimensions
  double click_loading_fraction = 1.0 / 3.0;  // share of count dimensions that respond to m

  void validate() const;
};

SynthConfig synth_config_from_json(const std::string& text, SynthConfig base = {});
std::string synth_config_to_json(const SynthConfig& cfg);

struct LinearTrend {
  double intercept = 0.0;
  double slope = 0.0;  // per unit of t / (T - 1)
};

struct ClickTrajectory {
  double base_rate = 0.0;  // expected count at week 0 for an average student of the label
  double drift = 0.0;      // log-rate change over the term
};

struct PlantedGenerator {
  Eigen::MatrixXd topic_word;                    // K x V, rows on the simplex
  std::vector<std::vector<int>> topic_blocks;    // word ids of each topic's high-mass block
  Eigen::VectorXd topic_loading;                 // response of topic logits to m
  Eigen::VectorXd topic_week_trend;              // label-independent logit drift over the term
  std::array<std::vector<LinearTrend>, 2> topic_trend;  // [label][topic], logit shift excluding eta
  Eigen::VectorXd click_base_rate;               // per count dim, > 0
  Eigen::VectorXd click_loading;                 // response of click log-rates to m
  Eigen::VectorXd click_week_drift;              // label-independent log-rate drift
  std::array<std::vector<ClickTrajectory>, 2> click_trajectory;  // [label][dim]
  std::vector<std::string> vocabulary;           // "w0000".."w{V-1}"
};

PlantedGenerator build_generator(const SynthConfig& cfg);
Dataset generate_dataset(const PlantedGenerator& gen, const SynthConfig& cfg);

// Sidecar with the planted topic-word matrix and trends.
std::string planted_to_json(const PlantedGenerator& gen, const SynthConfig& cfg);

// Greedy one-to-one matching of recovered rows to planted rows by cosine
// similarity. Returns per planted row the matched recovered row, and the
// mean cosine over matches.
struct TopicMatch {
  std::vector<int> recovered_for_planted;
  std::vector<double> cosine;
  double mean_cosine = 0.0;
};
TopicMatch match_topics(const Eigen::MatrixXd& planted, const Eigen::MatrixXd& recovered);

}  // namespace click2state
