#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "click2state/datamodel.hpp"
#include "click2state/features.hpp"
#include "click2state/model.hpp"
#include "click2state/topics.hpp"

namespace click2state {

struct NoteTarget {
  int week = 0;
  TopicDistribution theta;
};

// A record after featurization and topic-target inference.
struct PreparedStudent {
  std::string student_id;
  int label = 0;
  std::vector<FeatureVector> features;
  std::vector<NoteTarget> notes;  // ascending week; notes empty after preprocessing are absent
};

// Notes are tokenized against the topic model's frozen vocabulary and
// inferred with per-note seeds, so duplicated records get identical targets.
std::vector<PreparedStudent> prepare_students(const Dataset& d, const NormalizationStats& norm,
                                              const TopicModel& topics, const ThetaInference& inference);
// Features only, no topic targets.
std::vector<PreparedStudent> prepare_sequences(const Dataset& d, const NormalizationStats& norm);

struct TrainConfig {
  double learning_rate = 0.001;
  double lambda = 0.5;
  int epochs = 30;
  int hidden = 20;
  int week_cutoff = 25;  // <= 0 uses the full sequence
  int minibatch_size = 1;
  std::uint64_t seed = 0;
  double weight_decay = 0.0;
  double clip_norm = 5.0;  // <= 0 disables global-norm clipping

  void validate() const;
};

TrainConfig train_config_from_json(const std::string& text, TrainConfig base = {});

struct LossBreakdown {
  double bce = 0.0;
  double mean_kld = 0.0;
  double total = 0.0;
};

// sum_k theta_k ln(theta_k / theta_hat_k) with 0 ln 0 = 0.
double kld_loss(const TopicDistribution& theta, const TopicDistribution& theta_hat);
// p is clamped to [1e-12, 1 - 1e-12].
double bce_loss(int y, double p);

// Loss of one student over the first `cutoff` weeks (<= 0: all weeks):
// lambda * BCE(final step) + (1 - lambda) * mean KLD over notes in window.
LossBreakdown student_loss(const ModelParams& p, const PreparedStudent& s, double lambda, int cutoff = 0);

struct Gradients {
  Weights grads;
  LossBreakdown loss;
};

// Analytic BPTT gradients of student_loss.
Gradients backward(const ModelParams& p, const PreparedStudent& s, double lambda, int cutoff = 0);

struct AdamState {
  Weights m;
  Weights v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(const Weights& like);
};

void adam_step(AdamState& state, Weights& params, const Weights& grads, double lr);

double global_norm(const Weights& w);
// Rescales grads to norm max_norm when above it; returns the pre-clip norm.
double clip_global_norm(Weights& grads, double max_norm);

struct EpochRecord {
  int epoch = 0;
  LossBreakdown train;
  LossBreakdown val;
  double val_auc = 0.0;  // NaN when the validation set lacks a label
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

// Mean per-student breakdown over a set of prepared students.
LossBreakdown dataset_loss(const ModelParams& p, const std::vector<PreparedStudent>& students, double lambda,
                           int cutoff);

// Minibatch Adam over seeded per-epoch shuffles; returns the parameters of
// the epoch with the best validation AUC (earliest on ties).
TrainResult train_model(const std::vector<PreparedStudent>& train, const std::vector<PreparedStudent>& val,
                        const NormalizationStats& norm, int num_topics, const TrainConfig& cfg);

// Fits min-max stats on `train`, infers topic targets, then trains.
TrainResult train_model(const Dataset& train, const Dataset& val, const TopicModel& topics, const TrainConfig& cfg,
                        const ThetaInference& inference = {});

// Independent models per cutoff; each uses seed derive_seed(cfg.seed, cutoff).
std::map<int, TrainResult> train_per_week(const std::vector<PreparedStudent>& train,
                                          const std::vector<PreparedStudent>& val, const NormalizationStats& norm,
                                          int num_topics, const TrainConfig& base, const std::vector<int>& weeks,
                                          int threads = 1);

std::uint64_t cutoff_seed(std::uint64_t base, int cutoff);

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace click2state
