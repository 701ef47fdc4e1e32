#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "click2state/features.hpp"
#include "click2state/topics.hpp"

namespace click2state {

// Update gate z, reset gate r and candidate state h~:
//   z  = sigmoid(Wz x + Uz h + bz)
//   r  = sigmoid(Wr x + Ur h + br)
//   h~ = tanh(Wh x + Uh (r * h) + bh)
//   h' = (1 - z) * h + z * h~
struct GruParams {
  Eigen::MatrixXd Wz, Uz, Wr, Ur, Wh, Uh;  // H x D, H x H
  Eigen::VectorXd bz, br, bh;

  int hidden() const { return static_cast<int>(Uz.rows()); }
  int input() const { return static_cast<int>(Wz.cols()); }
};

// Topic head softmax(W_theta h) and fail head sigmoid(W_y h); no biases.
struct HeadParams {
  Eigen::MatrixXd W_theta;  // K x H
  Eigen::MatrixXd W_y;      // 1 x H
};

// Trainable tensors. Also used as the gradient container.
struct Weights {
  GruParams gru;
  HeadParams heads;

  static Weights zeros(int hidden, int topics, int input = kFeatureDim);

  // Visits every tensor as (name, Eigen object). Order is fixed and used by
  // checkpoints, Adam and finite-difference checks.
  template <class Self, class F>
  static void visit(Self& w, F&& f) {
    f("Wz", w.gru.Wz);
    f("Uz", w.gru.Uz);
    f("bz", w.gru.bz);
    f("Wr", w.gru.Wr);
    f("Ur", w.gru.Ur);
    f("br", w.gru.br);
    f("Wh", w.gru.Wh);
    f("Uh", w.gru.Uh);
    f("bh", w.gru.bh);
    f("W_theta", w.heads.W_theta);
    f("W_y", w.heads.W_y);
  }
  template <class F> void for_each(F&& f) { visit(*this, std::forward<F>(f)); }
  template <class F> void for_each(F&& f) const { visit(*this, std::forward<F>(f)); }

  // Contiguous storage of each tensor, in visit order.
  std::vector<Eigen::Map<Eigen::VectorXd>> views();
  std::vector<Eigen::Map<const Eigen::VectorXd>> views() const;
  std::vector<std::string> names() const;

  std::size_t num_params() const;
  Eigen::VectorXd flatten() const;
  void assign_flat(const Eigen::VectorXd& flat);
  bool all_finite() const;
};

struct ModelMeta {
  std::uint64_t seed = 0;
  int week_cutoff = 0;
  double lambda = 0.5;
  double best_val_auc = -1.0;  // < 0 when no validation was run
  int best_epoch = 0;
};

struct ModelParams {
  Weights weights;
  NormalizationStats norm_stats;
  int num_topics = 0;
  int hidden = 0;
  ModelMeta meta;
};

using HiddenState = Eigen::VectorXd;

struct ForwardResult {
  std::vector<HiddenState> states;
  std::vector<TopicDistribution> topic_preds;
  double fail_prob = 0.5;
};

double sigmoid(double x);
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Glorot-uniform matrices, zero biases. Normalization stats default to an
// identity mapping over [0, 1].
ModelParams init_params(int hidden, int topics, std::uint64_t seed);

HiddenState gru_step(const GruParams& p, const FeatureVector& x, const HiddenState& h_prev);
ForwardResult forward(const ModelParams& p, const std::vector<FeatureVector>& seq);
// Hidden states only; skips the topic head.
std::vector<HiddenState> encode(const ModelParams& p, const std::vector<FeatureVector>& seq);
double predict_fail(const ModelParams& p, const HiddenState& h);
TopicDistribution predict_topics(const ModelParams& p, const HiddenState& h);

std::string checkpoint_to_json(const ModelParams& p);
ModelParams checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const ModelParams& p);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace click2state
