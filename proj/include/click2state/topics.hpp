#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "click2state/datamodel.hpp"
#include "click2state/text.hpp"

namespace click2state {

// Per-note distribution over K topics; entries positive and summing to one.
struct TopicDistribution {
  Eigen::VectorXd probs;
  int size() const { return static_cast<int>(probs.size()); }
};

struct LdaConfig {
  int num_topics = 10;
  double alpha = -1.0;  // <= 0 selects 50 / K
  double beta = 0.01;
  int iters = 200;
  std::uint64_t seed = 0;

  double resolved_alpha() const { return alpha > 0 ? alpha : 50.0 / num_topics; }
};

// Fitted collapsed-Gibbs LDA state. Counts are integers stored as int64.
struct TopicModel {
  int num_topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  Vocabulary vocab;
  std::vector<std::vector<std::int64_t>> topic_word_counts;  // K x V
  std::vector<std::int64_t> topic_totals;                    // K

  int vocab_size() const { return vocab.size(); }
  // Smoothed phi_kw = (n_kw + beta) / (n_k + V beta).
  double word_prob(int topic, int word) const;
  Eigen::MatrixXd topic_word_matrix() const;
};

// Smoothed topic-word matrix with columns ordered by an external token list;
// tokens unknown to the model get the beta-only probability.
Eigen::MatrixXd aligned_topic_word(const TopicModel& model, const std::vector<std::string>& tokens);

// Sweeps visit tokens in (doc_id, position) order regardless of input order.
TopicModel fit_lda(const std::vector<TokenizedDoc>& docs, const Vocabulary& vocab, const LdaConfig& cfg);

// Non-empty notes of a dataset as documents, in (student_id, week) order with
// duplicate ids (oversampled records) kept once. Builds `vocab` as it goes.
std::vector<TokenizedDoc> corpus_from_dataset(const Dataset& d, Vocabulary& vocab);
TopicModel fit_lda(const Dataset& train, const LdaConfig& cfg);

// Held-out Gibbs inference with model counts frozen. The returned
// distribution averages (n_k + alpha) / (n + K alpha) over the last
// iters/2 sweeps.
TopicDistribution infer_theta(const TopicModel& model, const TokenizedDoc& doc, int iters, std::uint64_t seed);

// Per-topic tokens by descending smoothed probability, ties by lower id.
std::vector<std::vector<std::string>> top_words(const TopicModel& model, int k);
std::vector<std::vector<int>> top_word_ids(const TopicModel& model, int k);

// Settings for turning notes into topic-distribution targets. Each note's
// inference seed is derived from `seed`, its student id and week, so the
// same note always gets the same target.
struct ThetaInference {
  int iters = 50;
  std::uint64_t seed = 0;
};

std::uint64_t note_seed(const ThetaInference& inf, const DocId& id);

void save_topic_model(const std::filesystem::path& path, const TopicModel& m);
TopicModel load_topic_model(const std::filesystem::path& path);
std::string topic_model_to_json(const TopicModel& m);
TopicModel topic_model_from_json(const std::string& text);

}  // namespace click2state
