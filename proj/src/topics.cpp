#include "click2state/topics.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "click2state/common.hpp"

namespace click2state {

using nlohmann::json;

double TopicModel::word_prob(int topic, int word) const {
  const double v = static_cast<double>(vocab_size());
  return (static_cast<double>(topic_word_counts[topic][word]) + beta) /
         (static_cast<double>(topic_totals[topic]) + v * beta);
}

Eigen::MatrixXd TopicModel::topic_word_matrix() const {
  Eigen::MatrixXd phi(num_topics, vocab_size());
  for (int k = 0; k < num_topics; ++k)
    for (int w = 0; w < vocab_size(); ++w) phi(k, w) = word_prob(k, w);
  return phi;
}

Eigen::MatrixXd aligned_topic_word(const TopicModel& model, const std::vector<std::string>& tokens) {
  const double V = static_cast<double>(model.vocab_size());
  Eigen::MatrixXd out(model.num_topics, static_cast<Eigen::Index>(tokens.size()));
  for (std::size_t c = 0; c < tokens.size(); ++c) {
    const int w = model.vocab.find(tokens[c]);
    for (int k = 0; k < model.num_topics; ++k)
      out(k, static_cast<Eigen::Index>(c)) =
          w >= 0 ? model.word_prob(k, w) : model.beta / (static_cast<double>(model.topic_totals[k]) + V * model.beta);
  }
  return out;
}

namespace {

int sample_discrete(const std::vector<double>& weights, double total, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, total);
  double r = u(rng);
  const int n = static_cast<int>(weights.size());
  for (int k = 0; k < n - 1; ++k) {
    r -= weights[k];
    if (r < 0) return k;
  }
  return n - 1;
}

}  // namespace

TopicModel fit_lda(const std::vector<TokenizedDoc>& docs, const Vocabulary& vocab, const LdaConfig& cfg) {
  const int K = cfg.num_topics;
  if (K < 2) throw DataError("LDA requires at least 2 topics, got " + std::to_string(K));
  if (cfg.beta <= 0) throw DataError("LDA beta must be positive");
  if (cfg.iters < 0) throw DataError("LDA iters must be non-negative");
  const int V = vocab.size();
  const double alpha = cfg.resolved_alpha();
  const double beta = cfg.beta;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < docs.size(); ++i)
    if (!docs[i].token_ids.empty()) order.push_back(i);
  if (order.empty()) throw DataError("LDA corpus has no non-empty documents");
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return docs[a].id < docs[b].id; });

  TopicModel m;
  m.num_topics = K;
  m.alpha = alpha;
  m.beta = beta;
  m.vocab = vocab;
  m.topic_word_counts.assign(K, std::vector<std::int64_t>(V, 0));
  m.topic_totals.assign(K, 0);

  std::vector<std::vector<int>> assign(order.size());
  std::vector<std::vector<int>> doc_topic(order.size(), std::vector<int>(K, 0));
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x1da));
  std::uniform_int_distribution<int> init(0, K - 1);
  for (std::size_t d = 0; d < order.size(); ++d) {
    const auto& toks = docs[order[d]].token_ids;
    assign[d].resize(toks.size());
    for (std::size_t i = 0; i < toks.size(); ++i) {
      const int w = toks[i];
      if (w < 0 || w >= V) throw DataError("token id out of vocabulary range");
      const int k = init(rng);
      assign[d][i] = k;
      ++doc_topic[d][k];
      ++m.topic_word_counts[k][w];
      ++m.topic_totals[k];
    }
  }

  std::vector<double> weights(K);
  const double vbeta = V * beta;
  for (int it = 0; it < cfg.iters; ++it) {
    for (std::size_t d = 0; d < order.size(); ++d) {
      const auto& toks = docs[order[d]].token_ids;
      auto& nd = doc_topic[d];
      for (std::size_t i = 0; i < toks.size(); ++i) {
        const int w = toks[i];
        int k = assign[d][i];
        --nd[k];
        --m.topic_word_counts[k][w];
        --m.topic_totals[k];
        double total = 0.0;
        for (int j = 0; j < K; ++j) {
          weights[j] = (nd[j] + alpha) * (static_cast<double>(m.topic_word_counts[j][w]) + beta) /
                       (static_cast<double>(m.topic_totals[j]) + vbeta);
          total += weights[j];
        }
        k = sample_discrete(weights, total, rng);
        assign[d][i] = k;
        ++nd[k];
        ++m.topic_word_counts[k][w];
        ++m.topic_totals[k];
      }
    }
  }
  return m;
}

std::vector<TokenizedDoc> corpus_from_dataset(const Dataset& d, Vocabulary& vocab) {
  std::vector<std::pair<DocId, const std::string*>> notes;
  for (const auto& r : d.students)
    for (const auto& w : r.weeks)
      if (w.note) notes.emplace_back(DocId{r.student_id, w.week}, &*w.note);
  std::stable_sort(notes.begin(), notes.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  notes.erase(std::unique(notes.begin(), notes.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
              notes.end());
  std::vector<TokenizedDoc> docs;
  for (const auto& [id, text] : notes) {
    auto doc = preprocess(*text, vocab, VocabPolicy::Build, id);
    if (!doc.token_ids.empty()) docs.push_back(std::move(doc));
  }
  return docs;
}

TopicModel fit_lda(const Dataset& train, const LdaConfig& cfg) {
  Vocabulary vocab;
  const auto docs = corpus_from_dataset(train, vocab);
  return fit_lda(docs, vocab, cfg);
}

TopicDistribution infer_theta(const TopicModel& model, const TokenizedDoc& doc, int iters, std::uint64_t seed) {
  if (doc.token_ids.empty()) throw DataError("cannot infer topic distribution for empty note");
  const int K = model.num_topics;
  const int V = model.vocab_size();
  const double alpha = model.alpha;
  const double vbeta = V * model.beta;
  const std::size_t n = doc.token_ids.size();
  iters = std::max(iters, 1);
  const int burn = iters - std::max(iters / 2, 1);

  // Word likelihood under frozen counts is fixed per token; precompute it.
  std::vector<std::vector<double>> phi(n, std::vector<double>(K));
  for (std::size_t i = 0; i < n; ++i) {
    const int w = doc.token_ids[i];
    if (w < 0 || w >= V) throw DataError("token id out of vocabulary range");
    for (int k = 0; k < K; ++k)
      phi[i][k] = (static_cast<double>(model.topic_word_counts[k][w]) + model.beta) /
                  (static_cast<double>(model.topic_totals[k]) + vbeta);
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> init(0, K - 1);
  std::vector<int> assign(n);
  std::vector<int> nd(K, 0);
  for (std::size_t i = 0; i < n; ++i) {
    assign[i] = init(rng);
    ++nd[assign[i]];
  }

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(K);
  int samples = 0;
  std::vector<double> weights(K);
  const double denom = static_cast<double>(n) + K * alpha;
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      --nd[assign[i]];
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        weights[k] = (nd[k] + alpha) * phi[i][k];
        total += weights[k];
      }
      assign[i] = sample_discrete(weights, total, rng);
      ++nd[assign[i]];
    }
    if (it >= burn) {
      for (int k = 0; k < K; ++k) acc[k] += (nd[k] + alpha) / denom;
      ++samples;
    }
  }
  TopicDistribution out{acc / samples};
  out.probs /= out.probs.sum();
  return out;
}

std::vector<std::vector<int>> top_word_ids(const TopicModel& model, int k) {
  const int V = model.vocab_size();
  if (k > V) throw DataError("top_words: k=" + std::to_string(k) + " exceeds vocabulary size " + std::to_string(V));
  if (k < 0) throw DataError("top_words: k must be non-negative");
  std::vector<std::vector<int>> out;
  for (int t = 0; t < model.num_topics; ++t) {
    std::vector<int> ids(V);
    std::iota(ids.begin(), ids.end(), 0);
    // Within a topic the smoothed probability is monotone in the raw count,
    // so comparing counts avoids float ties that are not real ties.
    const auto& counts = model.topic_word_counts[t];
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
      if (counts[a] != counts[b]) return counts[a] > counts[b];
      return a < b;
    });
    ids.resize(static_cast<std::size_t>(k));
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<std::vector<std::string>> top_words(const TopicModel& model, int k) {
  std::vector<std::vector<std::string>> out;
  for (const auto& ids : top_word_ids(model, k)) {
    std::vector<std::string> words;
    for (int id : ids) words.push_back(model.vocab.token(id));
    out.push_back(std::move(words));
  }
  return out;
}

std::uint64_t note_seed(const ThetaInference& inf, const DocId& id) {
  return derive_seed(derive_seed(inf.seed, hash_string(id.student_id)), static_cast<std::uint64_t>(id.week));
}

std::string topic_model_to_json(const TopicModel& m) {
  json j;
  j["K"] = m.num_topics;
  j["alpha"] = m.alpha;
  j["beta"] = m.beta;
  j["vocabulary"] = m.vocab.tokens();
  j["doc_freq"] = m.vocab.doc_freq();
  j["topic_word_counts"] = m.topic_word_counts;
  j["topic_totals"] = m.topic_totals;
  return j.dump();
}

TopicModel topic_model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("topic model: parse error: ") + e.what());
  }
  TopicModel m;
  try {
    m.num_topics = j.at("K").get<int>();
    m.alpha = j.at("alpha").get<double>();
    m.beta = j.at("beta").get<double>();
    m.vocab = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
    if (j.contains("doc_freq")) m.vocab.set_doc_freq(j["doc_freq"].get<std::vector<int>>());
    m.topic_word_counts = j.at("topic_word_counts").get<std::vector<std::vector<std::int64_t>>>();
    m.topic_totals = j.at("topic_totals").get<std::vector<std::int64_t>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("topic model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("topic model: ") + e.what());
  }
  if (m.num_topics < 2 || static_cast<int>(m.topic_word_counts.size()) != m.num_topics ||
      static_cast<int>(m.topic_totals.size()) != m.num_topics)
    throw DataError("topic model: inconsistent topic count");
  for (int k = 0; k < m.num_topics; ++k) {
    const auto& row = m.topic_word_counts[k];
    if (static_cast<int>(row.size()) != m.vocab_size()) throw DataError("topic model: row length mismatch");
    std::int64_t sum = 0;
    for (auto c : row) {
      if (c < 0) throw DataError("topic model: negative count");
      sum += c;
    }
    if (sum != m.topic_totals[k]) throw DataError("topic model: topic_totals inconsistent with counts");
  }
  return m;
}

void save_topic_model(const std::filesystem::path& path, const TopicModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write topic model '" + path.string() + "'");
  out << topic_model_to_json(m) << '\n';
}

TopicModel load_topic_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open topic model '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return topic_model_from_json(ss.str());
}

}  // namespace click2state
