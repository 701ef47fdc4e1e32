#include "click2state/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "json.hpp"

#include "click2state/common.hpp"

namespace click2state {

using nlohmann::json;

namespace {

// Mean weekly counts of an engaged student, rows of the clickstream table.
// Zero cells get a small positive floor so every rate stays positive.
constexpr std::array<std::array<double, kNumClickTypes>, kNumSources> kTableRates = {{
    {53, 61, 0, 168, 904, 1732},
    {177, 167, 0, 455, 2301, 4887},
    {0, 0, 0, 0, 0, 0},
    {21, 89, 0, 263, 3862, 2440},
    {36, 69, 0, 122, 72, 1581},
}};
constexpr double kRateFloor = 0.5;
constexpr double kDegreePlanRate = 4.0;

Eigen::VectorXd dirichlet(const Eigen::VectorXd& conc, std::mt19937_64& rng) {
  Eigen::VectorXd x(conc.size());
  for (Eigen::Index i = 0; i < conc.size(); ++i) {
    std::gamma_distribution<double> g(conc[i], 1.0);
    x[i] = std::max(g(rng), 1e-300);
  }
  return x / x.sum();
}

std::string token_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%04d", id);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_students < 1) throw DataError("synth config: n_students must be >= 1");
  if (term_length < 2) throw DataError("synth config: term_length must be >= 2");
  if (!(fail_rate > 0.0 && fail_rate < 1.0)) throw DataError("synth config: fail_rate must be in (0, 1)");
  if (n_topics_planted < 2) throw DataError("synth config: n_topics_planted must be >= 2");
  if (vocab_size < 10 * n_topics_planted)
    throw DataError("synth config: vocab_size must be at least 10 x n_topics_planted");
  if (note_period < 1) throw DataError("synth config: note_period must be >= 1");
  if (note_length_mean < 1) throw DataError("synth config: note_length_mean must be >= 1");
  if (click_signal_strength < 0 || topic_signal_strength < 0)
    throw DataError("synth config: signal strengths must be non-negative");
  if (note_drop_prob < 0 || note_drop_prob >= 1) throw DataError("synth config: note_drop_prob must be in [0, 1)");
  if (mixture_concentration <= 0) throw DataError("synth config: mixture_concentration must be positive");
  if (latent_sd < 0 || std::abs(latent_persistence) >= 1)
    throw DataError("synth config: latent_sd >= 0 and |latent_persistence| < 1 required");
  if (student_activity_sd < 0 || week_activity_sd < 0) throw DataError("synth config: activity sds must be >= 0");
  if (!(click_loading_fraction >= 0 && click_loading_fraction <= 1))
    throw DataError("synth config: click_loading_fraction must be in [0, 1]");
}

SynthConfig synth_config_from_json(const std::string& text, SynthConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("synth config: parse error: ") + e.what());
  }
  try {
    c.n_students = j.value("n_students", c.n_students);
    c.term_length = j.value("term_length", c.term_length);
    c.fail_rate = j.value("fail_rate", c.fail_rate);
    c.n_topics_planted = j.value("n_topics_planted", c.n_topics_planted);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.note_period = j.value("note_period", c.note_period);
    c.note_length_mean = j.value("note_length_mean", c.note_length_mean);
    c.click_signal_strength = j.value("click_signal_strength", c.click_signal_strength);
    c.topic_signal_strength = j.value("topic_signal_strength", c.topic_signal_strength);
    c.seed = j.value("seed", c.seed);
    c.note_drop_prob = j.value("note_drop_prob", c.note_drop_prob);
    c.mixture_concentration = j.value("mixture_concentration", c.mixture_concentration);
    c.latent_sd = j.value("latent_sd", c.latent_sd);
    c.latent_persistence = j.value("latent_persistence", c.latent_persistence);
    c.trend_intercept = j.value("trend_intercept", c.trend_intercept);
    c.trend_slope = j.value("trend_slope", c.trend_slope);
    c.student_activity_sd = j.value("student_activity_sd", c.student_activity_sd);
    c.week_activity_sd = j.value("week_activity_sd", c.week_activity_sd);
    c.click_loading_fraction = j.value("click_loading_fraction", c.click_loading_fraction);
  } catch (const json::exception& e) {
    throw DataError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string synth_config_to_json(const SynthConfig& c) {
  json j = {{"n_students", c.n_students},
            {"term_length", c.term_length},
            {"fail_rate", c.fail_rate},
            {"n_topics_planted", c.n_topics_planted},
            {"vocab_size", c.vocab_size},
            {"note_period", c.note_period},
            {"note_length_mean", c.note_length_mean},
            {"click_signal_strength", c.click_signal_strength},
            {"topic_signal_strength", c.topic_signal_strength},
            {"seed", c.seed},
            {"note_drop_prob", c.note_drop_prob},
            {"mixture_concentration", c.mixture_concentration},
            {"latent_sd", c.latent_sd},
            {"latent_persistence", c.latent_persistence},
            {"trend_intercept", c.trend_intercept},
            {"trend_slope", c.trend_slope},
            {"student_activity_sd", c.student_activity_sd},
            {"week_activity_sd", c.week_activity_sd},
            {"click_loading_fraction", c.click_loading_fraction}};
  return j.dump();
}

PlantedGenerator build_generator(const SynthConfig& cfg) {
  cfg.validate();
  const int K = cfg.n_topics_planted;
  const int V = cfg.vocab_size;
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x9e4));
  std::normal_distribution<double> normal(0.0, 1.0);
  PlantedGenerator g;

  for (int v = 0; v < V; ++v) g.vocabulary.push_back(token_name(v));

  // Disjoint blocks of V / K words carry 90% of each topic's mass; the rest
  // is spread uniformly so every word has positive probability.
  const int block = V / K;
  constexpr double kBlockMass = 0.9;
  g.topic_word = Eigen::MatrixXd::Zero(K, V);
  g.topic_blocks.resize(K);
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd inside = dirichlet(Eigen::VectorXd::Constant(block, 2.0), rng);
    const double floor = (1.0 - kBlockMass) / static_cast<double>(V - block);
    g.topic_word.row(k).setConstant(floor);
    for (int i = 0; i < block; ++i) {
      const int w = k * block + i;
      g.topic_word(k, w) = kBlockMass * inside[i];
      g.topic_blocks[k].push_back(w);
    }
    g.topic_word.row(k) /= g.topic_word.row(k).sum();
  }

  // Topic loadings: centered, unit RMS. Softmax ignores the common shift.
  g.topic_loading.resize(K);
  for (int k = 0; k < K; ++k) g.topic_loading[k] = normal(rng);
  g.topic_loading.array() -= g.topic_loading.mean();
  g.topic_loading /= std::sqrt(g.topic_loading.squaredNorm() / K);
  g.topic_week_trend.resize(K);
  for (int k = 0; k < K; ++k) g.topic_week_trend[k] = 0.5 * normal(rng);

  for (int label = 0; label < 2; ++label) {
    const double s = label == 1 ? 1.0 : -1.0;
    g.topic_trend[label].resize(K);
    for (int k = 0; k < K; ++k) {
      const double l = cfg.topic_signal_strength * g.topic_loading[k];
      g.topic_trend[label][k] = {l * s * cfg.trend_intercept, g.topic_week_trend[k] + l * s * cfg.trend_slope};
    }
  }

  g.click_base_rate.resize(kNumCounts);
  g.click_loading = Eigen::VectorXd::Zero(kNumCounts);
  g.click_week_drift.resize(kNumCounts);
  for (int src = 0; src < kNumSources; ++src)
    for (int typ = 0; typ < kNumClickTypes; ++typ) {
      const int d = src * kNumClickTypes + typ;
      double rate = kTableRates[src][typ];
      if (src == static_cast<int>(ClickSource::DegreePlan) && typ != static_cast<int>(ClickType::Keypress))
        rate = kDegreePlanRate;
      g.click_base_rate[d] = std::max(rate, kRateFloor);
    }
  // A random subset of dimensions responds to the latent signal, alternating sign.
  std::vector<int> dims(kNumCounts);
  std::iota(dims.begin(), dims.end(), 0);
  std::shuffle(dims.begin(), dims.end(), rng);
  const int n_loaded = static_cast<int>(std::llround(cfg.click_loading_fraction * kNumCounts));
  for (int i = 0; i < n_loaded; ++i) g.click_loading[dims[i]] = (i % 2 == 0) ? 1.0 : -1.0;
  for (int d = 0; d < kNumCounts; ++d) g.click_week_drift[d] = 0.3 * normal(rng);

  for (int label = 0; label < 2; ++label) {
    const double s = label == 1 ? 1.0 : -1.0;
    g.click_trajectory[label].resize(kNumCounts);
    for (int d = 0; d < kNumCounts; ++d) {
      const double l = cfg.click_signal_strength * g.click_loading[d];
      g.click_trajectory[label][d] = {g.click_base_rate[d] * std::exp(l * s * cfg.trend_intercept),
                                      g.click_week_drift[d] + l * s * cfg.trend_slope};
    }
  }
  return g;
}

Dataset generate_dataset(const PlantedGenerator& gen, const SynthConfig& cfg) {
  cfg.validate();
  const int K = cfg.n_topics_planted;
  const int V = cfg.vocab_size;
  const int T = cfg.term_length;
  if (gen.topic_word.rows() != K || gen.topic_word.cols() != V)
    throw DataError("generate_dataset: generator does not match config");

  // Cumulative word distributions for inverse-CDF token sampling.
  std::vector<std::vector<double>> word_cdf(K, std::vector<double>(V));
  for (int k = 0; k < K; ++k) {
    double acc = 0.0;
    for (int v = 0; v < V; ++v) word_cdf[k][v] = acc += gen.topic_word(k, v);
    word_cdf[k].back() = 1.0;
  }

  Dataset d;
  d.term_length = T;
  d.students.reserve(static_cast<std::size_t>(cfg.n_students));
  const double phi = cfg.latent_persistence;
  const double innov = cfg.latent_sd * std::sqrt(1.0 - phi * phi);
  for (int n = 0; n < cfg.n_students; ++n) {
    std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(n)));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    StudentRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "s%05d", n);
    r.student_id = id;
    r.label = unif(rng) < cfg.fail_rate ? 1 : 0;
    const double s = r.label == 1 ? 1.0 : -1.0;

    const double units = 40.0 - 10.0 * cfg.click_signal_strength * s + 30.0 * normal(rng);
    r.transferred_units = static_cast<std::int64_t>(std::llround(std::clamp(units, 0.0, 200.0)));

    Eigen::VectorXd student_noise(kNumCounts);
    for (int k = 0; k < kNumCounts; ++k) student_noise[k] = cfg.student_activity_sd * normal(rng);
    const int phase = std::uniform_int_distribution<int>(0, cfg.note_period - 1)(rng);

    double eta = cfg.latent_sd * normal(rng);
    for (int t = 0; t < T; ++t) {
      if (t > 0) eta = phi * eta + innov * normal(rng);
      const double frac = static_cast<double>(t) / static_cast<double>(T - 1);
      const double m = s * (cfg.trend_intercept + cfg.trend_slope * frac) + eta;

      WeekObservation w;
      w.week = t;
      const double week_noise = cfg.week_activity_sd * normal(rng);
      for (int k = 0; k < kNumCounts; ++k) {
        const double log_rate = std::log(gen.click_base_rate[k]) + gen.click_week_drift[k] * frac +
                                cfg.click_signal_strength * gen.click_loading[k] * m + student_noise[k] + week_noise;
        std::poisson_distribution<std::int64_t> pois(std::exp(log_rate));
        w.counts[k] = pois(rng);
      }

      const bool scheduled = (t % cfg.note_period) == phase;
      if (scheduled && unif(rng) >= cfg.note_drop_prob) {
        Eigen::VectorXd logits = gen.topic_week_trend * frac + cfg.topic_signal_strength * gen.topic_loading * m;
        logits.array() -= logits.maxCoeff();
        Eigen::VectorXd mean = logits.array().exp().matrix();
        mean /= mean.sum();
        const Eigen::VectorXd mix = dirichlet(cfg.mixture_concentration * mean, rng);
        std::vector<double> mix_cdf(K);
        double acc = 0.0;
        for (int k = 0; k < K; ++k) mix_cdf[k] = acc += mix[k];
        mix_cdf.back() = 1.0;
        std::poisson_distribution<int> len(static_cast<double>(cfg.note_length_mean));
        const int n_tokens = std::max(1, len(rng));
        std::string text;
        for (int i = 0; i < n_tokens; ++i) {
          const int k = static_cast<int>(std::lower_bound(mix_cdf.begin(), mix_cdf.end(), unif(rng)) - mix_cdf.begin());
          const auto& cdf = word_cdf[std::min(k, K - 1)];
          const int v = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), unif(rng)) - cdf.begin());
          if (!text.empty()) text += ' ';
          text += gen.vocabulary[static_cast<std::size_t>(std::min(v, V - 1))];
        }
        w.note = std::move(text);
      }
      r.weeks.push_back(std::move(w));
    }
    d.students.push_back(std::move(r));
  }
  return d;
}

std::string planted_to_json(const PlantedGenerator& g, const SynthConfig& cfg) {
  json tw = json::array();
  for (Eigen::Index k = 0; k < g.topic_word.rows(); ++k) {
    json row = json::array();
    for (Eigen::Index v = 0; v < g.topic_word.cols(); ++v) row.push_back(g.topic_word(k, v));
    tw.push_back(std::move(row));
  }
  auto vec = [](const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
  };
  json trends = json::object();
  json clicks = json::object();
  for (int label = 0; label < 2; ++label) {
    const char* name = label == 1 ? "fail" : "pass";
    json t = json::array();
    for (const auto& lt : g.topic_trend[label]) t.push_back({{"intercept", lt.intercept}, {"slope", lt.slope}});
    trends[name] = std::move(t);
    json c = json::object();
    for (int d = 0; d < kNumCounts; ++d)
      c[count_key(d)] = {{"base_rate", g.click_trajectory[label][d].base_rate},
                         {"drift", g.click_trajectory[label][d].drift}};
    clicks[name] = std::move(c);
  }
  json j;
  j["config"] = json::parse(synth_config_to_json(cfg));
  j["vocabulary"] = g.vocabulary;
  j["topic_word"] = std::move(tw);
  j["topic_blocks"] = g.topic_blocks;
  j["topic_loading"] = vec(g.topic_loading);
  j["topic_week_trend"] = vec(g.topic_week_trend);
  j["topic_trend"] = std::move(trends);
  j["click_loading"] = vec(g.click_loading);
  j["click_trajectory"] = std::move(clicks);
  return j.dump();
}

TopicMatch match_topics(const Eigen::MatrixXd& planted, const Eigen::MatrixXd& recovered) {
  if (planted.cols() != recovered.cols()) throw DataError("match_topics: vocabulary sizes differ");
  const auto P = planted.rows(), R = recovered.rows();
  Eigen::MatrixXd cos(P, R);
  for (Eigen::Index i = 0; i < P; ++i)
    for (Eigen::Index j = 0; j < R; ++j)
      cos(i, j) = planted.row(i).dot(recovered.row(j)) / (planted.row(i).norm() * recovered.row(j).norm());
  TopicMatch m;
  m.recovered_for_planted.assign(static_cast<std::size_t>(P), -1);
  m.cosine.assign(static_cast<std::size_t>(P), 0.0);
  std::vector<bool> used_p(static_cast<std::size_t>(P)), used_r(static_cast<std::size_t>(R));
  const auto rounds = std::min(P, R);
  for (Eigen::Index round = 0; round < rounds; ++round) {
    double best = -2.0;
    Eigen::Index bi = -1, bj = -1;
    for (Eigen::Index i = 0; i < P; ++i) {
      if (used_p[i]) continue;
      for (Eigen::Index j = 0; j < R; ++j)
        if (!used_r[j] && cos(i, j) > best) {
          best = cos(i, j);
          bi = i;
          bj = j;
        }
    }
    used_p[bi] = used_r[bj] = true;
    m.recovered_for_planted[bi] = static_cast<int>(bj);
    m.cosine[bi] = best;
    m.mean_cosine += best;
  }
  m.mean_cosine /= static_cast<double>(rounds);
  return m;
}

}  // namespace click2state
