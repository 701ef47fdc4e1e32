#include "click2state/model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "click2state/common.hpp"

namespace click2state {

using nlohmann::json;

Weights Weights::zeros(int hidden, int topics, int input) {
  Weights w;
  w.gru.Wz = Eigen::MatrixXd::Zero(hidden, input);
  w.gru.Wr = Eigen::MatrixXd::Zero(hidden, input);
  w.gru.Wh = Eigen::MatrixXd::Zero(hidden, input);
  w.gru.Uz = Eigen::MatrixXd::Zero(hidden, hidden);
  w.gru.Ur = Eigen::MatrixXd::Zero(hidden, hidden);
  w.gru.Uh = Eigen::MatrixXd::Zero(hidden, hidden);
  w.gru.bz = Eigen::VectorXd::Zero(hidden);
  w.gru.br = Eigen::VectorXd::Zero(hidden);
  w.gru.bh = Eigen::VectorXd::Zero(hidden);
  w.heads.W_theta = Eigen::MatrixXd::Zero(topics, hidden);
  w.heads.W_y = Eigen::MatrixXd::Zero(1, hidden);
  return w;
}

std::vector<Eigen::Map<Eigen::VectorXd>> Weights::views() {
  std::vector<Eigen::Map<Eigen::VectorXd>> out;
  for_each([&](const char*, auto& t) { out.emplace_back(t.data(), t.size()); });
  return out;
}

std::vector<Eigen::Map<const Eigen::VectorXd>> Weights::views() const {
  std::vector<Eigen::Map<const Eigen::VectorXd>> out;
  for_each([&](const char*, const auto& t) { out.emplace_back(t.data(), t.size()); });
  return out;
}

std::vector<std::string> Weights::names() const {
  std::vector<std::string> out;
  for_each([&](const char* name, const auto&) { out.emplace_back(name); });
  return out;
}

std::size_t Weights::num_params() const {
  std::size_t n = 0;
  for_each([&](const char*, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

Eigen::VectorXd Weights::flatten() const {
  Eigen::VectorXd flat(num_params());
  Eigen::Index off = 0;
  for_each([&](const char*, const auto& t) {
    for (Eigen::Index j = 0; j < t.cols(); ++j)
      for (Eigen::Index i = 0; i < t.rows(); ++i) flat[off++] = t(i, j);
  });
  return flat;
}

void Weights::assign_flat(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != num_params())
    throw std::invalid_argument("assign_flat: size mismatch");
  Eigen::Index off = 0;
  for_each([&](const char*, auto& t) {
    for (Eigen::Index j = 0; j < t.cols(); ++j)
      for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = flat[off++];
  });
}

bool Weights::all_finite() const {
  bool ok = true;
  for_each([&](const char*, const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

ModelParams init_params(int hidden, int topics, std::uint64_t seed) {
  if (hidden < 1 || topics < 1) throw DataError("init_params: hidden size and topic count must be >= 1");
  ModelParams p;
  p.hidden = hidden;
  p.num_topics = topics;
  p.meta.seed = seed;
  p.weights = Weights::zeros(hidden, topics);
  std::mt19937_64 rng(derive_seed(seed, 0x1417));
  p.weights.for_each([&](const char* name, auto& t) {
    if (name[0] == 'b') return;  // biases stay zero
    const double fan_in = static_cast<double>(t.cols());
    const double fan_out = static_cast<double>(t.rows());
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = u(rng);
  });
  p.norm_stats.min = Eigen::VectorXd::Zero(kFeatureDim);
  p.norm_stats.max = Eigen::VectorXd::Ones(kFeatureDim);
  return p;
}

HiddenState gru_step(const GruParams& p, const FeatureVector& x, const HiddenState& h_prev) {
  const Eigen::VectorXd z = (p.Wz * x + p.Uz * h_prev + p.bz).unaryExpr([](double v) { return sigmoid(v); });
  const Eigen::VectorXd r = (p.Wr * x + p.Ur * h_prev + p.br).unaryExpr([](double v) { return sigmoid(v); });
  const Eigen::VectorXd cand = (p.Wh * x + p.Uh * r.cwiseProduct(h_prev) + p.bh).array().tanh().matrix();
  HiddenState h = (1.0 - z.array()).matrix().cwiseProduct(h_prev) + z.cwiseProduct(cand);
  if (!h.allFinite()) throw NumericError("GRU step produced a non-finite hidden state");
  return h;
}

std::vector<HiddenState> encode(const ModelParams& p, const std::vector<FeatureVector>& seq) {
  if (seq.empty()) throw DataError("forward: empty input sequence");
  std::vector<HiddenState> states;
  states.reserve(seq.size());
  HiddenState h = HiddenState::Zero(p.hidden);
  for (const auto& x : seq) {
    h = gru_step(p.weights.gru, x, h);
    states.push_back(h);
  }
  return states;
}

double predict_fail(const ModelParams& p, const HiddenState& h) { return sigmoid((p.weights.heads.W_y * h)(0)); }

TopicDistribution predict_topics(const ModelParams& p, const HiddenState& h) {
  return {softmax(p.weights.heads.W_theta * h)};
}

ForwardResult forward(const ModelParams& p, const std::vector<FeatureVector>& seq) {
  ForwardResult out;
  out.states = encode(p, seq);
  out.topic_preds.reserve(out.states.size());
  for (const auto& h : out.states) out.topic_preds.push_back(predict_topics(p, h));
  out.fail_prob = predict_fail(p, out.states.back());
  return out;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw DataError("checkpoint: " + name + " must have " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw DataError("checkpoint: " + name + " must have " + std::to_string(cols) + " columns");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, Eigen::Index n, const std::string& name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
    throw DataError("checkpoint: " + name + " must have " + std::to_string(n) + " entries");
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

std::string checkpoint_to_json(const ModelParams& p) {
  json j;
  j["meta"] = {{"H", p.hidden},
               {"K", p.num_topics},
               {"seed", p.meta.seed},
               {"week_cutoff", p.meta.week_cutoff},
               {"lambda", p.meta.lambda},
               {"best_val_auc", p.meta.best_val_auc},
               {"best_epoch", p.meta.best_epoch}};
  j["norm_stats"] = {{"min", vector_to_json(p.norm_stats.min)}, {"max", vector_to_json(p.norm_stats.max)}};
  const auto& g = p.weights.gru;
  j["gru"] = {{"Wz", matrix_to_json(g.Wz)}, {"Uz", matrix_to_json(g.Uz)}, {"bz", vector_to_json(g.bz)},
              {"Wr", matrix_to_json(g.Wr)}, {"Ur", matrix_to_json(g.Ur)}, {"br", vector_to_json(g.br)},
              {"Wh", matrix_to_json(g.Wh)}, {"Uh", matrix_to_json(g.Uh)}, {"bh", vector_to_json(g.bh)}};
  j["heads"] = {{"W_theta", matrix_to_json(p.weights.heads.W_theta)}, {"W_y", matrix_to_json(p.weights.heads.W_y)}};
  return j.dump();
}

ModelParams checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint: parse error: ") + e.what());
  }
  ModelParams p;
  try {
    const auto& meta = j.at("meta");
    p.hidden = meta.at("H").get<int>();
    p.num_topics = meta.at("K").get<int>();
    if (p.hidden < 1 || p.num_topics < 1) throw DataError("checkpoint: H and K must be positive");
    p.meta.seed = meta.at("seed").get<std::uint64_t>();
    p.meta.week_cutoff = meta.at("week_cutoff").get<int>();
    p.meta.lambda = meta.at("lambda").get<double>();
    p.meta.best_val_auc = meta.value("best_val_auc", -1.0);
    p.meta.best_epoch = meta.value("best_epoch", 0);
    p.norm_stats.min = vector_from_json(j.at("norm_stats").at("min"), kFeatureDim, "norm_stats.min");
    p.norm_stats.max = vector_from_json(j.at("norm_stats").at("max"), kFeatureDim, "norm_stats.max");
    const auto& g = j.at("gru");
    const int H = p.hidden, D = kFeatureDim;
    auto& w = p.weights;
    w.gru.Wz = matrix_from_json(g.at("Wz"), H, D, "Wz");
    w.gru.Wr = matrix_from_json(g.at("Wr"), H, D, "Wr");
    w.gru.Wh = matrix_from_json(g.at("Wh"), H, D, "Wh");
    w.gru.Uz = matrix_from_json(g.at("Uz"), H, H, "Uz");
    w.gru.Ur = matrix_from_json(g.at("Ur"), H, H, "Ur");
    w.gru.Uh = matrix_from_json(g.at("Uh"), H, H, "Uh");
    w.gru.bz = vector_from_json(g.at("bz"), H, "bz");
    w.gru.br = vector_from_json(g.at("br"), H, "br");
    w.gru.bh = vector_from_json(g.at("bh"), H, "bh");
    w.heads.W_theta = matrix_from_json(j.at("heads").at("W_theta"), p.num_topics, H, "W_theta");
    w.heads.W_y = matrix_from_json(j.at("heads").at("W_y"), 1, H, "W_y");
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  if (!p.weights.all_finite()) throw DataError("checkpoint: non-finite parameter");
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  out << checkpoint_to_json(p) << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace click2state
