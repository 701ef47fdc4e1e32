#include "click2state/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>
#include <utility>

#include "json.hpp"

#include "click2state/common.hpp"
#include "click2state/evaluation.hpp"

namespace click2state {

using nlohmann::json;

std::vector<PreparedStudent> prepare_students(const Dataset& d, const NormalizationStats& norm,
                                              const TopicModel& topics, const ThetaInference& inference) {
  std::vector<PreparedStudent> out;
  out.reserve(d.size());
  for (const auto& r : d.students) {
    PreparedStudent s;
    s.student_id = r.student_id;
    s.label = r.label;
    s.features = featurize(r, norm);
    for (const auto& w : r.weeks) {
      if (!w.note) continue;
      DocId id{r.student_id, w.week};
      auto doc = preprocess_frozen(*w.note, topics.vocab, id);
      if (doc.token_ids.empty()) continue;
      s.notes.push_back({w.week, infer_theta(topics, doc, inference.iters, note_seed(inference, id))});
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<PreparedStudent> prepare_sequences(const Dataset& d, const NormalizationStats& norm) {
  std::vector<PreparedStudent> out;
  out.reserve(d.size());
  for (const auto& r : d.students) out.push_back({r.student_id, r.label, featurize(r, norm), {}});
  return out;
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DataError("train config: lambda must be in [0, 1]");
  if (!(learning_rate > 0.0)) throw DataError("train config: learning_rate must be positive");
  if (epochs < 0) throw DataError("train config: epochs must be non-negative");
  if (hidden < 1) throw DataError("train config: hidden size must be positive");
  if (minibatch_size < 1) throw DataError("train config: minibatch_size must be >= 1");
  if (weight_decay < 0) throw DataError("train config: weight_decay must be non-negative");
}

TrainConfig train_config_from_json(const std::string& text, TrainConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("train config: parse error: ") + e.what());
  }
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lambda = j.value("lambda", c.lambda);
    c.epochs = j.value("epochs", c.epochs);
    c.hidden = j.value("hidden", c.hidden);
    c.week_cutoff = j.value("week_cutoff", c.week_cutoff);
    c.minibatch_size = j.value("minibatch_size", c.minibatch_size);
    c.seed = j.value("seed", c.seed);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
  } catch (const json::exception& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

double kld_loss(const TopicDistribution& theta, const TopicDistribution& theta_hat) {
  if (theta.size() != theta_hat.size()) throw DataError("kld_loss: dimension mismatch");
  double sum = 0.0;
  for (int k = 0; k < theta.size(); ++k) {
    const double pk = theta.probs[k];
    if (!(pk > 0.0)) continue;
    const double q = theta_hat.probs[k];
    if (!(q > 0.0)) throw NumericError("kld_loss: predicted distribution has a zero entry");
    sum += pk * (std::log(pk) - std::log(q));
  }
  return sum;
}

double bce_loss(int y, double p) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

namespace {

std::size_t window_length(const PreparedStudent& s, int cutoff) {
  if (s.features.empty()) throw DataError("student '" + s.student_id + "' has no weeks");
  return cutoff > 0 ? std::min(s.features.size(), static_cast<std::size_t>(cutoff)) : s.features.size();
}

std::size_t notes_in_window(const PreparedStudent& s, std::size_t T) {
  return static_cast<std::size_t>(std::count_if(s.notes.begin(), s.notes.end(),
                                                [T](const NoteTarget& n) { return static_cast<std::size_t>(n.week) < T; }));
}

// Forward intermediates of one GRU step.
struct StepCache {
  Eigen::VectorXd h_prev, z, r, cand, h;
};

}  // namespace

LossBreakdown student_loss(const ModelParams& p, const PreparedStudent& s, double lambda, int cutoff) {
  const std::size_t T = window_length(s, cutoff);
  const std::vector<FeatureVector> seq(s.features.begin(), s.features.begin() + static_cast<std::ptrdiff_t>(T));
  const auto states = encode(p, seq);
  LossBreakdown out;
  out.bce = bce_loss(s.label, predict_fail(p, states.back()));
  const std::size_t n_notes = notes_in_window(s, T);
  if (n_notes > 0) {
    double sum = 0.0;
    for (const auto& n : s.notes)
      if (static_cast<std::size_t>(n.week) < T) sum += kld_loss(n.theta, predict_topics(p, states[n.week]));
    out.mean_kld = sum / static_cast<double>(n_notes);
  }
  out.total = lambda * out.bce + (1.0 - lambda) * out.mean_kld;
  return out;
}

Gradients backward(const ModelParams& p, const PreparedStudent& s, double lambda, int cutoff) {
  const auto& g = p.weights.gru;
  const auto& Wt = p.weights.heads.W_theta;
  const auto& Wy = p.weights.heads.W_y;
  const std::size_t T = window_length(s, cutoff);
  const int H = p.hidden;

  std::vector<StepCache> cache(T);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
  for (std::size_t t = 0; t < T; ++t) {
    const auto& x = s.features[t];
    auto& c = cache[t];
    c.h_prev = h;
    c.z = (g.Wz * x + g.Uz * h + g.bz).unaryExpr([](double v) { return sigmoid(v); });
    c.r = (g.Wr * x + g.Ur * h + g.br).unaryExpr([](double v) { return sigmoid(v); });
    c.cand = (g.Wh * x + g.Uh * c.r.cwiseProduct(h) + g.bh).array().tanh().matrix();
    c.h = (1.0 - c.z.array()).matrix().cwiseProduct(h) + c.z.cwiseProduct(c.cand);
    if (!c.h.allFinite()) throw NumericError("GRU step produced a non-finite hidden state");
    h = c.h;
  }

  Gradients out;
  out.grads = Weights::zeros(H, p.num_topics, g.input());
  auto& dg = out.grads.gru;
  auto& dWt = out.grads.heads.W_theta;
  auto& dWy = out.grads.heads.W_y;

  // Head contributions into each h_t.
  std::vector<Eigen::VectorXd> dh_head(T, Eigen::VectorXd::Zero(H));
  const double p_fail = sigmoid((Wy * cache[T - 1].h)(0));
  out.loss.bce = bce_loss(s.label, p_fail);
  {
    const bool clamped = p_fail < 1e-12 || p_fail > 1.0 - 1e-12;
    const double dlogit = clamped ? 0.0 : lambda * (p_fail - static_cast<double>(s.label));
    dWy += dlogit * cache[T - 1].h.transpose();
    dh_head[T - 1] += dlogit * Wy.transpose();
  }
  const std::size_t n_notes = notes_in_window(s, T);
  if (n_notes > 0) {
    const double coef = (1.0 - lambda) / static_cast<double>(n_notes);
    double sum = 0.0;
    for (const auto& n : s.notes) {
      if (static_cast<std::size_t>(n.week) >= T) continue;
      const auto& ht = cache[n.week].h;
      const TopicDistribution pred{softmax(Wt * ht)};
      sum += kld_loss(n.theta, pred);
      const Eigen::VectorXd dlogits = coef * (pred.probs - n.theta.probs);
      dWt += dlogits * ht.transpose();
      dh_head[n.week] += Wt.transpose() * dlogits;
    }
    out.loss.mean_kld = sum / static_cast<double>(n_notes);
  }
  out.loss.total = lambda * out.loss.bce + (1.0 - lambda) * out.loss.mean_kld;

  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
  for (std::size_t tt = T; tt-- > 0;) {
    const auto& c = cache[tt];
    const auto& x = s.features[tt];
    const Eigen::VectorXd dh = dh_next + dh_head[tt];
    const Eigen::VectorXd da_z = dh.cwiseProduct(c.cand - c.h_prev).cwiseProduct(c.z.cwiseProduct((1.0 - c.z.array()).matrix()));
    const Eigen::VectorXd da_h = dh.cwiseProduct(c.z).cwiseProduct((1.0 - c.cand.array().square()).matrix());
    const Eigen::VectorXd rh = c.r.cwiseProduct(c.h_prev);
    const Eigen::VectorXd d_rh = g.Uh.transpose() * da_h;
    const Eigen::VectorXd da_r = d_rh.cwiseProduct(c.h_prev).cwiseProduct(c.r.cwiseProduct((1.0 - c.r.array()).matrix()));

    dg.Wz += da_z * x.transpose();
    dg.Uz += da_z * c.h_prev.transpose();
    dg.bz += da_z;
    dg.Wr += da_r * x.transpose();
    dg.Ur += da_r * c.h_prev.transpose();
    dg.br += da_r;
    dg.Wh += da_h * x.transpose();
    dg.Uh += da_h * rh.transpose();
    dg.bh += da_h;

    dh_next = dh.cwiseProduct((1.0 - c.z.array()).matrix()) + d_rh.cwiseProduct(c.r) + g.Uz.transpose() * da_z +
              g.Ur.transpose() * da_r;
  }
  if (!out.grads.all_finite()) throw NumericError("backward produced a non-finite gradient");
  return out;
}

AdamState AdamState::for_params(const Weights& like) {
  AdamState s;
  s.m = Weights::zeros(like.gru.hidden(), static_cast<int>(like.heads.W_theta.rows()), like.gru.input());
  s.v = s.m;
  return s;
}

void adam_step(AdamState& state, Weights& params, const Weights& grads, double lr) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto pv = params.views();
  auto gv = grads.views();
  auto mv = state.m.views();
  auto vv = state.v.views();
  if (pv.size() != gv.size()) throw DataError("adam_step: tensor count mismatch");
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (pv[i].size() != gv[i].size() || mv[i].size() != gv[i].size()) throw DataError("adam_step: shape mismatch");
    mv[i] = state.beta1 * mv[i] + (1.0 - state.beta1) * gv[i];
    vv[i] = state.beta2 * vv[i] + (1.0 - state.beta2) * gv[i].cwiseProduct(gv[i]);
    pv[i].array() -= lr * (mv[i].array() / bc1) / ((vv[i].array() / bc2).sqrt() + state.eps);
  }
}

double global_norm(const Weights& w) {
  double sq = 0.0;
  for (const auto& v : w.views()) sq += v.squaredNorm();
  return std::sqrt(sq);
}

double clip_global_norm(Weights& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& v : grads.views()) v *= scale;
  }
  return norm;
}

LossBreakdown dataset_loss(const ModelParams& p, const std::vector<PreparedStudent>& students, double lambda,
                           int cutoff) {
  LossBreakdown mean;
  if (students.empty()) return mean;
  for (const auto& s : students) {
    const auto l = student_loss(p, s, lambda, cutoff);
    mean.bce += l.bce;
    mean.mean_kld += l.mean_kld;
  }
  const double n = static_cast<double>(students.size());
  mean.bce /= n;
  mean.mean_kld /= n;
  mean.total = lambda * mean.bce + (1.0 - lambda) * mean.mean_kld;
  return mean;
}

namespace {

double validation_auc(const ModelParams& p, const std::vector<PreparedStudent>& val, int cutoff) {
  bool has0 = false, has1 = false;
  for (const auto& s : val) (s.label ? has1 : has0) = true;
  if (!has0 || !has1) return std::nan("");
  const auto ws = score_week(p, val, cutoff);
  return auc(ws.scores, ws.labels);
}

}  // namespace

TrainResult train_model(const std::vector<PreparedStudent>& train, const std::vector<PreparedStudent>& val,
                        const NormalizationStats& norm, int num_topics, const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw DataError("train_model: empty training set");
  TrainResult result;
  ModelParams p = init_params(cfg.hidden, num_topics, cfg.seed);
  p.norm_stats = norm;
  p.meta.week_cutoff = cfg.week_cutoff;
  p.meta.lambda = cfg.lambda;
  result.params = p;
  if (cfg.epochs == 0) return result;

  AdamState adam = AdamState::for_params(p.weights);
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x5f1e));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  double best_auc = -1.0;
  bool have_best = false;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch_size));
      Weights batch = Weights::zeros(p.hidden, p.num_topics);
      for (std::size_t i = start; i < end; ++i) {
        const auto gr = backward(p, train[order[i]], cfg.lambda, cfg.week_cutoff);
        auto bv = batch.views();
        const auto gv = gr.grads.views();
        for (std::size_t k = 0; k < bv.size(); ++k) bv[k] += gv[k];
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      auto bv = batch.views();
      const auto pv = std::as_const(p.weights).views();
      for (std::size_t k = 0; k < bv.size(); ++k) {
        bv[k] *= inv;
        if (cfg.weight_decay > 0) bv[k] += cfg.weight_decay * pv[k];
      }
      clip_global_norm(batch, cfg.clip_norm);
      adam_step(adam, p.weights, batch, cfg.learning_rate);
      if (!p.weights.all_finite()) throw NumericError("training diverged: non-finite parameters");
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train = dataset_loss(p, train, cfg.lambda, cfg.week_cutoff);
    rec.val = dataset_loss(p, val, cfg.lambda, cfg.week_cutoff);
    rec.val_auc = validation_auc(p, val, cfg.week_cutoff);
    result.history.push_back(rec);

    if (!std::isnan(rec.val_auc) && rec.val_auc > best_auc) {
      best_auc = rec.val_auc;
      have_best = true;
      result.params = p;
      result.params.meta.best_val_auc = rec.val_auc;
      result.params.meta.best_epoch = epoch;
    }
  }
  if (!have_best) {
    result.params = p;
    result.params.meta.best_epoch = cfg.epochs;
  }
  return result;
}

TrainResult train_model(const Dataset& train, const Dataset& val, const TopicModel& topics, const TrainConfig& cfg,
                        const ThetaInference& inference) {
  if (train.students.empty()) throw DataError("train_model: empty training set");
  const auto norm = fit_minmax(train);
  const auto tr = prepare_students(train, norm, topics, inference);
  const auto va = val.students.empty() ? std::vector<PreparedStudent>{} : prepare_students(val, norm, topics, inference);
  return train_model(tr, va, norm, topics.num_topics, cfg);
}

std::uint64_t cutoff_seed(std::uint64_t base, int cutoff) {
  return derive_seed(base, 0xc070ff000ULL + static_cast<std::uint64_t>(cutoff));
}

std::map<int, TrainResult> train_per_week(const std::vector<PreparedStudent>& train,
                                          const std::vector<PreparedStudent>& val, const NormalizationStats& norm,
                                          int num_topics, const TrainConfig& base, const std::vector<int>& weeks,
                                          int threads) {
  std::vector<TrainResult> results(weeks.size());
  auto run = [&](std::size_t i) {
    TrainConfig cfg = base;
    cfg.week_cutoff = weeks[i];
    cfg.seed = cutoff_seed(base.seed, weeks[i]);
    results[i] = train_model(train, val, norm, num_topics, cfg);
  };
  threads = std::max(1, threads);
  if (threads == 1 || weeks.size() < 2) {
    for (std::size_t i = 0; i < weeks.size(); ++i) run(i);
  } else {
    std::vector<std::exception_ptr> errors(weeks.size());
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < weeks.size(); i = next++) {
          try {
            run(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  std::map<int, TrainResult> out;
  for (std::size_t i = 0; i < weeks.size(); ++i) out[weeks[i]] = std::move(results[i]);
  return out;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_bce,train_kld,train_total,val_total,val_auc\n";
  for (const auto& r : history)
    out << r.epoch << ',' << format_double(r.train.bce) << ',' << format_double(r.train.mean_kld) << ','
        << format_double(r.train.total) << ',' << format_double(r.val.total) << ',' << format_double(r.val_auc)
        << '\n';
}

}  // namespace click2state
