#include "click2state/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "click2state/common.hpp"
#include "click2state/evaluation.hpp"
#include "click2state/interpret.hpp"

namespace click2state {

namespace fs = std::filesystem;
using json = nlohmann::json;

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  synth.seed = s;
  lda.seed = s;
  inference.seed = s;
  train.seed = s;
}

void RunConfig::validate() const {
  synth.validate();
  train.validate();
  if (lda.num_topics < 2) throw DataError("lda config: num_topics must be >= 2");
  if (lda.iters < 1 || inference.iters < 2) throw DataError("lda config: iteration counts too small");
  if (weeks.empty()) throw DataError("run config: weeks must not be empty");
  for (int w : weeks)
    if (w < 1) throw DataError("run config: weeks must be positive");
  if (hidden_sizes.empty()) throw DataError("run config: hidden_sizes must not be empty");
  for (int h : hidden_sizes)
    if (h < 1) throw DataError("run config: hidden sizes must be positive");
  if (threads < 1) throw DataError("run config: threads must be >= 1");
  if (bootstrap_samples < 1) throw DataError("run config: bootstrap_samples must be >= 1");
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("run config: parse error: ") + e.what());
  }
  if (!j.is_object()) throw DataError("run config: top level must be an object");
  RunConfig c;
  try {
    c.set_seed(j.value("seed", std::uint64_t{0}));
    if (j.contains("split_seed")) c.split_seed = j["split_seed"].get<std::uint64_t>();
    if (j.contains("synth")) c.synth = synth_config_from_json(j["synth"].dump(), c.synth);
    if (j.contains("lda")) {
      const auto& l = j["lda"];
      c.lda.num_topics = l.value("num_topics", c.lda.num_topics);
      c.lda.alpha = l.value("alpha", c.lda.alpha);
      c.lda.beta = l.value("beta", c.lda.beta);
      c.lda.iters = l.value("iters", c.lda.iters);
      c.lda.seed = l.value("seed", c.lda.seed);
      c.inference.iters = l.value("infer_iters", c.inference.iters);
      c.inference.seed = l.value("infer_seed", c.inference.seed);
    }
    if (j.contains("train")) {
      c.train = train_config_from_json(j["train"].dump(), c.train);
      c.train_baseline = j["train"].value("train_baseline", c.train_baseline);
      c.balance_train = j["train"].value("balance", c.balance_train);
    }
    c.weeks = j.value("weeks", c.weeks);
    c.hidden_sizes = j.value("hidden_sizes", c.hidden_sizes);
    c.exclude_topics = j.value("exclude_topics", c.exclude_topics);
    c.threads = j.value("threads", c.threads);
    c.bootstrap_samples = j.value("bootstrap_samples", c.bootstrap_samples);
    const std::string pool = j.value("extremes_pool", std::string("test"));
    if (pool == "test")
      c.extremes_pool = ExtremesPool::Test;
    else if (pool == "train")
      c.extremes_pool = ExtremesPool::Train;
    else if (pool == "optimized")
      c.extremes_pool = ExtremesPool::Optimized;
    else
      throw DataError("run config: extremes_pool must be test, train or optimized");
  } catch (const json::exception& e) {
    throw DataError(std::string("run config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(ss.str());
}

std::string run_config_to_json(const RunConfig& c) {
  const char* pools[] = {"test", "train", "optimized"};
  json j;
  j["seed"] = c.seed;
  j["split_seed"] = c.resolved_split_seed();
  j["synth"] = json::parse(synth_config_to_json(c.synth));
  j["lda"] = {{"num_topics", c.lda.num_topics}, {"alpha", c.lda.alpha},      {"beta", c.lda.beta},
              {"iters", c.lda.iters},           {"seed", c.lda.seed},        {"infer_iters", c.inference.iters},
              {"infer_seed", c.inference.seed}};
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"lambda", c.train.lambda},
                {"epochs", c.train.epochs},
                {"hidden", c.train.hidden},
                {"week_cutoff", c.train.week_cutoff},
                {"minibatch_size", c.train.minibatch_size},
                {"seed", c.train.seed},
                {"weight_decay", c.train.weight_decay},
                {"clip_norm", c.train.clip_norm},
                {"train_baseline", c.train_baseline},
                {"balance", c.balance_train}};
  j["weeks"] = c.weeks;
  j["hidden_sizes"] = c.hidden_sizes;
  j["exclude_topics"] = c.exclude_topics;
  j["extremes_pool"] = pools[static_cast<int>(c.extremes_pool)];
  j["bootstrap_samples"] = c.bootstrap_samples;
  j["threads"] = c.threads;
  return j.dump(2);
}

DatasetSplit pipeline_split(const Dataset& d, const RunConfig& cfg) {
  auto split = split_dataset(d, SplitRatios{}, cfg.resolved_split_seed());
  if (cfg.balance_train) split.train = resample_balanced(split.train, cfg.resolved_split_seed());
  return split;
}

std::string checkpoint_name(const std::string& prefix, int week, int hidden) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "_w%02d_h%d", week, hidden);
  return prefix + buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

int resolved_week(int cutoff, int term_length) {
  return cutoff <= 0 ? term_length : std::min(cutoff, term_length);
}

bool same_norm(const NormalizationStats& a, const NormalizationStats& b) {
  return a.min == b.min && a.max == b.max;
}

}  // namespace

CommandOutput cmd_synth(const RunConfig& cfg, const fs::path& out) {
  const auto gen = build_generator(cfg.synth);
  const auto data = generate_dataset(gen, cfg.synth);
  CommandOutput res;
  res.files = {out / "students.jsonl", out / "planted.json"};
  {
    auto f = open_out(res.files[0]);
    write_dataset(f, data);
  }
  write_text(res.files[1], planted_to_json(gen, cfg.synth));
  return res;
}

CommandOutput cmd_lda(const RunConfig& cfg, const fs::path& dataset, const fs::path& out) {
  const auto split = pipeline_split(load_dataset(dataset), cfg);
  const auto model = fit_lda(split.train, cfg.lda);
  CommandOutput res;
  res.files = {out / "topic_model.json"};
  fs::create_directories(out);
  save_topic_model(res.files[0], model);
  return res;
}

CommandOutput cmd_train(const RunConfig& cfg, const fs::path& dataset, const fs::path& topic_model,
                        const fs::path& out, std::optional<double> lambda_override) {
  const auto split = pipeline_split(load_dataset(dataset), cfg);
  const auto topics = load_topic_model(topic_model);
  const auto norm = fit_minmax(split.train);
  const auto train = prepare_students(split.train, norm, topics, cfg.inference);
  const auto val = prepare_students(split.val, norm, topics, cfg.inference);

  std::vector<std::pair<std::string, double>> variants;
  if (lambda_override) {
    variants.emplace_back(*lambda_override == 1.0 ? "baseline" : "click2state", *lambda_override);
  } else {
    variants.emplace_back(cfg.train.lambda == 1.0 ? "baseline" : "click2state", cfg.train.lambda);
    if (cfg.train_baseline && cfg.train.lambda != 1.0) variants.emplace_back("baseline", 1.0);
  }

  CommandOutput res;
  for (const auto& [prefix, lambda] : variants)
    for (int h : cfg.hidden_sizes) {
      TrainConfig tc = cfg.train;
      tc.lambda = lambda;
      tc.hidden = h;
      const auto results = train_per_week(train, val, norm, topics.num_topics, tc, cfg.weeks, cfg.threads);
      for (const auto& [week, r] : results) {
        const auto name = checkpoint_name(prefix, week, h);
        const auto ckpt = out / "checkpoints" / (name + ".json");
        fs::create_directories(ckpt.parent_path());
        save_checkpoint(ckpt, r.params);
        const auto hist = out / "history" / (name + ".csv");
        auto f = open_out(hist);
        write_history_csv(f, r.history);
        res.files.push_back(ckpt);
        res.files.push_back(hist);
      }
    }
  return res;
}

CommandOutput cmd_eval(const RunConfig& cfg, const fs::path& checkpoints, const fs::path& dataset,
                       const fs::path& topic_model, const fs::path& out) {
  if (!fs::is_directory(checkpoints)) throw DataError("checkpoint directory not found: " + checkpoints.string());
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(checkpoints))
    if (e.is_regular_file() && e.path().extension() == ".json") paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());

  const auto split = pipeline_split(load_dataset(dataset), cfg);
  const auto topics = load_topic_model(topic_model);
  const int term = split.test.term_length;

  // Best validation AUC per (variant, week); ties keep the smaller hidden size.
  std::map<int, ModelParams> best[2];
  for (const auto& p : paths) {
    const auto stem = p.stem().string();
    int variant;
    if (stem.rfind("click2state_", 0) == 0)
      variant = 0;
    else if (stem.rfind("baseline_", 0) == 0)
      variant = 1;
    else
      continue;
    auto m = load_checkpoint(p);
    const int week = resolved_week(m.meta.week_cutoff, term);
    const double score = std::isnan(m.meta.best_val_auc) ? -1.0 : m.meta.best_val_auc;
    auto it = best[variant].find(week);
    if (it == best[variant].end()) {
      best[variant].emplace(week, std::move(m));
      continue;
    }
    const double cur = std::isnan(it->second.meta.best_val_auc) ? -1.0 : it->second.meta.best_val_auc;
    if (score > cur || (score == cur && m.hidden < it->second.hidden)) it->second = std::move(m);
  }
  if (best[0].empty() && best[1].empty()) throw DataError("no checkpoints found in " + checkpoints.string());

  std::vector<std::pair<NormalizationStats, std::vector<PreparedStudent>>> prepared;
  auto test_for = [&](const ModelParams& m) -> const std::vector<PreparedStudent>& {
    for (const auto& [norm, students] : prepared)
      if (same_norm(norm, m.norm_stats)) return students;
    prepared.emplace_back(m.norm_stats, prepare_students(split.test, m.norm_stats, topics, cfg.inference));
    return prepared.back().second;
  };

  std::vector<int> weeks;
  for (const auto& b : best)
    for (const auto& [w, m] : b) weeks.push_back(w);
  std::sort(weeks.begin(), weeks.end());
  weeks.erase(std::unique(weeks.begin(), weeks.end()), weeks.end());

  std::vector<WeeklyMetrics> rows;
  std::ostringstream sig;
  sig << "week,delta_auc,p_value\n";
  for (int w : weeks) {
    const auto mi = best[0].find(w);
    const auto bi = best[1].find(w);
    if (mi != best[0].end() && bi != best[1].end()) {
      const auto& test = test_for(mi->second);
      if (!same_norm(mi->second.norm_stats, bi->second.norm_stats))
        throw DataError("model and baseline checkpoints disagree on normalization stats");
      rows.push_back(eval_week(mi->second, bi->second, test, w));
      const auto b = bootstrap_auc_diff(mi->second, bi->second, test, w, cfg.bootstrap_samples,
                                        derive_seed(cfg.seed, 0xb007000ULL + static_cast<std::uint64_t>(w)));
      sig << w << ',' << format_double(b.delta) << ',' << format_double(b.p_value) << '\n';
    } else if (mi != best[0].end()) {
      rows.push_back(eval_week(mi->second, test_for(mi->second), w));
    } else {
      // Baseline only: report it in the baseline column.
      auto m = eval_week(bi->second, test_for(bi->second), w);
      m.auc_baseline = m.auc_model;
      m.auc_model = std::nan("");
      m.kld_model = std::nan("");
      rows.push_back(m);
    }
  }

  CommandOutput res;
  res.files = {out / "metrics.csv", out / "significance.csv"};
  {
    auto f = open_out(res.files[0]);
    write_metrics_csv(f, rows);
  }
  write_text(res.files[1], sig.str());
  return res;
}

CommandOutput cmd_analyze(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& dataset,
                          const fs::path& out) {
  const auto model = load_checkpoint(checkpoint);
  const auto split = pipeline_split(load_dataset(dataset), cfg);
  const auto test = prepare_sequences(split.test, model.norm_stats);

  StateExtremes ex;
  switch (cfg.extremes_pool) {
    case ExtremesPool::Test:
      ex = find_extreme_states(model, test);
      break;
    case ExtremesPool::Train:
      ex = find_extreme_states(model, prepare_sequences(split.train, model.norm_stats));
      break;
    case ExtremesPool::Optimized:
      ex = optimize_extreme_states(model);
      break;
  }
  const auto standardizer = fit_standardizer(model, test);

  CommandOutput res;
  res.files = {out / "extremes_zscores.csv", out / "topic_trajectories.csv", out / "distance_trajectories.csv"};
  {
    auto f = open_out(res.files[0]);
    write_extremes_csv(f, model, standardizer, ex, cfg.exclude_topics);
  }
  {
    auto f = open_out(res.files[1]);
    write_topic_trajectories_csv(f, topic_trajectories(model, standardizer, test, cfg.exclude_topics));
  }
  {
    auto f = open_out(res.files[2]);
    write_distance_csv(f, distance_trajectories(model, ex, test));
  }
  return res;
}

}  // namespace click2state
