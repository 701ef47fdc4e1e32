// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Thresholds are fixed below.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "click2state/commands.hpp"
#include "click2state/common.hpp"
#include "click2state/evaluation.hpp"
#include "click2state/interpret.hpp"
#include "click2state/synthgen.hpp"
#include "click2state/topics.hpp"
#include "click2state/training.hpp"
#include "../unit/helpers.hpp"

using namespace click2state;
namespace fs = std::filesystem;

namespace {

constexpr double kGradTol = 1e-5;
constexpr double kFdStep = 1e-5;
constexpr double kAucTol = 1e-12;
constexpr double kLossTol = 1e-12;
constexpr double kLdaCosine = 0.8;
constexpr double kBenefitDelta = 0.03;
constexpr double kBenefitAlpha = 0.05;
constexpr double kMonotoneSlack = 0.02;
constexpr double kDistanceShare = 0.70;
constexpr double kNullLo = 0.45, kNullHi = 0.55;
constexpr int kMidTerm = 12;

// Weak clicks, strong topics. Shared by criteria 5, 6, 7 and 10.
const char* kCohortConfig = R"({
  "synth": {"n_students": 2000, "click_signal_strength": 0.2, "topic_signal_strength": 4.0,
            "mixture_concentration": 100, "note_length_mean": 100, "student_activity_sd": 1.0},
  "lda": {"iters": 100},
  "train": {"epochs": 25, "learning_rate": 0.002, "hidden": 40}
})";

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1 ----------------------------------------------------------------------

double tensor_rel_error(const ModelParams& m, const PreparedStudent& s, double lambda) {
  const auto g = backward(m, s, lambda).grads.flatten();
  ModelParams p = m;
  const Eigen::VectorXd theta = m.weights.flatten();
  Eigen::VectorXd fd(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd t = theta;
    t[i] = theta[i] + kFdStep;
    p.weights.assign_flat(t);
    const double up = student_loss(p, s, lambda).total;
    t[i] = theta[i] - kFdStep;
    p.weights.assign_flat(t);
    const double down = student_loss(p, s, lambda).total;
    fd[i] = (up - down) / (2 * kFdStep);
  }
  double worst = 0.0;
  Eigen::Index off = 0;
  for (const auto& v : m.weights.views()) {
    const auto a = g.segment(off, v.size());
    const auto b = fd.segment(off, v.size());
    const double denom = a.norm() + b.norm();
    if (denom > 0) worst = std::max(worst, (a - b).norm() / denom);
    off += v.size();
  }
  return worst;
}

Verdict gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 24; ++i) {
    const auto m = testutil::random_model(8, 4, 500 + i);
    const auto s = testutil::random_student(5, 4, 900 + i);
    const double lambda = i < 3 ? i * 0.5 : u(rng);
    worst = std::max(worst, tensor_rel_error(m, s, lambda));
  }
  const double secs = seconds_since(t0);
  return {worst < kGradTol && secs < 60,
          "24 instances, worst per-tensor relative error " + fmt("%.3g", worst) + fmt(", %.1fs", secs)};
}

// 2 ----------------------------------------------------------------------

double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return num / pairs;
}

Verdict auc_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int n = 2 + static_cast<int>(rng() % 300);
    const int levels = i % 3 == 0 ? 3 : i % 3 == 1 ? 20 : 0;  // 0: continuous scores
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int k = 0; k < n; ++k) {
      s[k] = levels ? static_cast<double>(rng() % levels) : std::uniform_real_distribution<double>(0, 1)(rng);
      y[k] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    worst = std::max(worst, std::abs(auc(s, y) - brute_auc(s, y)));
  }
  const double secs = seconds_since(t0);
  return {worst <= kAucTol && secs < 10, "200 instances, max |diff| " + fmt("%.3g", worst) + fmt(", %.2fs", secs)};
}

// 3 ----------------------------------------------------------------------

Verdict loss_identities() {
  double worst_total = 0.0;
  bool heads_zero = true;
  for (int i = 0; i < 50; ++i) {
    const auto m = testutil::random_model(6, 4, 30 + i);
    const auto s = testutil::random_student(6, 4, 70 + i);
    const double lambda = (i % 10) / 9.0;
    const auto L = student_loss(m, s, lambda);
    worst_total = std::max(worst_total, std::abs(L.total - (lambda * L.bce + (1 - lambda) * L.mean_kld)));
    heads_zero = heads_zero && backward(m, s, 1.0).grads.heads.W_theta.isZero(0.0) &&
                 backward(m, s, 0.0).grads.heads.W_y.isZero(0.0);
  }
  std::mt19937_64 rng(303);
  double worst_self = 0.0, min_kld = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int k = 2 + static_cast<int>(rng() % 10);
    const TopicDistribution a{testutil::random_simplex(k, rng)}, b{testutil::random_simplex(k, rng)};
    worst_self = std::max(worst_self, std::abs(kld_loss(a, a)));
    min_kld = std::min(min_kld, kld_loss(a, b));
  }
  const bool ok = worst_total <= kLossTol && heads_zero && worst_self == 0.0 && min_kld >= 0.0;
  return {ok, "max |total - mix| " + fmt("%.3g", worst_total) + ", endpoint head grads " +
                  (heads_zero ? "exactly zero" : "NONZERO") + ", max KLD(a,a) " + fmt("%.3g", worst_self) +
                  ", min KLD(a,b) " + fmt("%.3g", min_kld)};
}

// 4 ----------------------------------------------------------------------

Verdict lda_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  SynthConfig sc;
  sc.n_students = 2000;
  sc.term_length = 2;
  sc.note_period = 2;  // one note per student
  sc.note_drop_prob = 0.0;
  sc.n_topics_planted = 5;
  sc.vocab_size = 300;
  sc.seed = 404;
  const auto gen = build_generator(sc);
  const auto data = generate_dataset(gen, sc);
  Vocabulary vocab;
  const auto docs = corpus_from_dataset(data, vocab);
  LdaConfig lc;
  lc.num_topics = 5;
  lc.iters = 200;
  lc.seed = 404;
  const auto model = fit_lda(docs, vocab, lc);
  const auto match = match_topics(gen.topic_word, aligned_topic_word(model, gen.vocabulary));
  const double secs = seconds_since(t0);
  return {match.mean_cosine >= kLdaCosine && secs < 300 && docs.size() == 2000,
          std::to_string(docs.size()) + " docs, mean cosine " + fmt("%.4f", match.mean_cosine) +
              fmt(", %.1fs", secs)};
}

// 5, 6, 7, 10 -------------------------------------------------------------

struct CohortRun {
  std::vector<PreparedStudent> train, val, test;
  int num_topics = 0;
  NormalizationStats norm;
};

CohortRun build_cohort(const RunConfig& cfg) {
  const auto data = generate_dataset(build_generator(cfg.synth), cfg.synth);
  const auto split = pipeline_split(data, cfg);
  const auto topics = fit_lda(split.train, cfg.lda);
  CohortRun r;
  r.norm = fit_minmax(split.train);
  r.num_topics = topics.num_topics;
  r.train = prepare_students(split.train, r.norm, topics, cfg.inference);
  r.val = prepare_students(split.val, r.norm, topics, cfg.inference);
  r.test = prepare_students(split.test, r.norm, topics, cfg.inference);
  return r;
}

TrainResult train_at(const CohortRun& c, const RunConfig& cfg, int week, double lambda) {
  TrainConfig t = cfg.train;
  t.week_cutoff = week;
  t.lambda = lambda;
  t.seed = cutoff_seed(cfg.seed, week);
  return train_model(c.train, c.val, c.norm, c.num_topics, t);
}

bool loss_decreased(const TrainResult& r) {
  return r.history.size() >= 2 && r.history.back().train.total < r.history.front().train.total;
}

struct CohortOutcomes {
  Verdict benefit, monotone, distance, dynamics;
};

CohortOutcomes cohort_criteria() {
  CohortOutcomes out;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<PairedScores> groups;
  double sum_model = 0.0, sum_base = 0.0, sum_w2 = 0.0, sum_w20 = 0.0;
  bool dynamics = true;
  std::string dyn_detail;
  const int n_seeds = 5;
  std::vector<CohortRun> cohorts;
  std::vector<RunConfig> configs;
  for (int seed = 1; seed <= n_seeds; ++seed) {
    auto cfg = run_config_from_json(kCohortConfig);
    cfg.set_seed(static_cast<std::uint64_t>(seed));
    auto c = build_cohort(cfg);
    const auto m = train_at(c, cfg, kMidTerm, 0.5);
    const auto b = train_at(c, cfg, kMidTerm, 1.0);
    const auto sm = score_week(m.params, c.test, kMidTerm);
    const auto sb = score_week(b.params, c.test, kMidTerm);
    sum_model += auc(sm.scores, sm.labels);
    sum_base += auc(sb.scores, sb.labels);
    groups.push_back({sm.scores, sb.scores, sm.labels});
    const bool dm = loss_decreased(m), db = loss_decreased(b);
    dynamics = dynamics && dm && db;
    if (!dm || !db) dyn_detail += " seed " + std::to_string(seed) + (dm ? "" : " lambda=0.5") + (db ? "" : " lambda=1");
    cohorts.push_back(std::move(c));
    configs.push_back(cfg);
  }
  const auto boot = bootstrap_auc_diff(groups, 1000, 99);
  const double secs = seconds_since(t0);
  const double delta = (sum_model - sum_base) / n_seeds;
  out.benefit = {delta >= kBenefitDelta && boot.p_value < kBenefitAlpha && secs < 1200,
                 "week " + std::to_string(kMidTerm) + ", mean AUC " + fmt("%.4f", sum_model / n_seeds) +
                     " vs baseline " + fmt("%.4f", sum_base / n_seeds) + ", delta " + fmt("%+.4f", delta) +
                     ", bootstrap p " + fmt("%.4f", boot.p_value) + fmt(", %.0fs", secs)};
  out.dynamics = {dynamics, std::to_string(2 * n_seeds) + " runs at week " + std::to_string(kMidTerm) +
                                (dynamics ? ", final-epoch loss below first-epoch loss in all" : ", not decreasing:" + dyn_detail)};

  for (int i = 0; i < n_seeds; ++i) {
    for (int week : {2, 20}) {
      const auto r = train_at(cohorts[i], configs[i], week, 0.5);
      const auto s = score_week(r.params, cohorts[i].test, week);
      (week == 2 ? sum_w2 : sum_w20) += auc(s.scores, s.labels);
    }
  }
  const double w2 = sum_w2 / n_seeds, w20 = sum_w20 / n_seeds;
  out.monotone = {w20 >= w2 - kMonotoneSlack,
                  "mean AUC week 20 " + fmt("%.4f", w20) + ", week 2 " + fmt("%.4f", w2)};

  // Full-term model on the first cohort.
  const int T = configs[0].synth.term_length;
  const auto full = train_at(cohorts[0], configs[0], T, 0.5);
  const auto ext = find_extreme_states(full.params, cohorts[0].test);
  const auto rows = distance_trajectories(full.params, ext, cohorts[0].test);
  int weeks = 0, closer = 0;
  for (const auto& r : rows)
    if (r.group == click2state::Outcome::F && r.week >= 5 && r.n > 0) {
      ++weeks;
      closer += r.mean_dist_f < r.mean_dist_p;
    }
  const double share = weeks ? static_cast<double>(closer) / weeks : 0.0;
  out.distance = {weeks > 0 && share >= kDistanceShare,
                  "F students closer to h_F in " + std::to_string(closer) + "/" + std::to_string(weeks) +
                      " weeks from week index 5"};
  return out;
}

// 8 ----------------------------------------------------------------------

const char* kDeterminismConfig = R"({
  "seed": 3,
  "synth": {"n_students": 200, "term_length": 8, "vocab_size": 120, "n_topics_planted": 4},
  "lda": {"num_topics": 4, "iters": 30, "infer_iters": 20},
  "train": {"epochs": 3, "hidden": 6, "learning_rate": 0.005},
  "weeks": [4, 8],
  "hidden_sizes": [6],
  "bootstrap_samples": 100
})";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CLICK2STATE_CLI) + " --quiet " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs every subcommand into root; returns false on a nonzero exit.
bool cli_pipeline(const fs::path& root, const fs::path& config) {
  const std::string c = "--config " + config.string() + " --seed 11 ";
  const auto data = (root / "data" / "students.jsonl").string();
  const auto tm = (root / "lda" / "topic_model.json").string();
  return run_cli(c + "--out " + (root / "data").string() + " synth") == 0 &&
         run_cli(c + "--out " + (root / "lda").string() + " lda --data " + data) == 0 &&
         run_cli(c + "--out " + (root / "train").string() + " train --data " + data + " --topic-model " + tm) == 0 &&
         run_cli(c + "--out " + (root / "eval").string() + " eval --checkpoints " +
                 (root / "train" / "checkpoints").string() + " --data " + data + " --topic-model " + tm) == 0 &&
         run_cli(c + "--out " + (root / "analyze").string() + " analyze --checkpoint " +
                 (root / "train" / "checkpoints" / "click2state_w08_h6.json").string() + " --data " + data) == 0;
}

Verdict determinism() {
  const fs::path base = fs::temp_directory_path() / "click2state_acceptance";
  fs::remove_all(base);
  fs::create_directories(base);
  const auto config = base / "config.json";
  std::ofstream(config) << kDeterminismConfig;
  const bool ran = cli_pipeline(base / "a", config) && cli_pipeline(base / "b", config);
  int files = 0, same = 0;
  if (ran)
    for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
      if (!e.is_regular_file()) continue;
      ++files;
      const auto other = base / "b" / fs::relative(e.path(), base / "a");
      same += fs::exists(other) && hash_string(slurp(e.path())) == hash_string(slurp(other)) &&
              slurp(e.path()) == slurp(other);
    }
  fs::remove_all(base);
  if (!ran) return {false, "a CLI command exited nonzero"};
  return {files > 0 && same == files,
          std::to_string(same) + "/" + std::to_string(files) + " output files identical across two CLI runs"};
}

// 9 ----------------------------------------------------------------------

Verdict null_calibration() {
  RunConfig cfg;
  cfg.set_seed(909);
  cfg.synth.n_students = 10000;
  cfg.synth.term_length = 12;
  cfg.synth.click_signal_strength = 0.0;
  cfg.synth.topic_signal_strength = 0.0;
  cfg.lda.iters = 50;
  cfg.train.epochs = 8;
  cfg.train.hidden = 20;
  cfg.train.learning_rate = 0.002;
  const auto c = build_cohort(cfg);
  const int week = cfg.synth.term_length;
  const auto m = train_at(c, cfg, week, 0.5);
  const auto b = train_at(c, cfg, week, 1.0);
  const auto sm = score_week(m.params, c.test, week);
  const auto sb = score_week(b.params, c.test, week);
  const double am = auc(sm.scores, sm.labels), ab = auc(sb.scores, sb.labels);
  const auto in = [](double a) { return a >= kNullLo && a <= kNullHi; };
  return {in(am) && in(ab), std::to_string(c.test.size()) + " test students, AUC model " + fmt("%.4f", am) +
                                ", baseline " + fmt("%.4f", ab)};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* name, const Verdict& o) {
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };
  const auto guarded = [](const std::function<Verdict()>& f) -> Verdict {
    try {
      return f();
    } catch (const std::exception& e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };
  report(1, "gradient correctness", guarded(gradient_check));
  report(2, "AUC oracle equivalence", guarded(auc_oracle));
  report(3, "loss identities", guarded(loss_identities));
  report(4, "LDA planted-topic recovery", guarded(lda_recovery));
  CohortOutcomes co;
  try {
    co = cohort_criteria();
  } catch (const std::exception& e) {
    const Verdict bad{false, std::string("exception: ") + e.what()};
    co = {bad, bad, bad, bad};
  }
  report(5, "multi-task benefit", co.benefit);
  report(6, "information monotonicity", co.monotone);
  report(7, "distance-trajectory pattern", co.distance);
  report(8, "determinism", guarded(determinism));
  report(9, "null calibration", guarded(null_calibration));
  report(10, "training dynamics", co.dynamics);
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures ? 1 : 0;
}
