#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "click2state/commands.hpp"
#include "click2state/common.hpp"

namespace fs = std::filesystem;
using namespace click2state;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"click2state: topic-supervised GRU models of weekly clickstream data"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool quiet = false;
  app.add_option("--config", config_path, "Run configuration JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Base seed; overrides every seed in the config");
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--quiet", quiet, "Do not list written files");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");

  std::string data, topic_model, checkpoints, checkpoint;
  std::optional<int> num_topics, iters;
  auto* lda = app.add_subcommand("lda", "Fit the topic model on the training split");
  lda->add_option("--data", data, "Dataset JSONL")->required();
  lda->add_option("--topics", num_topics, "Number of topics");
  lda->add_option("--iters", iters, "Gibbs sweeps");

  bool baseline = false;
  std::optional<double> lambda;
  auto* train = app.add_subcommand("train", "Train models for every (week cutoff, hidden size)");
  train->add_option("--data", data, "Dataset JSONL")->required();
  train->add_option("--topic-model", topic_model, "Topic model JSON")->required();
  auto* baseline_flag = train->add_flag("--baseline", baseline, "Train only the failure-only baseline");
  train->add_option("--lambda", lambda, "Failure-loss weight")->excludes(baseline_flag);

  auto* eval = app.add_subcommand("eval", "Per-week test metrics");
  eval->add_option("--checkpoints", checkpoints, "Checkpoint directory")->required();
  eval->add_option("--data", data, "Dataset JSONL")->required();
  eval->add_option("--topic-model", topic_model, "Topic model JSON")->required();

  std::optional<std::vector<int>> exclude;
  auto* analyze = app.add_subcommand("analyze", "Hidden-state interpretation CSVs");
  analyze->add_option("--checkpoint", checkpoint, "Model checkpoint JSON")->required();
  analyze->add_option("--data", data, "Dataset JSONL")->required();
  analyze->add_option("--exclude", exclude, "Topics to leave out of the reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) cfg.set_seed(*seed);
    if (num_topics) cfg.lda.num_topics = *num_topics;
    if (iters) cfg.lda.iters = *iters;
    if (exclude) cfg.exclude_topics = *exclude;
    cfg.validate();

    const fs::path out = out_dir;
    CommandOutput res;
    if (*synth)
      res = cmd_synth(cfg, out);
    else if (*lda)
      res = cmd_lda(cfg, data, out);
    else if (*train)
      res = cmd_train(cfg, data, topic_model, out, baseline ? std::optional<double>(1.0) : lambda);
    else if (*eval)
      res = cmd_eval(cfg, checkpoints, data, topic_model, out);
    else if (*analyze)
      res = cmd_analyze(cfg, checkpoint, data, out);
    if (!quiet)
      for (const auto& f : res.files) std::cout << f.string() << '\n';
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
