#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "click2state/datamodel.hpp"
#include "click2state/synthgen.hpp"
#include "click2state/topics.hpp"
#include "click2state/training.hpp"

namespace click2state {

enum class ExtremesPool { Test, Train, Optimized };

// Everything a pipeline run needs. Loaded from one JSON file; absent keys
// keep these defaults.
struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> split_seed;  // defaults to seed
  SynthConfig synth;
  LdaConfig lda;
  ThetaInference inference;
  TrainConfig train;
  bool train_baseline = true;
  bool balance_train = false;
  std::vector<int> weeks{25};
  std::vector<int> hidden_sizes{20};
  std::vector<int> exclude_topics;
  ExtremesPool extremes_pool = ExtremesPool::Test;
  int bootstrap_samples = 1000;
  int threads = 1;

  // Propagates `seed` into the component configs.
  void set_seed(std::uint64_t s);
  std::uint64_t resolved_split_seed() const { return split_seed.value_or(seed); }
  void validate() const;
};

RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& cfg);

// Train / validation / test partition used by every command.
DatasetSplit pipeline_split(const Dataset& d, const RunConfig& cfg);

std::string checkpoint_name(const std::string& prefix, int week, int hidden);

struct CommandOutput {
  std::vector<std::filesystem::path> files;
};

CommandOutput cmd_synth(const RunConfig& cfg, const std::filesystem::path& out);
CommandOutput cmd_lda(const RunConfig& cfg, const std::filesystem::path& dataset, const std::filesystem::path& out);
// lambda_override replaces the configured lambda and disables the extra
// baseline sweep (a lambda of 1 is itself the baseline).
CommandOutput cmd_train(const RunConfig& cfg, const std::filesystem::path& dataset,
                        const std::filesystem::path& topic_model, const std::filesystem::path& out,
                        std::optional<double> lambda_override = std::nullopt);
CommandOutput cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoints,
                       const std::filesystem::path& dataset, const std::filesystem::path& topic_model,
                       const std::filesystem::path& out);
CommandOutput cmd_analyze(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                          const std::filesystem::path& dataset, const std::filesystem::path& out);

}  // namespace click2state
