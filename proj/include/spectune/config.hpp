#ifndef SPECTUNE_CONFIG_HPP_
#define SPECTUNE_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "spectune/action.hpp"
#include "spectune/engine.hpp"
#include "spectune/lm_sim.hpp"
#include "spectune/policy.hpp"

namespace spectune {

// Everything a CLI run depends on. Loaded from a JSON document whose sections
// mirror the members below; see configs/default.json for the full schema.
struct AppConfig {
  ModelConfig model;
  FeatureSpec features;
  CostModel cost;
  PPOConfig ppo;
  int hidden = 128;

  RunConfig train_run;
  CorpusConfig train_corpus;
  RunConfig eval_run;
  CorpusConfig eval_corpus;

  Action baseline_action;
  std::vector<int> sweep_intervals = {1, 5, 10, 20, 30, 50};
  int threads = 1;

  void validate() const;
};

// The shipped defaults: two prompt regimes, max-entropy PPO.
AppConfig default_config();

// Missing keys keep their defaults; unknown keys and bad values throw
// ConfigError. A "variant" key in the ppo section selects that variant's
// defaults before the remaining ppo keys are applied.
AppConfig parse_config(const std::string& json_text);
AppConfig load_config(const std::string& path);

// Canonical JSON (sorted keys, fixed float formatting). parse_config of the
// result gives back an equal config.
std::string dump_config(const AppConfig& config);

// FNV-1a of dump_config; embedded in checkpoints and report metadata.
std::uint64_t config_digest(const AppConfig& config);

// Applies --seed: network init and both sampling streams follow `seed`.
void apply_seed(AppConfig& config, std::uint64_t seed);

}  // namespace spectune

#endif  // SPECTUNE_CONFIG_HPP_
