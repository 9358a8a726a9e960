#ifndef SPECTUNE_LM_SIM_HPP_
#define SPECTUNE_LM_SIM_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spectune/action.hpp"

namespace spectune {

using Token = std::int32_t;
using TokenDist = std::vector<double>;

// Prepended to every raw prompt; also pads contexts shorter than the Markov
// order.
inline constexpr Token kBosToken = 0;

enum class DraftNoise {
  uniform,      // P_d = (1-eps) P_T + eps / V
  independent,  // P_d = (1-eps) P_T + eps Q, Q an unrelated seeded table
};

struct RegimeOverride {
  int class_id = 0;
  double epsilon = 0.0;
};

// Seeded order-m categorical target model and its noise-mixed draft.
//
// Tokens 1..V-1 are split into contiguous blocks, one per prompt class in
// regime_schedule (a single block when the schedule is empty). A row whose
// last context token lies in class c puts weight class_leak on tokens outside
// c, so generation mostly stays inside its class, and the draft for that row
// mixes with the class's epsilon override.
struct ModelConfig {
  std::uint64_t seed = 7;
  int vocab_size = 64;
  int context_order = 2;
  double draft_noise = 0.3;
  std::vector<RegimeOverride> regime_schedule;

  DraftNoise noise_kind = DraftNoise::independent;
  // Row weights are Exp(1)^row_sharpness before normalization; larger is
  // peakier. 1.0 gives flat Dirichlet rows.
  double row_sharpness = 4.0;
  // Same for the independent noise table.
  double noise_sharpness = 4.0;
  double class_leak = 0.002;
  // -1 disables end-of-sequence handling.
  Token eos_token = -1;

  int num_classes() const;
  // Throws ConfigError.
  void validate() const;
};

// Immutable after construction; safe to share across threads.
class ModelPair {
 public:
  explicit ModelPair(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  int vocab_size() const { return config_.vocab_size; }
  int context_order() const { return config_.context_order; }
  std::size_t num_buckets() const { return num_buckets_; }

  // Index of the conditional row selected by the last context_order tokens.
  // Throws InvalidToken for out-of-range ids, ContractViolation when empty.
  std::size_t bucket_of(std::span<const Token> context) const;
  // Bucket after appending `next` to a context whose bucket is `bucket`.
  std::size_t extend(std::size_t bucket, Token next) const {
    return (bucket * static_cast<std::size_t>(config_.vocab_size) +
            static_cast<std::size_t>(next)) %
           num_buckets_;
  }

  std::span<const double> target_row(std::size_t bucket) const;
  std::span<const double> draft_row(std::size_t bucket) const;
  // The mixing component (uniform or the independent table).
  std::span<const double> noise_row(std::size_t bucket) const;

  // Draft tokens of the row ordered by probability desc, token id asc.
  std::span<const Token> draft_ranking(std::size_t bucket) const;
  // draft_row(bucket) permuted into draft_ranking order.
  std::span<const double> draft_ranked_probs(std::size_t bucket) const;
  // Lowest-id maximizer of the target row.
  Token target_argmax(std::size_t bucket) const { return argmax_[bucket]; }

  double draft_epsilon(std::size_t bucket) const;
  // -1 for BOS, otherwise the block index.
  int token_class(Token t) const;
  void check_token(Token t) const;

 private:
  ModelConfig config_;
  std::size_t num_buckets_ = 0;
  std::vector<double> target_;
  std::vector<double> noise_;
  std::vector<double> draft_;
  std::vector<double> uniform_;
  std::vector<Token> ranking_;
  std::vector<double> ranked_probs_;
  std::vector<Token> argmax_;
  std::vector<double> class_epsilon_;
};

TokenDist target_next_dist(const ModelPair& models,
                           std::span<const Token> context);
TokenDist draft_next_dist(const ModelPair& models,
                          std::span<const Token> context);

// Reference target-only greedy decoding; stops after max_new_tokens or right
// after emitting the EOS token.
std::vector<Token> greedy_decode(const ModelPair& models,
                                 std::span<const Token> context,
                                 int max_new_tokens);

// ---------------------------------------------------------------------------
// State features

enum class EncoderKind {
  feature_vector,     // three projections of the last context_order tokens
  context_embedding,  // projected bag of bigrams over the whole context
};

struct FeatureSpec {
  std::array<int, 3> slice_dims = {48, 48, 48};
  EncoderKind kind = EncoderKind::feature_vector;
  int embedding_dim = 384;
  std::uint64_t seed = 0x5eed;

  int state_dim() const;
  void validate() const;
};

class StateEncoder {
 public:
  StateEncoder(FeatureSpec spec, int vocab_size, int context_order);

  const FeatureSpec& spec() const { return spec_; }
  int state_dim() const { return spec_.state_dim(); }

  std::vector<double> extract(std::span<const Token> context) const;

 private:
  std::vector<double> extract_features(std::span<const Token> context) const;
  std::vector<double> extract_embedding(std::span<const Token> context) const;

  FeatureSpec spec_;
  int vocab_size_;
  int context_order_;
  // Row-major, one matrix per slice: slice_dims[s] x (order * vocab).
  std::array<std::vector<double>, 3> projections_;
};

// Convenience wrapper matching the free-function operation surface.
inline std::vector<double> extract_state(const StateEncoder& encoder,
                                         std::span<const Token> context) {
  return encoder.extract(context);
}

// ---------------------------------------------------------------------------
// Latency

enum class CostMode { simulated, wallclock };

// Seconds. Defaults put static-tree speedups in the 2-5x band.
struct CostModel {
  double t_target_base = 0.020;
  double t_target_per_token = 0.00005;
  double t_draft_base = 0.0015;
  double t_draft_per_node = 0.00002;
  double t_policy = 0.0005;
  double t_tree_mgmt_per_node = 0.00001;
  CostMode mode = CostMode::simulated;

  void validate() const;
};

struct TreeStats {
  int layers = 0;      // draft forward passes (tree depth reached)
  int expanded = 0;    // nodes whose children were proposed, root included
  int nodes = 0;       // non-root nodes
  int candidates = 0;  // reranked tokens sent to verification
};

// Per-step time split into the profiler's four categories.
struct LatencyBreakdown {
  double drafting = 0.0;
  double tree_management = 0.0;
  double verification = 0.0;
  double policy = 0.0;

  double total() const {
    return ((verification + drafting) + tree_management) + policy;
  }
};

LatencyBreakdown simulate_step_latency(const CostModel& cost,
                                       const Action& action,
                                       const TreeStats& stats,
                                       bool policy_invoked);

}  // namespace spectune

#endif  // SPECTUNE_LM_SIM_HPP_
