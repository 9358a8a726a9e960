#ifndef SPECTUNE_VERIFIER_HPP_
#define SPECTUNE_VERIFIER_HPP_

#include <span>
#include <string>
#include <vector>

#include "spectune/draft_tree.hpp"
#include "spectune/lm_sim.hpp"
#include "spectune/rng.hpp"

namespace spectune {

struct VerifyResult {
  std::vector<Token> accepted;  // the accepted draft tokens
  Token correction = 0;         // bonus token or target token at rejection
  int accept_len = 0;           // accepted.size()
  int candidates_checked = 0;
};

// Walks the tree from the root following target argmaxes through the
// candidate set. context ++ accepted ++ [correction] is always a prefix of
// target-only greedy decoding.
// Throws ContractViolation when `candidates` is not ancestor-closed.
VerifyResult verify_greedy_tree(const ModelPair& models,
                                std::span<const Token> context,
                                const DraftTree& tree,
                                std::span<const int> candidates);
// Same, starting from tree.root_bucket without rescanning a context.
VerifyResult verify_greedy_tree_at(const ModelPair& models, const DraftTree& tree,
                                   std::span<const int> candidates);

// min(1, p_target / p_draft). Requires p_draft > 0.
double acceptance_probability(double p_target, double p_draft);

// norm(max(0, P_T - P_d)); falls back to P_T when the difference has no mass.
TokenDist residual_distribution(std::span<const double> target,
                                std::span<const double> draft);

// Samples a chain of `length` tokens from the draft model.
std::vector<Token> draw_draft_chain(const ModelPair& models,
                                    std::span<const Token> context, int length,
                                    ChoiceSource& choices);

// Standard speculative rejection sampling over a draft chain. The joint law of
// accepted ++ [correction] equals the target's autoregressive law.
// Throws ContractViolation if a chain token has zero draft probability.
VerifyResult verify_stochastic_chain(const ModelPair& models,
                                     std::span<const Token> context,
                                     std::span<const Token> chain,
                                     ChoiceSource& choices);

struct AcceptStats {
  double rate_mean = 0.0;  // accepted / candidates_checked, per step
  double rate_sd = 0.0;    // sample sd; 0 for a single step
  long long accept_len_total = 0;
  long long tokens_total = 0;  // accepted + one correction per step
  double tokens_per_second = 0.0;
  int steps = 0;
};

// Throws std::invalid_argument on empty or mismatched streams.
AcceptStats accept_stats(std::span<const VerifyResult> results,
                         std::span<const double> elapsed);

// "0.2032 ± 0.0300"
std::string format_mean_sd(double mean, double sd, int decimals = 4);

}  // namespace spectune

#endif  // SPECTUNE_VERIFIER_HPP_
