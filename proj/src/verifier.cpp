#include "spectune/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "spectune/errors.hpp"

namespace spectune {

VerifyResult verify_greedy_tree(const ModelPair& models, std::span<const Token> context,
                                const DraftTree& tree, std::span<const int> candidates) {
  if (models.bucket_of(context) != tree.root_bucket) {
    throw ContractViolation("verify_greedy_tree: tree was built for another context");
  }
  return verify_greedy_tree_at(models, tree, candidates);
}

VerifyResult verify_greedy_tree_at(const ModelPair& models, const DraftTree& tree,
                                   std::span<const int> candidates) {
  const std::size_t n = tree.nodes.size();
  std::vector<char> selected(n, 0);
  for (int c : candidates) {
    if (c < 0 || static_cast<std::size_t>(c) >= n) {
      throw ContractViolation("verify_greedy_tree: candidate index out of range");
    }
    selected[static_cast<std::size_t>(c)] = 1;
  }
  for (int c : candidates) {
    const int p = tree.nodes[static_cast<std::size_t>(c)].parent;
    if (p != kRoot && !selected[static_cast<std::size_t>(p)]) {
      throw ContractViolation("verify_greedy_tree: candidate set is not ancestor-closed");
    }
  }

  VerifyResult out;
  out.candidates_checked = static_cast<int>(candidates.size());
  int current = kRoot;
  std::size_t bucket = tree.root_bucket;
  const Token eos = models.config().eos_token;
  for (;;) {
    const Token want = models.target_argmax(bucket);
    int next = -1;
    for (int c : candidates) {
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(c)];
      if (node.parent == current && node.token == want) {
        next = c;
        break;
      }
    }
    // Nothing is drafted past an end-of-sequence token.
    if (next < 0 || want == eos) {
      out.correction = want;
      break;
    }
    out.accepted.push_back(want);
    current = next;
    bucket = tree.nodes[static_cast<std::size_t>(next)].bucket;
  }
  out.accept_len = static_cast<int>(out.accepted.size());
  return out;
}

double acceptance_probability(double p_target, double p_draft) {
  if (!(p_draft > 0.0)) {
    throw ContractViolation("acceptance_probability: draft probability must be positive");
  }
  return std::min(1.0, p_target / p_draft);
}

TokenDist residual_distribution(std::span<const double> target,
                                std::span<const double> draft) {
  TokenDist r(target.size());
  double total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    r[i] = std::max(0.0, target[i] - draft[i]);
    total += r[i];
  }
  if (!(total > 0.0)) return {target.begin(), target.end()};
  for (double& x : r) x /= total;
  return r;
}

std::vector<Token> draw_draft_chain(const ModelPair& models, std::span<const Token> context,
                                    int length, ChoiceSource& choices) {
  std::vector<Token> chain;
  std::size_t bucket = models.bucket_of(context);
  for (int i = 0; i < length; ++i) {
    const auto t = static_cast<Token>(choices.categorical(models.draft_row(bucket)));
    chain.push_back(t);
    bucket = models.extend(bucket, t);
  }
  return chain;
}

VerifyResult verify_stochastic_chain(const ModelPair& models, std::span<const Token> context,
                                     std::span<const Token> chain, ChoiceSource& choices) {
  VerifyResult out;
  out.candidates_checked = static_cast<int>(chain.size());
  std::size_t bucket = models.bucket_of(context);
  for (Token t : chain) {
    models.check_token(t);
    const auto target = models.target_row(bucket);
    const auto draft = models.draft_row(bucket);
    const double p = target[static_cast<std::size_t>(t)];
    const double q = draft[static_cast<std::size_t>(t)];
    if (!(q > 0.0)) {
      throw ContractViolation("verify_stochastic_chain: draft never proposes token " +
                              std::to_string(t));
    }
    if (!choices.bernoulli(acceptance_probability(p, q))) {
      const TokenDist residual = residual_distribution(target, draft);
      out.correction = static_cast<Token>(choices.categorical(residual));
      out.accept_len = static_cast<int>(out.accepted.size());
      return out;
    }
    out.accepted.push_back(t);
    bucket = models.extend(bucket, t);
  }
  out.correction = static_cast<Token>(choices.categorical(models.target_row(bucket)));
  out.accept_len = static_cast<int>(out.accepted.size());
  return out;
}

AcceptStats accept_stats(std::span<const VerifyResult> results,
                         std::span<const double> elapsed) {
  if (results.empty()) throw std::invalid_argument("accept_stats: empty stream");
  if (results.size() != elapsed.size()) {
    throw std::invalid_argument("accept_stats: results and elapsed differ in length");
  }
  AcceptStats s;
  s.steps = static_cast<int>(results.size());
  std::vector<double> rates;
  rates.reserve(results.size());
  double seconds = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const VerifyResult& r = results[i];
    rates.push_back(r.candidates_checked > 0
                        ? static_cast<double>(r.accept_len) / r.candidates_checked
                        : 0.0);
    s.accept_len_total += r.accept_len;
    s.tokens_total += r.accept_len + 1;
    seconds += elapsed[i];
  }
  double sum = 0.0;
  for (double r : rates) sum += r;
  s.rate_mean = sum / static_cast<double>(rates.size());
  if (rates.size() > 1) {
    double ss = 0.0;
    for (double r : rates) ss += (r - s.rate_mean) * (r - s.rate_mean);
    s.rate_sd = std::sqrt(ss / static_cast<double>(rates.size() - 1));
  }
  s.tokens_per_second = seconds > 0.0 ? static_cast<double>(s.tokens_total) / seconds : 0.0;
  return s;
}

std::string format_mean_sd(double mean, double sd, int decimals) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.*f ± %.*f", decimals, mean, decimals, sd);
  return buf;
}

}  // namespace spectune
