#include "spectune/lm_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "spectune/errors.hpp"
#include "spectune/rng.hpp"

namespace spectune {

namespace {

constexpr std::uint64_t kTargetStream = 0x7461726765740000ULL;  // "target"
constexpr std::uint64_t kNoiseStream = 0x6e6f697365000000ULL;   // "noise"
constexpr std::uint64_t kSliceStream = 0x736c696365000000ULL;   // "slice"
constexpr std::uint64_t kBigramStream = 0x626967726d000000ULL;  // "bigrm"

constexpr std::size_t kMaxTableEntries = std::size_t{1} << 24;

// Fills `row` with normalized Exp(1)^sharpness weights scaled by class
// affinity. Shared by the target and the independent noise table.
void fill_row(std::span<double> row, std::uint64_t seed, std::uint64_t stream,
              std::size_t bucket, double sharpness,
              std::span<const double> affinity) {
  const std::size_t v = row.size();
  double total = 0.0;
  for (std::size_t i = 0; i < v; ++i) {
    const double e = -std::log(unit_open(counter_bits(seed, stream, bucket * v + i)));
    row[i] = std::pow(e, sharpness) * affinity[i];
    total += row[i];
  }
  for (double& p : row) p /= total;
}

}  // namespace

int ModelConfig::num_classes() const {
  int classes = 1;
  for (const auto& r : regime_schedule) classes = std::max(classes, r.class_id + 1);
  return classes;
}

void ModelConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("model: vocab_size must be >= 2");
  if (context_order < 1) throw ConfigError("model: context_order must be >= 1");
  if (!(draft_noise >= 0.0 && draft_noise <= 1.0)) {
    throw ConfigError("model: draft_noise must lie in [0, 1]");
  }
  if (!(row_sharpness > 0.0) || !std::isfinite(row_sharpness)) {
    throw ConfigError("model: row_sharpness must be positive");
  }
  if (!(noise_sharpness > 0.0) || !std::isfinite(noise_sharpness)) {
    throw ConfigError("model: noise_sharpness must be positive");
  }
  if (!(class_leak > 0.0 && class_leak <= 1.0)) {
    throw ConfigError("model: class_leak must lie in (0, 1]");
  }
  if (eos_token < -1 || eos_token >= vocab_size || eos_token == kBosToken) {
    throw ConfigError("model: eos_token must be -1 or a non-BOS token id");
  }
  std::vector<bool> seen(static_cast<std::size_t>(num_classes()), false);
  for (const auto& r : regime_schedule) {
    if (r.class_id < 0) throw ConfigError("model: negative regime class id");
    if (seen[static_cast<std::size_t>(r.class_id)]) {
      throw ConfigError("model: duplicate regime class id " +
                        std::to_string(r.class_id));
    }
    seen[static_cast<std::size_t>(r.class_id)] = true;
    if (!(r.epsilon >= 0.0 && r.epsilon <= 1.0)) {
      throw ConfigError("model: regime epsilon must lie in [0, 1]");
    }
  }
  if (num_classes() > vocab_size - 1) {
    throw ConfigError("model: more regime classes than non-BOS tokens");
  }
  std::size_t entries = static_cast<std::size_t>(vocab_size);
  for (int i = 0; i < context_order; ++i) {
    entries *= static_cast<std::size_t>(vocab_size);
    if (entries > kMaxTableEntries) {
      throw ConfigError("model: vocab_size^(context_order+1) too large");
    }
  }
}

ModelPair::ModelPair(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto v = static_cast<std::size_t>(config_.vocab_size);
  num_buckets_ = 1;
  for (int i = 0; i < config_.context_order; ++i) num_buckets_ *= v;

  const int classes = config_.num_classes();
  class_epsilon_.assign(static_cast<std::size_t>(classes), config_.draft_noise);
  for (const auto& r : config_.regime_schedule) {
    class_epsilon_[static_cast<std::size_t>(r.class_id)] = r.epsilon;
  }

  target_.resize(num_buckets_ * v);
  draft_.resize(num_buckets_ * v);
  if (config_.noise_kind == DraftNoise::independent) noise_.resize(num_buckets_ * v);
  uniform_.assign(v, 1.0 / static_cast<double>(v));
  ranking_.resize(num_buckets_ * v);
  ranked_probs_.resize(num_buckets_ * v);
  argmax_.resize(num_buckets_);

  std::vector<double> affinity(v);
  for (std::size_t b = 0; b < num_buckets_; ++b) {
    const int row_class = token_class(static_cast<Token>(b % v));
    for (std::size_t i = 0; i < v; ++i) {
      const bool same =
          classes == 1 || row_class < 0 || token_class(static_cast<Token>(i)) == row_class;
      affinity[i] = same ? 1.0 : config_.class_leak;
    }
    std::span<double> t(target_.data() + b * v, v);
    fill_row(t, config_.seed, kTargetStream, b, config_.row_sharpness, affinity);
    std::span<double> q;
    if (config_.noise_kind == DraftNoise::independent) {
      q = std::span<double>(noise_.data() + b * v, v);
      fill_row(q, config_.seed, kNoiseStream, b, config_.noise_sharpness, affinity);
    }

    const double eps = draft_epsilon(b);
    const double uniform = 1.0 / static_cast<double>(v);
    std::span<double> dr(draft_.data() + b * v, v);
    for (std::size_t i = 0; i < v; ++i) {
      const double mix = q.empty() ? uniform : q[i];
      dr[i] = (1.0 - eps) * t[i] + eps * mix;
    }

    std::span<Token> rank(ranking_.data() + b * v, v);
    std::iota(rank.begin(), rank.end(), Token{0});
    std::stable_sort(rank.begin(), rank.end(), [&](Token x, Token y) {
      return dr[static_cast<std::size_t>(x)] > dr[static_cast<std::size_t>(y)];
    });
    for (std::size_t i = 0; i < v; ++i) {
      ranked_probs_[b * v + i] = dr[static_cast<std::size_t>(rank[i])];
    }
    argmax_[b] = static_cast<Token>(std::max_element(t.begin(), t.end()) - t.begin());
  }
}

std::size_t ModelPair::bucket_of(std::span<const Token> context) const {
  if (context.empty()) throw ContractViolation("context must be non-empty");
  const auto order = static_cast<std::size_t>(config_.context_order);
  const auto v = static_cast<std::size_t>(config_.vocab_size);
  std::size_t bucket = 0;
  // Left-pad with BOS when the context is shorter than the order.
  for (std::size_t i = 0; i < order; ++i) {
    Token t = kBosToken;
    if (context.size() + i >= order) t = context[context.size() + i - order];
    check_token(t);
    bucket = bucket * v + static_cast<std::size_t>(t);
  }
  // Tokens older than the window are still validated.
  for (std::size_t i = 0; i + order < context.size(); ++i) check_token(context[i]);
  return bucket;
}

std::span<const double> ModelPair::target_row(std::size_t bucket) const {
  const auto v = static_cast<std::size_t>(config_.vocab_size);
  return {target_.data() + bucket * v, v};
}

std::span<const double> ModelPair::draft_row(std::size_t bucket) const {
  const auto v = static_cast<std::size_t>(config_.vocab_size);
  return {draft_.data() + bucket * v, v};
}

std::span<const double> ModelPair::noise_row(std::size_t bucket) const {
  const auto v = static_cast<std::size_t>(config_.vocab_size);
  if (noise_.empty()) return uniform_;
  return {noise_.data() + bucket * v, v};
}

std::span<const Token> ModelPair::draft_ranking(std::size_t bucket) const {
  const auto v = static_cast<std::size_t>(config_.vocab_size);
  return {ranking_.data() + bucket * v, v};
}

std::span<const double> ModelPair::draft_ranked_probs(std::size_t bucket) const {
  const auto v = static_cast<std::size_t>(config_.vocab_size);
  return {ranked_probs_.data() + bucket * v, v};
}

double ModelPair::draft_epsilon(std::size_t bucket) const {
  const int c = token_class(static_cast<Token>(bucket % static_cast<std::size_t>(config_.vocab_size)));
  if (c < 0) return config_.draft_noise;
  return class_epsilon_[static_cast<std::size_t>(c)];
}

int ModelPair::token_class(Token t) const {
  if (t == kBosToken) return -1;
  const int classes = static_cast<int>(class_epsilon_.size());
  return static_cast<int>((static_cast<long long>(t) - 1) * classes /
                          (config_.vocab_size - 1));
}

void ModelPair::check_token(Token t) const {
  if (t < 0 || t >= config_.vocab_size) {
    throw InvalidToken("token id " + std::to_string(t) + " outside vocabulary of " +
                       std::to_string(config_.vocab_size));
  }
}

TokenDist target_next_dist(const ModelPair& models, std::span<const Token> context) {
  auto row = models.target_row(models.bucket_of(context));
  return {row.begin(), row.end()};
}

TokenDist draft_next_dist(const ModelPair& models, std::span<const Token> context) {
  auto row = models.draft_row(models.bucket_of(context));
  return {row.begin(), row.end()};
}

std::vector<Token> greedy_decode(const ModelPair& models, std::span<const Token> context,
                                 int max_new_tokens) {
  std::vector<Token> out;
  std::size_t bucket = models.bucket_of(context);
  const Token eos = models.config().eos_token;
  while (static_cast<int>(out.size()) < max_new_tokens) {
    const Token next = models.target_argmax(bucket);
    out.push_back(next);
    if (next == eos) break;
    bucket = models.extend(bucket, next);
  }
  return out;
}

// ---------------------------------------------------------------------------

int FeatureSpec::state_dim() const {
  if (kind == EncoderKind::context_embedding) return embedding_dim;
  return slice_dims[0] + slice_dims[1] + slice_dims[2];
}

void FeatureSpec::validate() const {
  for (int d : slice_dims) {
    if (d < 1) throw ConfigError("features: slice dims must be >= 1");
  }
  if (embedding_dim < 1) throw ConfigError("features: embedding_dim must be >= 1");
}

StateEncoder::StateEncoder(FeatureSpec spec, int vocab_size, int context_order)
    : spec_(spec), vocab_size_(vocab_size), context_order_(context_order) {
  spec_.validate();
  if (spec_.kind != EncoderKind::feature_vector) return;
  const auto cols = static_cast<std::size_t>(context_order_ * vocab_size_);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto rows = static_cast<std::size_t>(spec_.slice_dims[s]);
    auto& m = projections_[s];
    m.resize(rows * cols);
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = 2.0 * unit_closed_open(counter_bits(spec_.seed, kSliceStream + s, i)) - 1.0;
    }
  }
}

std::vector<double> StateEncoder::extract(std::span<const Token> context) const {
  if (context.empty()) throw ContractViolation("context must be non-empty");
  for (Token t : context) {
    if (t < 0 || t >= vocab_size_) {
      throw InvalidToken("token id " + std::to_string(t) + " outside vocabulary");
    }
  }
  return spec_.kind == EncoderKind::feature_vector ? extract_features(context)
                                                   : extract_embedding(context);
}

std::vector<double> StateEncoder::extract_features(std::span<const Token> context) const {
  // One-hot of position p (0 = most recent) sits at column p * V + token;
  // positions before the context start are BOS.
  const auto order = static_cast<std::size_t>(context_order_);
  const auto v = static_cast<std::size_t>(vocab_size_);
  const std::size_t cols = order * v;
  std::vector<double> state;
  state.reserve(static_cast<std::size_t>(spec_.state_dim()));
  for (std::size_t s = 0; s < 3; ++s) {
    const auto rows = static_cast<std::size_t>(spec_.slice_dims[s]);
    const auto& m = projections_[s];
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (std::size_t p = 0; p < order; ++p) {
        const Token t = p < context.size() ? context[context.size() - 1 - p] : kBosToken;
        acc += m[r * cols + p * v + static_cast<std::size_t>(t)];
      }
      state.push_back(acc);
    }
  }
  return state;
}

std::vector<double> StateEncoder::extract_embedding(std::span<const Token> context) const {
  const auto v = static_cast<std::size_t>(vocab_size_);
  const auto dim = static_cast<std::size_t>(spec_.embedding_dim);
  std::unordered_map<std::size_t, int> bag;
  for (std::size_t i = 1; i < context.size(); ++i) {
    ++bag[static_cast<std::size_t>(context[i - 1]) * v + static_cast<std::size_t>(context[i])];
  }
  // Sum in bigram-id order so the result does not depend on hash iteration.
  std::vector<std::pair<std::size_t, int>> sorted(bag.begin(), bag.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> e(dim, 0.0);
  for (const auto& [bigram, count] : sorted) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double w =
          2.0 * unit_closed_open(counter_bits(spec_.seed, kBigramStream, bigram * dim + i)) - 1.0;
      e[i] += count * w;
    }
  }
  double norm = 0.0;
  for (double x : e) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : e) x /= norm;
  }
  return e;
}

// ---------------------------------------------------------------------------

void CostModel::validate() const {
  for (double c : {t_target_base, t_target_per_token, t_draft_base, t_draft_per_node,
                   t_policy, t_tree_mgmt_per_node}) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw ConfigError("cost: constants must be finite and >= 0");
    }
  }
}

LatencyBreakdown simulate_step_latency(const CostModel& cost, const Action& action,
                                       const TreeStats& stats, bool policy_invoked) {
  if (stats.layers < 0 || stats.expanded < 0 || stats.nodes < 0 || stats.candidates < 0) {
    throw ContractViolation("simulate_step_latency: negative tree counts");
  }
  if (stats.layers > action.d || stats.nodes > action.tt) {
    throw ContractViolation("simulate_step_latency: tree exceeds action limits");
  }
  LatencyBreakdown out;
  out.verification = cost.t_target_base + cost.t_target_per_token * stats.candidates;
  out.drafting = stats.layers * cost.t_draft_base + stats.expanded * cost.t_draft_per_node;
  out.tree_management = stats.nodes * cost.t_tree_mgmt_per_node;
  out.policy = policy_invoked ? cost.t_policy : 0.0;
  return out;
}

}  // namespace spectune
