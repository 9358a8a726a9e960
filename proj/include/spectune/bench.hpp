#ifndef SPECTUNE_BENCH_HPP_
#define SPECTUNE_BENCH_HPP_

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spectune/engine.hpp"

namespace spectune {

struct WilcoxonResult {
  double p = 1.0;       // two-sided
  int n = 0;            // non-zero differences
  double w_plus = 0.0;  // rank sum of positive differences
  double w_minus = 0.0;
  bool exact = false;
};

// Paired signed-rank test on differences. Zeros are dropped, ties get
// midranks. n <= 12 uses the exact null distribution, larger n the normal
// approximation with continuity and tie corrections. No non-zero differences
// gives p = 1.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences);
// Differences a[i] - b[i]. Throws std::invalid_argument on a length mismatch.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

inline constexpr int kWilcoxonExactMax = 12;

// ---------------------------------------------------------------------------

struct SweepPoint {
  int interval = 0;
  double latency_s = 0.0;
  long long tokens = 0;
  double tokens_per_second = 0.0;  // suite tokens / suite latency
  int steps = 0;
  int policy_invocations = 0;
  double policy_seconds = 0.0;
};

// One evaluation per cache interval with identical seeds otherwise.
std::vector<SweepPoint> cache_sweep(const ModelPair& models, std::span<const Question> suite,
                                    const SourceFactory& make_source, const CostModel& cost,
                                    const RunConfig& run, std::span<const int> intervals,
                                    int threads = 1);

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> points);

// ---------------------------------------------------------------------------

enum class ProfileCategory { drafting, tree_management, verification, policy };
inline constexpr int kProfileCategories = 4;

std::string_view category_name(ProfileCategory c);

struct SubEvent {
  std::string tag;
  double seconds = 0.0;
};

// Maps a sub-event tag onto its category. Throws std::invalid_argument for an
// unknown tag.
ProfileCategory category_of(std::string_view tag);

// The tagged pieces a step's simulated time is made of.
std::vector<SubEvent> step_sub_events(const StepRecord& step);

struct ProfileBreakdown {
  std::array<double, kProfileCategories> seconds{};
  std::array<double, kProfileCategories> percent{};
  double total = 0.0;
};

ProfileBreakdown profile(std::span<const SubEvent> events);
ProfileBreakdown profile_steps(std::span<const StepRecord> steps);

void write_profile_csv(std::ostream& out, const ProfileBreakdown& p);

// ---------------------------------------------------------------------------

// Paired comparison of an adaptive run against a static baseline.
struct BenchReport {
  std::string suite;
  int questions = 0;
  double adaptive_tokens_per_second = 0.0;
  double baseline_tokens_per_second = 0.0;
  double speedup_vs_baseline = 0.0;  // ratio of the two means
  double adaptive_speedup_vs_autoregressive = 0.0;
  double baseline_speedup_vs_autoregressive = 0.0;
  WilcoxonResult wilcoxon;
  double accept_rate_mean = 0.0;  // adaptive, over questions
  double accept_rate_sd = 0.0;
  long long accept_len_total = 0;
  int unique_actions = 0;
  bool seeds_match = false;
  bool lossless = false;

  // Names of embedded invariant checks that failed; empty when all hold.
  std::vector<std::string> failed_checks() const;
};

// Throws std::invalid_argument when the reports do not cover the same
// questions in the same order.
BenchReport compare_runs(const EvalReport& adaptive, const EvalReport& baseline,
                         std::string suite_name);

// ---------------------------------------------------------------------------

struct AblationConfig {
  PpoVariant variant = PpoVariant::max_entropy;
  EncoderKind encoder = EncoderKind::feature_vector;
  int hidden = 128;

  std::string name() const;
};

struct AblationRow {
  AblationConfig config;
  double tokens_per_second = 0.0;
  double speedup_vs_baseline = 0.0;
  int unique_actions = 0;  // of the sampled policy, whatever eval_run says
  double wilcoxon_p = 1.0;
};

// The eight variant x encoder x width cells in table order.
std::vector<AblationConfig> default_ablation_grid();

struct AblationSetup {
  const ModelPair* models = nullptr;
  std::span<const Question> train_corpus;
  std::span<const Question> eval_suite;
  CostModel cost;
  FeatureSpec features;  // kind is overridden per row
  RunConfig train_run;
  RunConfig eval_run;
  Action baseline;
  int threads = 1;
};

// Trains and evaluates one policy per config from the same seeds.
std::vector<AblationRow> compare_ablations(const AblationSetup& setup,
                                           std::span<const AblationConfig> configs);

void write_ablation_table(std::ostream& out, std::span<const AblationRow> rows);

}  // namespace spectune

#endif  // SPECTUNE_BENCH_HPP_
