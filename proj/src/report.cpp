#include "spectune/report.hpp"

#include <cstdio>
#include <ostream>
#include <string>

namespace spectune {

using nlohmann::json;

namespace {

void put(std::ostream& out, const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  out << buf;
}

// Static sources may run an off-grid triple, which has no index.
std::string action_text(int index) {
  if (index < 0) return "off-grid";
  return enumerate_actions()[static_cast<std::size_t>(index)].to_string();
}

json histogram_json(const std::map<int, int>& counts) {
  json h = json::array();
  for (const auto& [index, n] : counts) h.push_back({{"action", action_text(index)}, {"count", n}});
  return h;
}

}  // namespace

json action_json(const Action& a) {
  return {{"tt", a.tt}, {"d", a.d}, {"k", a.k}, {"name", a.to_string()}};
}

json train_report_json(const TrainReport& r) {
  json updates = json::array();
  for (const UpdateSummary& u : r.updates) {
    updates.push_back({{"question", u.question},
                       {"objective_before", u.objective_before},
                       {"objective_after", u.objective_after},
                       {"value_loss", u.value_loss},
                       {"entropy", u.entropy},
                       {"approx_kl", u.approx_kl},
                       {"aborted", u.aborted}});
  }
  return {{"transitions", r.transitions},
          {"discarded", r.discarded},
          {"unique_actions", r.unique_actions},
          {"updates", updates},
          {"rewards", r.rewards},
          {"action_counts", histogram_json(r.action_counts)}};
}

json eval_report_json(const EvalReport& r) {
  json questions = json::array();
  for (const QuestionResult& q : r.questions) {
    questions.push_back({{"id", q.id},
                         {"prompt_class", q.prompt_class},
                         {"tokens", q.tokens},
                         {"seconds", q.seconds},
                         {"tokens_per_second", q.tokens_per_second},
                         {"steps", q.steps},
                         {"policy_invocations", q.policy_invocations},
                         {"accept_len_total", q.accept_len_total},
                         {"accept_rate_mean", q.accept_rate_mean},
                         {"accept_rate_sd", q.accept_rate_sd},
                         {"lossless", q.lossless},
                         {"seed_digest", q.seed_digest},
                         {"actions", histogram_json(q.action_steps)}});
  }
  return {{"mean_tokens_per_second", r.mean_tokens_per_second},
          {"speedup_vs_autoregressive", r.speedup_vs_autoregressive},
          {"unique_actions", r.unique_actions},
          {"all_lossless", r.all_lossless},
          {"questions", questions}};
}

json bench_report_json(const BenchReport& r) {
  return {{"suite", r.suite},
          {"questions", r.questions},
          {"adaptive_tokens_per_second", r.adaptive_tokens_per_second},
          {"baseline_tokens_per_second", r.baseline_tokens_per_second},
          {"speedup_vs_baseline", r.speedup_vs_baseline},
          {"adaptive_speedup_vs_autoregressive", r.adaptive_speedup_vs_autoregressive},
          {"baseline_speedup_vs_autoregressive", r.baseline_speedup_vs_autoregressive},
          {"wilcoxon",
           {{"p", r.wilcoxon.p},
            {"n", r.wilcoxon.n},
            {"w_plus", r.wilcoxon.w_plus},
            {"w_minus", r.wilcoxon.w_minus},
            {"exact", r.wilcoxon.exact}}},
          {"accept_rate_mean", r.accept_rate_mean},
          {"accept_rate_sd", r.accept_rate_sd},
          {"accept_len_total", r.accept_len_total},
          {"unique_actions", r.unique_actions},
          {"seeds_match", r.seeds_match},
          {"lossless", r.lossless},
          {"failed_checks", r.failed_checks()}};
}

json sweep_json(std::span<const SweepPoint> points) {
  json rows = json::array();
  for (const SweepPoint& p : points) {
    rows.push_back({{"n", p.interval},
                    {"latency_s", p.latency_s},
                    {"tokens", p.tokens},
                    {"tokens_per_second", p.tokens_per_second},
                    {"steps", p.steps},
                    {"policy_invocations", p.policy_invocations},
                    {"policy_seconds", p.policy_seconds}});
  }
  return rows;
}

json profile_json(const ProfileBreakdown& p) {
  json cats = json::array();
  for (int i = 0; i < kProfileCategories; ++i) {
    const auto c = static_cast<ProfileCategory>(i);
    cats.push_back({{"category", std::string(category_name(c))},
                    {"seconds", p.seconds[static_cast<std::size_t>(i)]},
                    {"percent", p.percent[static_cast<std::size_t>(i)]}});
  }
  return {{"total_seconds", p.total}, {"categories", cats}};
}

json ablation_json(std::span<const AblationRow> rows) {
  json out = json::array();
  for (const AblationRow& r : rows) {
    out.push_back({{"config", r.config.name()},
                   {"variant", r.config.variant == PpoVariant::standard ? "standard" : "max_entropy"},
                   {"encoder", r.config.encoder == EncoderKind::feature_vector ? "feature_vector"
                                                                               : "context_embedding"},
                   {"hidden", r.config.hidden},
                   {"tokens_per_second", r.tokens_per_second},
                   {"speedup_vs_baseline", r.speedup_vs_baseline},
                   {"unique_actions", r.unique_actions},
                   {"wilcoxon_p", r.wilcoxon_p}});
  }
  return out;
}

json tree_json(const DraftTree& tree, const Action& action, std::span<const int> order) {
  json nodes = json::array();
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    nodes.push_back({{"id", i},
                     {"token", n.token},
                     {"parent", n.parent},
                     {"c", n.confidence},
                     {"cum_v", n.cum_v},
                     {"depth", n.depth}});
  }
  return {{"action", action_json(action)},
          {"root_context", tree.root_context},
          {"expanded", tree.expanded},
          {"nodes", nodes},
          {"rerank", std::vector<int>(order.begin(), order.end())}};
}

// ---------------------------------------------------------------------------

void write_train_text(std::ostream& out, const TrainReport& r) {
  put(out, "transitions %d  discarded %d  updates %zu  unique actions %d\n", r.transitions,
      r.discarded, r.updates.size(), r.unique_actions);
  if (r.updates.empty()) return;
  put(out, "%8s %9s %14s %14s %12s %9s %10s\n", "update", "question", "objective_pre",
      "objective_post", "value_loss", "entropy", "approx_kl");
  // Long runs print every tenth update plus the last one.
  const std::size_t stride = r.updates.size() > 50 ? 10 : 1;
  for (std::size_t i = 0; i < r.updates.size(); ++i) {
    if (i % stride != 0 && i + 1 != r.updates.size()) continue;
    const UpdateSummary& u = r.updates[i];
    put(out, "%8zu %9d %14.6f %14.6f %12.6f %9.4f %10.6f%s\n", i, u.question, u.objective_before,
        u.objective_after, u.value_loss, u.entropy, u.approx_kl, u.aborted ? "  aborted" : "");
  }
}

void write_eval_text(std::ostream& out, const EvalReport& r) {
  put(out, "%8s %6s %8s %11s %10s %7s %8s %15s %9s\n", "question", "class", "tokens", "seconds",
      "tokens/s", "steps", "queries", "accept_rate", "lossless");
  for (const QuestionResult& q : r.questions) {
    const std::string rate = format_mean_sd(q.accept_rate_mean, q.accept_rate_sd, 3);
    put(out, "%8d %6d %8lld %11.4f %10.2f %7d %8d %15s %9s\n", q.id, q.prompt_class, q.tokens,
        q.seconds, q.tokens_per_second, q.steps, q.policy_invocations, rate.c_str(),
        q.lossless ? "yes" : "NO");
  }
  put(out, "mean tokens/s %.2f  speedup vs autoregressive %.3fx  unique actions %d  lossless %s\n",
      r.mean_tokens_per_second, r.speedup_vs_autoregressive, r.unique_actions,
      r.all_lossless ? "yes" : "NO");
}

void write_bench_text(std::ostream& out, const BenchReport& r) {
  put(out, "%-28s %s\n", "suite", r.suite.c_str());
  put(out, "%-28s %d\n", "questions", r.questions);
  put(out, "%-28s %.2f\n", "adaptive tokens/s", r.adaptive_tokens_per_second);
  put(out, "%-28s %.2f\n", "baseline tokens/s", r.baseline_tokens_per_second);
  put(out, "%-28s %.4fx\n", "speedup vs baseline", r.speedup_vs_baseline);
  put(out, "%-28s %.3fx / %.3fx\n", "vs autoregressive", r.adaptive_speedup_vs_autoregressive,
      r.baseline_speedup_vs_autoregressive);
  put(out, "%-28s %.4g (n=%d, %s)\n", "wilcoxon p", r.wilcoxon.p, r.wilcoxon.n,
      r.wilcoxon.exact ? "exact" : "normal approx");
  put(out, "%-28s %s\n", "accept rate",
      format_mean_sd(r.accept_rate_mean, r.accept_rate_sd, 4).c_str());
  put(out, "%-28s %lld\n", "accept length total", r.accept_len_total);
  put(out, "%-28s %d\n", "unique actions", r.unique_actions);
  const auto failed = r.failed_checks();
  std::string checks = failed.empty() ? "ok" : "FAILED:";
  for (const auto& f : failed) checks += " " + f;
  put(out, "%-28s %s\n", "checks", checks.c_str());
}

void write_sweep_text(std::ostream& out, std::span<const SweepPoint> points) {
  put(out, "%5s %12s %10s %9s %8s %9s %10s\n", "N", "latency_s", "tokens/s", "tokens", "steps",
      "queries", "policy_s");
  for (const SweepPoint& p : points) {
    put(out, "%5d %12.4f %10.2f %9lld %8d %9d %10.4f\n", p.interval, p.latency_s,
        p.tokens_per_second, p.tokens, p.steps, p.policy_invocations, p.policy_seconds);
  }
}

void write_profile_text(std::ostream& out, const ProfileBreakdown& p) {
  put(out, "%-26s %12s %9s\n", "component", "seconds", "percent");
  double sum = 0.0;
  for (int i = 0; i < kProfileCategories; ++i) {
    const auto c = static_cast<ProfileCategory>(i);
    const auto u = static_cast<std::size_t>(i);
    put(out, "%-26s %12.4f %8.3f%%\n", std::string(category_name(c)).c_str(), p.seconds[u],
        p.percent[u]);
    sum += p.percent[u];
  }
  put(out, "%-26s %12.4f %8.3f%%\n", "Total", p.total, sum);
}

void write_tree_dot(std::ostream& out, const DraftTree& tree, std::span<const int> order) {
  std::vector<char> kept(tree.nodes.size(), 0);
  for (int i : order) kept[static_cast<std::size_t>(i)] = 1;
  out << "digraph draft_tree {\n  node [shape=box, fontname=\"monospace\"];\n";
  out << "  root [label=\"root\"];\n";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    put(out, "  n%zu [label=\"%d\\nc=%.4f\\nv=%.4g\"%s];\n", i, n.token, n.confidence, n.cum_v,
        kept[i] ? ", style=filled, fillcolor=lightblue" : "");
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const int p = tree.nodes[i].parent;
    if (p == kRoot) {
      put(out, "  root -> n%zu;\n", i);
    } else {
      put(out, "  n%d -> n%zu;\n", p, i);
    }
  }
  out << "}\n";
}

void write_model_csv(std::ostream& out, const ModelPair& models) {
  const auto v = static_cast<std::size_t>(models.vocab_size());
  const int order = models.context_order();
  out << "bucket,context,class,epsilon,token,target,draft\n";
  std::vector<Token> ctx(static_cast<std::size_t>(order));
  for (std::size_t b = 0; b < models.num_buckets(); ++b) {
    // The most recent token is the lowest base-V digit of the bucket.
    std::size_t rest = b;
    for (int p = order - 1; p >= 0; --p) {
      ctx[static_cast<std::size_t>(p)] = static_cast<Token>(rest % v);
      rest /= v;
    }
    std::string context;
    for (Token t : ctx) context += (context.empty() ? "" : " ") + std::to_string(t);
    const int cls = models.token_class(ctx.back());
    const double eps = models.draft_epsilon(b);
    const auto target = models.target_row(b);
    const auto draft = models.draft_row(b);
    for (std::size_t t = 0; t < v; ++t) {
      put(out, "%zu,%s,%d,%.17g,%zu,%.17g,%.17g\n", b, context.c_str(), cls, eps, t, target[t],
          draft[t]);
    }
  }
}

}  // namespace spectune
