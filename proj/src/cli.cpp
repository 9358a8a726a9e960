#include "spectune/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spectune/bench.hpp"
#include "spectune/config.hpp"
#include "spectune/errors.hpp"
#include "spectune/report.hpp"

namespace spectune {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDefaultOutDir = "spectune_out";

// Flags every subcommand accepts.
struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

// Policy selection shared by the evaluation-style subcommands.
struct PolicyFlags {
  std::string policy_path;
  std::string action;
  bool greedy = false;
  bool sample = false;
  std::optional<int> questions;
};

struct Session {
  AppConfig config;
  fs::path out;
  std::string command;
  std::vector<std::string> argv;
  std::chrono::system_clock::time_point started;
  std::chrono::steady_clock::time_point clock;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw ConfigError("cannot write " + path.string());
}

std::string to_text(const auto& writer) {
  std::ostringstream s;
  writer(s);
  return s.str();
}

std::string utc_stamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Session open_session(const std::string& command, const CommonFlags& flags,
                     std::vector<std::string> argv) {
  Session s;
  s.command = command;
  s.argv = std::move(argv);
  s.started = std::chrono::system_clock::now();
  s.clock = std::chrono::steady_clock::now();
  s.config = flags.config_path.empty() ? default_config() : load_config(flags.config_path);
  if (flags.seed) apply_seed(s.config, *flags.seed);
  if (flags.threads) {
    s.config.threads = *flags.threads;
  } else if (const char* env = std::getenv("SPECTUNE_THREADS"); env != nullptr && *env != '\0') {
    try {
      s.config.threads = std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("SPECTUNE_THREADS is not an integer: ") + env);
    }
  }
  s.config.validate();

  std::string out = flags.out_dir;
  if (out.empty()) {
    const char* env = std::getenv("SPECTUNE_OUT_DIR");
    out = env != nullptr && *env != '\0' ? env : kDefaultOutDir;
  }
  s.out = out;
  std::error_code ec;
  fs::create_directories(s.out, ec);
  if (ec || !fs::is_directory(s.out)) {
    throw ConfigError("cannot create output directory " + s.out.string());
  }
  write_file(s.out / "config.json", dump_config(s.config));
  return s;
}

// Timestamps and wall-clock live here and nowhere else.
void close_session(const Session& s, json extra = json::object()) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - s.clock).count();
  json meta = {{"command", s.command},
               {"argv", s.argv},
               {"started_utc", utc_stamp(s.started)},
               {"wall_clock_seconds", wall},
               {"config_digest", config_digest(s.config)}};
  meta.update(extra);
  write_file(s.out / (s.command + ".meta.json"), meta.dump(2) + "\n");
}

Action parse_action_flag(const std::string& text, const char* flag) {
  const auto a = parse_action(text);
  if (!a) {
    throw ConfigError(std::string(flag) + ": '" + text +
                      "' is not a feasible TT,d,k triple (needs TT <= k^(d-1))");
  }
  return *a;
}

StateEncoder make_encoder(const AppConfig& c, const ModelPair& models) {
  return StateEncoder(c.features, models.vocab_size(), models.context_order());
}

PolicyNet load_policy(const std::string& path, const StateEncoder& encoder,
                      std::uint64_t* digest) {
  PolicyNet net = load_checkpoint(path, std::nullopt, digest);
  if (net.state_dim() != encoder.state_dim()) {
    throw ConfigError("checkpoint state dimension " + std::to_string(net.state_dim()) +
                      " does not match the configured features (" +
                      std::to_string(encoder.state_dim()) + ")");
  }
  return net;
}

// Resolves --policy / --action into a source factory. `net` must outlive it.
SourceFactory select_source(const Session& s, const PolicyFlags& p, const StateEncoder& encoder,
                            std::optional<PolicyNet>& net, json& description) {
  if (!p.policy_path.empty() && !p.action.empty()) {
    throw ConfigError("--policy and --action are mutually exclusive");
  }
  if (!p.action.empty()) {
    const Action a = parse_action_flag(p.action, "--action");
    description = {{"kind", "static"}, {"action", action_json(a)}};
    return static_source(a);
  }
  if (p.policy_path.empty()) throw ConfigError("one of --policy or --action is required");
  std::uint64_t digest = 0;
  net = load_policy(p.policy_path, encoder, &digest);
  RunConfig run = s.config.eval_run;
  description = {{"kind", "policy"},
                 {"checkpoint_digest", digest},
                 {"greedy", run.greedy_policy},
                 {"temperature", s.config.ppo.inference_temperature}};
  return policy_source(*net, encoder, s.config.ppo, run);
}

void apply_policy_flags(Session& s, const PolicyFlags& p) {
  if (p.greedy && p.sample) throw ConfigError("--greedy and --sample are mutually exclusive");
  if (p.greedy) s.config.eval_run.greedy_policy = true;
  if (p.sample) s.config.eval_run.greedy_policy = false;
  if (p.questions) {
    s.config.eval_corpus.num_questions = *p.questions;
    s.config.eval_corpus.validate();
  }
}

// ---------------------------------------------------------------------------

int cmd_train(Session& s, std::optional<int> questions, const std::string& checkpoint,
              std::ostream& out) {
  if (questions) {
    s.config.train_corpus.num_questions = *questions;
    s.config.train_corpus.validate();
  }
  const AppConfig& c = s.config;
  const ModelPair models(c.model);
  const StateEncoder encoder = make_encoder(c, models);
  PolicyNet net(encoder.state_dim(), c.hidden, c.train_run.policy_seed);
  const auto corpus = make_corpus(models, c.train_corpus);
  const TrainReport report = train(models, encoder, net, corpus, c.cost, c.ppo, c.train_run);

  const fs::path ckpt = s.out / checkpoint;
  save_checkpoint(ckpt.string(), net, config_digest(c));
  write_file(s.out / "train_report.json", train_report_json(report).dump(2) + "\n");
  write_file(s.out / "train_report.txt", to_text([&](std::ostream& o) { write_train_text(o, report); }));
  close_session(s, {{"train_wall_clock_seconds", report.wall_clock_seconds}});

  const double entropy = report.updates.empty() ? 0.0 : report.updates.back().entropy;
  char line[256];
  std::snprintf(line, sizeof(line),
                "train: %zu questions, %zu updates, %d transitions, %d unique actions, "
                "final entropy %.3f -> %s\n",
                corpus.size(), report.updates.size(), report.transitions, report.unique_actions,
                entropy, ckpt.string().c_str());
  out << line;
  return net.finite() ? kExitOk : kExitInvariant;
}

int cmd_eval(Session& s, const PolicyFlags& p, const std::string& baseline_text,
             std::ostream& out) {
  apply_policy_flags(s, p);
  const AppConfig& c = s.config;
  const ModelPair models(c.model);
  const StateEncoder encoder = make_encoder(c, models);
  std::optional<PolicyNet> net;
  json source;
  const SourceFactory factory = select_source(s, p, encoder, net, source);
  const auto suite = make_corpus(models, c.eval_corpus);
  const EvalReport report = evaluate(models, suite, factory, c.cost, c.eval_run, true, c.threads);

  json doc = eval_report_json(report);
  doc["source"] = source;
  write_file(s.out / "eval_report.json", doc.dump(2) + "\n");
  write_file(s.out / "eval_report.txt", to_text([&](std::ostream& o) { write_eval_text(o, report); }));
  write_file(s.out / "eval_steps.csv",
             to_text([&](std::ostream& o) { write_step_csv(o, report.steps); }));

  bool ok = report.all_lossless;
  std::string paired;
  if (!baseline_text.empty()) {
    const Action baseline = parse_action_flag(baseline_text, "--baseline-action");
    const EvalReport base =
        evaluate(models, suite, static_source(baseline), c.cost, c.eval_run, false, c.threads);
    const BenchReport cmp = compare_runs(report, base, "eval vs " + baseline.to_string());
    write_file(s.out / "bench_report.json", bench_report_json(cmp).dump(2) + "\n");
    write_file(s.out / "bench_report.txt", to_text([&](std::ostream& o) { write_bench_text(o, cmp); }));
    ok = ok && cmp.failed_checks().empty();
    char buf[160];
    std::snprintf(buf, sizeof(buf), ", %.4fx vs %s (wilcoxon p %.4g)", cmp.speedup_vs_baseline,
                  baseline.to_string().c_str(), cmp.wilcoxon.p);
    paired = buf;
  }
  close_session(s);

  char line[384];
  std::snprintf(line, sizeof(line),
                "eval: %zu questions, %.2f tokens/s, %.3fx vs autoregressive%s, lossless %s\n",
                suite.size(), report.mean_tokens_per_second, report.speedup_vs_autoregressive,
                paired.c_str(), report.all_lossless ? "yes" : "NO");
  out << line;
  return ok ? kExitOk : kExitInvariant;
}

int cmd_bench(Session& s, const PolicyFlags& p, const std::string& baseline_text,
              bool search_static, std::ostream& out) {
  apply_policy_flags(s, p);
  const AppConfig& c = s.config;
  const ModelPair models(c.model);
  const StateEncoder encoder = make_encoder(c, models);
  std::optional<PolicyNet> net;
  json source;
  const SourceFactory factory = select_source(s, p, encoder, net, source);
  const auto suite = make_corpus(models, c.eval_corpus);
  const EvalReport adaptive =
      evaluate(models, suite, factory, c.cost, c.eval_run, false, c.threads);

  const Action baseline = baseline_text.empty()
                              ? c.baseline_action
                              : parse_action_flag(baseline_text, "--baseline-action");
  const EvalReport base =
      evaluate(models, suite, static_source(baseline), c.cost, c.eval_run, false, c.threads);
  const BenchReport cmp = compare_runs(adaptive, base, "baseline " + baseline.to_string());
  bool ok = cmp.failed_checks().empty();

  json doc = {{"source", source}, {"baseline", bench_report_json(cmp)}};
  std::string text = to_text([&](std::ostream& o) { write_bench_text(o, cmp); });
  std::string best_note;
  if (search_static) {
    // Every static action on the same suite; the best one is the bar an
    // adaptive policy has to clear.
    json grid = json::array();
    std::optional<EvalReport> best;
    Action best_action;
    for (const Action& a : enumerate_actions()) {
      EvalReport r = evaluate(models, suite, static_source(a), c.cost, c.eval_run, false, c.threads);
      grid.push_back({{"action", a.to_string()}, {"tokens_per_second", r.mean_tokens_per_second}});
      if (!best || r.mean_tokens_per_second > best->mean_tokens_per_second) {
        best = std::move(r);
        best_action = a;
      }
    }
    const BenchReport vs_best = compare_runs(adaptive, *best, "best static " + best_action.to_string());
    ok = ok && vs_best.failed_checks().empty();
    doc["best_static"] = bench_report_json(vs_best);
    doc["static_grid"] = grid;
    text += "\n" + to_text([&](std::ostream& o) { write_bench_text(o, vs_best); });
    char buf[160];
    std::snprintf(buf, sizeof(buf), ", %.4fx vs best static %s (p %.4g)",
                  vs_best.speedup_vs_baseline, best_action.to_string().c_str(), vs_best.wilcoxon.p);
    best_note = buf;
  }
  write_file(s.out / "bench_report.json", doc.dump(2) + "\n");
  write_file(s.out / "bench_report.txt", text);
  close_session(s);

  char line[384];
  std::snprintf(line, sizeof(line), "bench: %.2f tokens/s, %.4fx vs %s (wilcoxon p %.4g)%s%s\n",
                adaptive.mean_tokens_per_second, cmp.speedup_vs_baseline,
                baseline.to_string().c_str(), cmp.wilcoxon.p, best_note.c_str(),
                ok ? "" : ", CHECKS FAILED");
  out << line;
  return ok ? kExitOk : kExitInvariant;
}

int cmd_sweep(Session& s, const PolicyFlags& p, const std::vector<int>& intervals,
              std::ostream& out) {
  apply_policy_flags(s, p);
  if (!intervals.empty()) s.config.sweep_intervals = intervals;
  s.config.validate();
  const AppConfig& c = s.config;
  const ModelPair models(c.model);
  const StateEncoder encoder = make_encoder(c, models);
  std::optional<PolicyNet> net;
  json source;
  const SourceFactory factory = select_source(s, p, encoder, net, source);
  const auto suite = make_corpus(models, c.eval_corpus);
  const auto points =
      cache_sweep(models, suite, factory, c.cost, c.eval_run, c.sweep_intervals, c.threads);

  write_file(s.out / "sweep.csv", to_text([&](std::ostream& o) { write_sweep_csv(o, points); }));
  write_file(s.out / "sweep.json", json{{"source", source}, {"points", sweep_json(points)}}.dump(2) + "\n");
  write_file(s.out / "sweep.txt", to_text([&](std::ostream& o) { write_sweep_text(o, points); }));
  close_session(s);

  std::string curve;
  for (const SweepPoint& pt : points) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), " N=%d:%.2f", pt.interval, pt.tokens_per_second);
    curve += buf;
  }
  out << "sweep-cache: tokens/s" << curve << "\n";
  return kExitOk;
}

int cmd_profile(Session& s, const PolicyFlags& p, std::ostream& out) {
  apply_policy_flags(s, p);
  const AppConfig& c = s.config;
  const ModelPair models(c.model);
  const StateEncoder encoder = make_encoder(c, models);
  std::optional<PolicyNet> net;
  json source;
  const SourceFactory factory = select_source(s, p, encoder, net, source);
  const auto suite = make_corpus(models, c.eval_corpus);
  const EvalReport report = evaluate(models, suite, factory, c.cost, c.eval_run, true, c.threads);
  const ProfileBreakdown prof = profile_steps(report.steps);

  double sum = 0.0;
  for (double v : prof.percent) sum += v;
  const bool ok = std::abs(sum - 100.0) <= 0.1;
  write_file(s.out / "profile.csv", to_text([&](std::ostream& o) { write_profile_csv(o, prof); }));
  json doc = profile_json(prof);
  doc["source"] = source;
  doc["percent_sum"] = sum;
  write_file(s.out / "profile.json", doc.dump(2) + "\n");
  write_file(s.out / "profile.txt", to_text([&](std::ostream& o) { write_profile_text(o, prof); }));
  close_session(s);

  std::string parts;
  for (int i = 0; i < kProfileCategories; ++i) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s%s %.3f%%", i ? ", " : " ",
                  std::string(category_name(static_cast<ProfileCategory>(i))).c_str(),
                  prof.percent[static_cast<std::size_t>(i)]);
    parts += buf;
  }
  out << "profile:" << parts << (ok ? "" : " (percentages do not sum to 100)") << "\n";
  return ok ? kExitOk : kExitInvariant;
}

int cmd_ablate(Session& s, std::optional<int> questions, std::ostream& out) {
  if (questions) {
    s.config.train_corpus.num_questions = *questions;
    s.config.train_corpus.validate();
  }
  const AppConfig& c = s.config;
  const ModelPair models(c.model);
  const auto train_corpus = make_corpus(models, c.train_corpus);
  const auto suite = make_corpus(models, c.eval_corpus);
  AblationSetup setup;
  setup.models = &models;
  setup.train_corpus = train_corpus;
  setup.eval_suite = suite;
  setup.cost = c.cost;
  setup.features = c.features;
  setup.train_run = c.train_run;
  setup.eval_run = c.eval_run;
  setup.baseline = c.baseline_action;
  setup.threads = c.threads;
  const auto grid = default_ablation_grid();
  const auto rows = compare_ablations(setup, grid);

  write_file(s.out / "ablation.json", ablation_json(rows).dump(2) + "\n");
  write_file(s.out / "ablation.txt", to_text([&](std::ostream& o) { write_ablation_table(o, rows); }));
  close_session(s);
  out << "ablate: " << rows.size() << " configurations vs " << c.baseline_action.to_string()
      << " -> " << (s.out / "ablation.txt").string() << "\n";
  return kExitOk;
}

int cmd_inspect_tree(Session& s, const std::string& context_text, const std::string& action_text,
                     std::ostream& out) {
  const ModelPair models(s.config.model);
  std::vector<Token> context = {kBosToken};
  std::istringstream in(context_text);
  for (std::string tok; in >> tok;) {
    try {
      std::size_t used = 0;
      const int t = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      context.push_back(t);
    } catch (const std::exception&) {
      throw ConfigError("--context: '" + tok + "' is not a token id");
    }
  }
  for (Token t : context) {
    if (t < 0 || t >= models.vocab_size()) {
      throw ConfigError("--context: token " + std::to_string(t) + " outside the vocabulary");
    }
  }
  const Action action = action_text.empty() ? s.config.baseline_action
                                            : parse_action_flag(action_text, "--action");
  const DraftTree tree = build_tree(models, context, action);
  check_tree_invariants(tree, action);
  const auto order = rerank(tree, static_cast<std::size_t>(action.tt));
  const VerifyResult verdict = verify_greedy_tree(models, context, tree, order);

  json doc = tree_json(tree, action, order);
  doc["accepted"] = verdict.accepted;
  doc["correction"] = verdict.correction;
  write_file(s.out / "tree.json", doc.dump(2) + "\n");
  write_file(s.out / "tree.dot", to_text([&](std::ostream& o) { write_tree_dot(o, tree, order); }));
  close_session(s);
  out << "inspect-tree: " << action.to_string() << ", " << tree.nodes.size() << " nodes in "
      << tree.max_depth() << " layers, greedy accepts " << verdict.accept_len << "\n";
  return kExitOk;
}

int cmd_dump_model(Session& s, std::ostream& out) {
  const ModelPair models(s.config.model);
  write_file(s.out / "model.csv", to_text([&](std::ostream& o) { write_model_csv(o, models); }));
  close_session(s);
  out << "dump-model: " << models.num_buckets() << " rows x " << models.vocab_size()
      << " tokens -> " << (s.out / "model.csv").string() << "\n";
  return kExitOk;
}

int cmd_export_policy(Session& s, const std::string& policy_path, std::ostream& out) {
  if (policy_path.empty()) throw ConfigError("--policy is required");
  const PolicyNet net = load_checkpoint(policy_path);
  write_file(s.out / "policy.csv", to_text([&](std::ostream& o) { export_policy_csv(o, net); }));
  close_session(s);
  out << "export-policy: " << net.actor.params().size() + net.critic.params().size()
      << " parameters -> " << (s.out / "policy.csv").string() << "\n";
  return kExitOk;
}

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config_path, "JSON config file (defaults apply when omitted)")
      ->check(CLI::ExistingFile);
  app->add_option("--out", f.out_dir, "Output directory (env SPECTUNE_OUT_DIR)");
  app->add_option("--seed", f.seed, "Policy init and sampling seed");
  app->add_option("--threads", f.threads, "Evaluation worker threads (env SPECTUNE_THREADS)");
}

void add_policy(CLI::App* app, PolicyFlags& p, bool allow_action) {
  app->add_option("--policy", p.policy_path, "Policy checkpoint")->check(CLI::ExistingFile);
  if (allow_action) app->add_option("--action", p.action, "Static action TT,d,k instead of a policy");
  app->add_flag("--greedy", p.greedy, "Argmax policy actions");
  app->add_flag("--sample", p.sample, "Sample policy actions at the inference temperature");
  app->add_option("--questions", p.questions, "Evaluation suite size");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulated speculative decoding with RL-tuned draft trees", "spectune"};
  app.require_subcommand(1);
  app.fallthrough(false);

  CommonFlags common;
  PolicyFlags policy;
  std::optional<int> train_questions;
  std::string checkpoint = "policy.bin";
  std::string baseline_text;
  bool search_static = false;
  std::vector<int> intervals;
  std::string context_text;
  std::string tree_action;

  auto* train_cmd = app.add_subcommand("train", "Train a policy over the training corpus");
  add_common(train_cmd, common);
  train_cmd->add_option("--questions", train_questions, "Training corpus size");
  train_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file name inside --out");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a policy or static action");
  add_common(eval_cmd, common);
  add_policy(eval_cmd, policy, true);
  eval_cmd->add_option("--baseline-action", baseline_text, "Paired static baseline TT,d,k");

  auto* bench_cmd = app.add_subcommand("bench", "Paired comparison against static baselines");
  add_common(bench_cmd, common);
  add_policy(bench_cmd, policy, true);
  bench_cmd->add_option("--baseline-action", baseline_text, "Static baseline TT,d,k");
  bench_cmd->add_flag("--search-static", search_static, "Also compare with the best of all static actions");

  auto* sweep_cmd = app.add_subcommand("sweep-cache", "Latency vs cache interval");
  add_common(sweep_cmd, common);
  add_policy(sweep_cmd, policy, true);
  sweep_cmd->add_option("--n", intervals, "Cache intervals, comma separated")->delimiter(',');

  auto* profile_cmd = app.add_subcommand("profile", "Four-category time breakdown");
  add_common(profile_cmd, common);
  add_policy(profile_cmd, policy, true);

  auto* ablate_cmd = app.add_subcommand("ablate", "Variant x encoder x width grid");
  add_common(ablate_cmd, common);
  ablate_cmd->add_option("--questions", train_questions, "Training corpus size per cell");

  auto* tree_cmd = app.add_subcommand("inspect-tree", "Build one draft tree and write DOT/JSON");
  add_common(tree_cmd, common);
  tree_cmd->add_option("--context", context_text, "Space separated token ids after BOS");
  tree_cmd->add_option("--action", tree_action, "TT,d,k (default: the baseline action)");

  auto* dump_cmd = app.add_subcommand("dump-model", "Write the target and draft tables as CSV");
  add_common(dump_cmd, common);

  auto* export_cmd = app.add_subcommand("export-policy", "Write checkpoint weights as CSV");
  add_common(export_cmd, common);
  export_cmd->add_option("--policy", policy.policy_path, "Policy checkpoint")
      ->check(CLI::ExistingFile)
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    const CLI::App* failed = &app;
    for (CLI::App* sub : app.get_subcommands()) failed = sub;
    err << failed->help();
    return kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  std::vector<std::string> args(argv, argv + argc);
  try {
    Session s = open_session(name, common, args);
    if (chosen == train_cmd) return cmd_train(s, train_questions, checkpoint, out);
    if (chosen == eval_cmd) return cmd_eval(s, policy, baseline_text, out);
    if (chosen == bench_cmd) return cmd_bench(s, policy, baseline_text, search_static, out);
    if (chosen == sweep_cmd) return cmd_sweep(s, policy, intervals, out);
    if (chosen == profile_cmd) return cmd_profile(s, policy, out);
    if (chosen == ablate_cmd) return cmd_ablate(s, train_questions, out);
    if (chosen == tree_cmd) return cmd_inspect_tree(s, context_text, tree_action, out);
    if (chosen == dump_cmd) return cmd_dump_model(s, out);
    if (chosen == export_cmd) return cmd_export_policy(s, policy.policy_path, out);
  } catch (const ConfigError& e) {
    err << name << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << name << ": " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitConfig;
}

}  // namespace spectune
