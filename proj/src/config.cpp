#include "spectune/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spectune/errors.hpp"
#include "spectune/rng.hpp"

namespace spectune {

using nlohmann::json;

namespace {

// Reads keys out of one JSON object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config: section '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: " + name_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& child(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const char* key) const { return name_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (seen_.count(item.key()) == 0) {
        throw ConfigError("config: unknown key '" + name_ + "." + item.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

template <typename E>
E parse_enum(const std::string& where, const std::string& text,
             std::initializer_list<std::pair<const char*, E>> names) {
  for (const auto& [name, value] : names) {
    if (text == name) return value;
  }
  std::string options;
  for (const auto& [name, value] : names) options += std::string(options.empty() ? "" : ", ") + name;
  throw ConfigError("config: " + where + " must be one of " + options + ", got '" + text + "'");
}

const char* noise_name(DraftNoise n) {
  return n == DraftNoise::uniform ? "uniform" : "independent";
}
const char* encoder_name(EncoderKind k) {
  return k == EncoderKind::feature_vector ? "feature_vector" : "context_embedding";
}
const char* cost_mode_name(CostMode m) { return m == CostMode::simulated ? "simulated" : "wallclock"; }
const char* variant_name(PpoVariant v) {
  return v == PpoVariant::standard ? "standard" : "max_entropy";
}

void read_model(const json& j, ModelConfig& m) {
  Section s(j, "model");
  s.get("seed", m.seed);
  s.get("vocab_size", m.vocab_size);
  s.get("context_order", m.context_order);
  s.get("draft_noise", m.draft_noise);
  std::string noise = noise_name(m.noise_kind);
  s.get("noise_kind", noise);
  m.noise_kind = parse_enum<DraftNoise>(s.path("noise_kind"), noise,
                                        {{"uniform", DraftNoise::uniform},
                                         {"independent", DraftNoise::independent}});
  s.get("row_sharpness", m.row_sharpness);
  s.get("noise_sharpness", m.noise_sharpness);
  s.get("class_leak", m.class_leak);
  s.get("eos_token", m.eos_token);
  if (s.has("regime_schedule")) {
    const json& list = s.child("regime_schedule");
    if (!list.is_array()) throw ConfigError("config: model.regime_schedule must be an array");
    m.regime_schedule.clear();
    for (const json& item : list) {
      Section r(item, "model.regime_schedule[]");
      RegimeOverride o;
      r.get("class", o.class_id);
      r.get("epsilon", o.epsilon);
      r.finish();
      m.regime_schedule.push_back(o);
    }
  }
  s.finish();
}

void read_features(const json& j, FeatureSpec& f) {
  Section s(j, "features");
  std::string kind = encoder_name(f.kind);
  s.get("kind", kind);
  f.kind = parse_enum<EncoderKind>(s.path("kind"), kind,
                                   {{"feature_vector", EncoderKind::feature_vector},
                                    {"context_embedding", EncoderKind::context_embedding}});
  s.get("slice_dims", f.slice_dims);
  s.get("embedding_dim", f.embedding_dim);
  s.get("seed", f.seed);
  s.finish();
}

void read_cost(const json& j, CostModel& c) {
  Section s(j, "cost");
  s.get("t_target_base", c.t_target_base);
  s.get("t_target_per_token", c.t_target_per_token);
  s.get("t_draft_base", c.t_draft_base);
  s.get("t_draft_per_node", c.t_draft_per_node);
  s.get("t_policy", c.t_policy);
  s.get("t_tree_mgmt_per_node", c.t_tree_mgmt_per_node);
  std::string mode = cost_mode_name(c.mode);
  s.get("mode", mode);
  c.mode = parse_enum<CostMode>(s.path("mode"), mode,
                                {{"simulated", CostMode::simulated},
                                 {"wallclock", CostMode::wallclock}});
  s.finish();
}

void read_ppo(const json& j, PPOConfig& p) {
  Section s(j, "ppo");
  if (s.has("variant")) {
    std::string v;
    s.get("variant", v);
    const PpoVariant variant = parse_enum<PpoVariant>(
        s.path("variant"), v,
        {{"standard", PpoVariant::standard}, {"max_entropy", PpoVariant::max_entropy}});
    p = variant == PpoVariant::standard ? PPOConfig::standard() : PPOConfig::max_entropy();
  }
  s.get("learning_rate", p.learning_rate);
  s.get("n_steps", p.n_steps);
  s.get("batch_size", p.batch_size);
  s.get("epochs", p.epochs);
  s.get("clip_range", p.clip_range);
  s.get("gamma", p.gamma);
  s.get("gae_lambda", p.gae_lambda);
  s.get("ent_coef", p.ent_coef);
  s.get("vf_coef", p.vf_coef);
  s.get("inference_temperature", p.inference_temperature);
  s.get("max_grad_norm", p.max_grad_norm);
  s.get("adam_eps", p.adam_eps);
  s.get("reward_scale", p.reward_scale);
  s.get("normalize_advantage", p.normalize_advantage);
  s.finish();
}

void read_corpus(const json& j, const std::string& name, CorpusConfig& c) {
  Section s(j, name);
  s.get("seed", c.seed);
  s.get("num_questions", c.num_questions);
  s.get("turns", c.turns);
  s.get("prompt_min", c.prompt_min);
  s.get("prompt_max", c.prompt_max);
  s.get("class_mix", c.class_mix);
  s.get("first_id", c.first_id);
  s.finish();
}

void read_run(const json& j, const std::string& name, RunConfig& r, CorpusConfig& corpus) {
  Section s(j, name);
  s.get("max_new_tokens", r.max_new_tokens);
  s.get("cache_interval", r.cache_interval);
  s.get("policy_seed", r.policy_seed);
  s.get("sample_seed", r.sample_seed);
  s.get("greedy_policy", r.greedy_policy);
  s.get("min_elapsed", r.min_elapsed);
  if (s.has("corpus")) read_corpus(s.child("corpus"), name + ".corpus", corpus);
  s.finish();
}

json corpus_json(const CorpusConfig& c) {
  return {{"seed", c.seed},           {"num_questions", c.num_questions},
          {"turns", c.turns},         {"prompt_min", c.prompt_min},
          {"prompt_max", c.prompt_max}, {"class_mix", c.class_mix},
          {"first_id", c.first_id}};
}

json run_json(const RunConfig& r, const CorpusConfig& c) {
  return {{"max_new_tokens", r.max_new_tokens}, {"cache_interval", r.cache_interval},
          {"policy_seed", r.policy_seed},       {"sample_seed", r.sample_seed},
          {"greedy_policy", r.greedy_policy},   {"min_elapsed", r.min_elapsed},
          {"corpus", corpus_json(c)}};
}

}  // namespace

void AppConfig::validate() const {
  model.validate();
  features.validate();
  cost.validate();
  ppo.validate();
  train_run.validate();
  eval_run.validate();
  train_corpus.validate();
  eval_corpus.validate();
  if (hidden < 1) throw ConfigError("config: policy.hidden must be >= 1");
  if (threads < 1) throw ConfigError("config: bench.threads must be >= 1");
  if (!baseline_action.feasible()) {
    throw ConfigError("config: baseline action " + baseline_action.to_string() +
                      " violates tt <= k^(d-1)");
  }
  for (int n : sweep_intervals) {
    if (n < 1) throw ConfigError("config: sweep intervals must be >= 1");
  }
  const int classes = model.num_classes();
  for (const CorpusConfig* c : {&train_corpus, &eval_corpus}) {
    if (!c->class_mix.empty() && static_cast<int>(c->class_mix.size()) != classes) {
      throw ConfigError("config: class_mix needs one weight per prompt class (" +
                        std::to_string(classes) + ")");
    }
  }
}

AppConfig default_config() {
  AppConfig c;
  c.model.regime_schedule = {{0, 0.05}, {1, 0.7}};
  c.ppo = PPOConfig::max_entropy();

  c.train_run.mode = RunMode::train;
  c.train_run.max_new_tokens = 4096;
  c.train_run.cache_interval = 10;
  c.train_run.policy_seed = 1;
  c.train_run.sample_seed = 2;
  c.train_corpus.seed = 11;
  c.train_corpus.num_questions = 400;
  c.train_corpus.turns = 2;

  c.eval_run.mode = RunMode::eval;
  c.eval_run.max_new_tokens = 2048;
  c.eval_run.cache_interval = 30;
  c.eval_run.policy_seed = 1;
  c.eval_run.sample_seed = 3;
  c.eval_run.greedy_policy = true;
  c.eval_corpus.seed = 12;
  c.eval_corpus.num_questions = 40;
  c.eval_corpus.first_id = 1000000;

  c.baseline_action = *find_action(64, 6, 16);
  return c;
}

AppConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  AppConfig c = default_config();
  Section top(j, "config");
  if (top.has("model")) read_model(top.child("model"), c.model);
  if (top.has("features")) read_features(top.child("features"), c.features);
  if (top.has("cost")) read_cost(top.child("cost"), c.cost);
  if (top.has("ppo")) read_ppo(top.child("ppo"), c.ppo);
  if (top.has("policy")) {
    Section s(top.child("policy"), "policy");
    s.get("hidden", c.hidden);
    s.finish();
  }
  if (top.has("train")) read_run(top.child("train"), "train", c.train_run, c.train_corpus);
  if (top.has("eval")) read_run(top.child("eval"), "eval", c.eval_run, c.eval_corpus);
  if (top.has("bench")) {
    Section s(top.child("bench"), "bench");
    std::string baseline = c.baseline_action.to_string();
    s.get("baseline_action", baseline);
    const auto parsed = parse_action(baseline);
    if (!parsed) throw ConfigError("config: bench.baseline_action '" + baseline + "' is malformed");
    c.baseline_action = *parsed;
    s.get("sweep_intervals", c.sweep_intervals);
    s.get("threads", c.threads);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const AppConfig& c) {
  json regimes = json::array();
  for (const auto& r : c.model.regime_schedule) {
    regimes.push_back({{"class", r.class_id}, {"epsilon", r.epsilon}});
  }
  json j = {
      {"model",
       {{"seed", c.model.seed},
        {"vocab_size", c.model.vocab_size},
        {"context_order", c.model.context_order},
        {"draft_noise", c.model.draft_noise},
        {"noise_kind", noise_name(c.model.noise_kind)},
        {"row_sharpness", c.model.row_sharpness},
        {"noise_sharpness", c.model.noise_sharpness},
        {"class_leak", c.model.class_leak},
        {"eos_token", c.model.eos_token},
        {"regime_schedule", regimes}}},
      {"features",
       {{"kind", encoder_name(c.features.kind)},
        {"slice_dims", c.features.slice_dims},
        {"embedding_dim", c.features.embedding_dim},
        {"seed", c.features.seed}}},
      {"cost",
       {{"t_target_base", c.cost.t_target_base},
        {"t_target_per_token", c.cost.t_target_per_token},
        {"t_draft_base", c.cost.t_draft_base},
        {"t_draft_per_node", c.cost.t_draft_per_node},
        {"t_policy", c.cost.t_policy},
        {"t_tree_mgmt_per_node", c.cost.t_tree_mgmt_per_node},
        {"mode", cost_mode_name(c.cost.mode)}}},
      {"ppo",
       {{"variant", variant_name(c.ppo.variant)},
        {"learning_rate", c.ppo.learning_rate},
        {"n_steps", c.ppo.n_steps},
        {"batch_size", c.ppo.batch_size},
        {"epochs", c.ppo.epochs},
        {"clip_range", c.ppo.clip_range},
        {"gamma", c.ppo.gamma},
        {"gae_lambda", c.ppo.gae_lambda},
        {"ent_coef", c.ppo.ent_coef},
        {"vf_coef", c.ppo.vf_coef},
        {"inference_temperature", c.ppo.inference_temperature},
        {"max_grad_norm", c.ppo.max_grad_norm},
        {"adam_eps", c.ppo.adam_eps},
        {"reward_scale", c.ppo.reward_scale},
        {"normalize_advantage", c.ppo.normalize_advantage}}},
      {"policy", {{"hidden", c.hidden}}},
      {"train", run_json(c.train_run, c.train_corpus)},
      {"eval", run_json(c.eval_run, c.eval_corpus)},
      {"bench",
       {{"baseline_action", c.baseline_action.to_string()},
        {"sweep_intervals", c.sweep_intervals},
        {"threads", c.threads}}},
  };
  return j.dump(2) + "\n";
}

std::uint64_t config_digest(const AppConfig& config) { return fnv1a64(dump_config(config)); }

void apply_seed(AppConfig& config, std::uint64_t seed) {
  config.train_run.policy_seed = seed;
  config.train_run.sample_seed = derive_seed(seed, 1);
  config.eval_run.policy_seed = seed;
  config.eval_run.sample_seed = derive_seed(seed, 2);
}

}  // namespace spectune
