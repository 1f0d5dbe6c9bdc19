#include "studysim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace studysim {

namespace {

json role_json(const RoleModel& r) { return json{{"model", r.model}, {"temperature", r.temperature}}; }

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw Error(ErrorCode::ConfigError, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (const auto v = node[key]) {
    try {
      out = v.as<T>();
    } catch (const YAML::Exception& e) {
      throw Error(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

void read_role(const YAML::Node& models, const YAML::Node& temps, const char* key, RoleModel& role) {
  if (models) read(models, key, role.model);
  if (temps) read(temps, key, role.temperature);
}

}  // namespace

json Config::snapshot() const {
  return json{
      {"seed", seed},
      {"workers", workers},
      {"trials", trials},
      {"utility_trials", utility_trials},
      {"theta", theta},
      {"theta_sweep", theta_sweep},
      {"export_mode", export_mode},
      {"context_budget_chars", context_budget_chars},
      {"llm_attempts", llm_attempts},
      {"few_shot_exemplars", few_shot_exemplars},
      {"entropy_base", entropy_base},
      {"strategy", std::string(to_string(strategy))},
      {"finetuned_model", finetuned_model ? json(*finetuned_model) : json(nullptr)},
      {"models",
       {{"segmentation", role_json(segmentation)},
        {"annotation", role_json(annotation)},
        {"question", role_json(question)},
        {"answer", role_json(answer)},
        {"learner", role_json(learner)},
        {"evaluator", role_json(evaluator)},
        {"judge", role_json(judge)},
        {"embedding", embedding_model},
        {"finetune_base", finetune_base_model}}},
      {"gateway",
       {{"requests_per_minute", requests_per_minute},
        {"max_attempts", max_attempts},
        {"backoff_base_ms", backoff_base_ms},
        {"top_k_logprobs", top_k_logprobs},
        {"api_base", api_base}}},
  };
}

Config config_from_yaml_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("invalid YAML: ") + e.what());
  }
  Config c;
  if (!root || root.IsNull()) return c;
  if (!root.IsMap()) throw Error(ErrorCode::ConfigError, "config root must be a mapping");
  check_keys(root,
             {"seed", "workers", "trials", "utility_trials", "theta", "theta_sweep", "export_mode",
              "context_budget_chars", "llm_attempts", "few_shot_exemplars", "entropy_base", "strategy",
              "finetuned_model", "models", "temperatures", "gateway", "cache_dir", "out_dir"},
             "config");
  read(root, "seed", c.seed);
  read(root, "workers", c.workers);
  read(root, "trials", c.trials);
  read(root, "utility_trials", c.utility_trials);
  read(root, "theta", c.theta);
  read(root, "theta_sweep", c.theta_sweep);
  read(root, "export_mode", c.export_mode);
  read(root, "context_budget_chars", c.context_budget_chars);
  read(root, "llm_attempts", c.llm_attempts);
  read(root, "few_shot_exemplars", c.few_shot_exemplars);
  read(root, "entropy_base", c.entropy_base);
  if (const auto s = root["strategy"]) c.strategy = parse_strategy(s.as<std::string>());
  if (const auto m = root["finetuned_model"]; m && !m.IsNull()) c.finetuned_model = m.as<std::string>();

  const auto models = root["models"];
  const auto temps = root["temperatures"];
  const std::set<std::string> roles{"segmentation", "annotation", "question", "answer",
                                    "learner",      "evaluator",  "judge"};
  if (models) {
    auto allowed = roles;
    allowed.insert({"embedding", "finetune_base"});
    check_keys(models, allowed, "models");
    read(models, "embedding", c.embedding_model);
    read(models, "finetune_base", c.finetune_base_model);
  }
  if (temps) check_keys(temps, roles, "temperatures");
  read_role(models, temps, "segmentation", c.segmentation);
  read_role(models, temps, "annotation", c.annotation);
  read_role(models, temps, "question", c.question);
  read_role(models, temps, "answer", c.answer);
  read_role(models, temps, "learner", c.learner);
  read_role(models, temps, "evaluator", c.evaluator);
  read_role(models, temps, "judge", c.judge);

  if (const auto g = root["gateway"]) {
    check_keys(g, {"requests_per_minute", "max_attempts", "backoff_base_ms", "top_k_logprobs", "api_base"},
               "gateway");
    read(g, "requests_per_minute", c.requests_per_minute);
    read(g, "max_attempts", c.max_attempts);
    read(g, "backoff_base_ms", c.backoff_base_ms);
    read(g, "top_k_logprobs", c.top_k_logprobs);
    read(g, "api_base", c.api_base);
  }
  if (const auto v = root["cache_dir"]) c.cache_dir = v.as<std::string>();
  if (const auto v = root["out_dir"]) c.out_dir = v.as<std::string>();

  if (c.trials < 1 || c.utility_trials < 1) throw Error(ErrorCode::ConfigError, "trial counts must be >= 1");
  if (c.workers < 1) throw Error(ErrorCode::ConfigError, "workers must be >= 1");
  if (c.top_k_logprobs < 1 || c.top_k_logprobs > kMaxTopLogprobs) {
    throw Error(ErrorCode::ConfigError, "top_k_logprobs must be in [1, 20]");
  }
  if (c.entropy_base != "e" && c.entropy_base != "2") {
    throw Error(ErrorCode::ConfigError, "entropy_base must be 'e' or '2'");
  }
  if (c.export_mode != "subject" && c.export_mode != "cross") {
    throw Error(ErrorCode::ConfigError, "export_mode must be 'subject' or 'cross'");
  }
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_yaml_text(buf.str());
}

std::string default_config_yaml() {
  const Config c;
  YAML::Emitter out;
  out.SetDoublePrecision(15);
  const json snap = c.snapshot();
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "workers" << YAML::Value << c.workers;
  out << YAML::Key << "trials" << YAML::Value << c.trials;
  out << YAML::Key << "utility_trials" << YAML::Value << c.utility_trials;
  out << YAML::Key << "theta" << YAML::Value << c.theta;
  out << YAML::Key << "theta_sweep" << YAML::Value << YAML::Flow << c.theta_sweep;
  out << YAML::Key << "export_mode" << YAML::Value << c.export_mode;
  out << YAML::Key << "context_budget_chars" << YAML::Value << c.context_budget_chars;
  out << YAML::Key << "llm_attempts" << YAML::Value << c.llm_attempts;
  out << YAML::Key << "few_shot_exemplars" << YAML::Value << c.few_shot_exemplars;
  out << YAML::Key << "entropy_base" << YAML::Value << c.entropy_base;
  out << YAML::Key << "strategy" << YAML::Value << std::string(to_string(c.strategy));
  out << YAML::Key << "models" << YAML::Value << YAML::BeginMap;
  for (const auto& [role, v] : snap["models"].items()) {
    out << YAML::Key << role << YAML::Value << (v.is_object() ? v["model"].get<std::string>() : v.get<std::string>());
  }
  out << YAML::EndMap;
  out << YAML::Key << "temperatures" << YAML::Value << YAML::BeginMap;
  for (const auto& [role, v] : snap["models"].items()) {
    if (v.is_object()) out << YAML::Key << role << YAML::Value << v["temperature"].get<double>();
  }
  out << YAML::EndMap;
  out << YAML::Key << "gateway" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "requests_per_minute" << YAML::Value << c.requests_per_minute;
  out << YAML::Key << "max_attempts" << YAML::Value << c.max_attempts;
  out << YAML::Key << "backoff_base_ms" << YAML::Value << c.backoff_base_ms;
  out << YAML::Key << "top_k_logprobs" << YAML::Value << c.top_k_logprobs;
  out << YAML::Key << "api_base" << YAML::Value << c.api_base;
  out << YAML::EndMap;
  out << YAML::Key << "cache_dir" << YAML::Value << c.cache_dir.string();
  out << YAML::Key << "out_dir" << YAML::Value << c.out_dir.string();
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace studysim
