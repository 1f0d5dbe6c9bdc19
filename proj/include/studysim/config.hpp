#pragma once

// Run configuration loaded from YAML. Secrets come only from the environment.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "studysim/domain.hpp"
#include "studysim/lm.hpp"

namespace studysim {

struct RoleModel {
  std::string model = "gpt-4o-mini";
  double temperature = 0.0;
};

struct Config {
  std::int64_t seed = 0;
  std::size_t workers = 4;
  int trials = 3;
  int utility_trials = 3;
  double theta = 0.1;
  std::vector<double> theta_sweep{0.0, 0.05, 0.1, 0.15, 0.2};
  std::string export_mode = "subject";
  long context_budget_chars = 400000;
  int llm_attempts = 3;
  std::size_t few_shot_exemplars = 5;
  std::string entropy_base = "e";  // "e" (nats) or "2" (bits)

  Strategy strategy = Strategy::ZeroShot;
  std::optional<std::string> finetuned_model;  // FineTuned passthrough

  RoleModel segmentation{"gpt-4o-mini", 0.0};
  RoleModel annotation{"gpt-4o-mini", 0.0};  // Bloom labels and alignment
  RoleModel question{"gpt-4o-mini", 1.0};
  RoleModel answer{"gpt-4o-mini", 0.0};
  RoleModel learner{"gpt-4o-mini", 0.0};
  RoleModel evaluator{"gpt-4o-mini", 0.0};
  RoleModel judge{"gpt-4o-mini", 0.0};  // salience and EIG
  std::string embedding_model = "text-embedding-3-small";
  std::string finetune_base_model = "gpt-4o-mini-2024-07-18";

  double requests_per_minute = 60.0;
  int max_attempts = 5;
  int backoff_base_ms = 500;
  int top_k_logprobs = kMaxTopLogprobs;
  std::string api_base = "https://api.openai.com/v1";

  std::filesystem::path cache_dir = ".studysim-cache";
  std::filesystem::path out_dir = "runs";

  // Snapshot recorded in the run manifest; filesystem locations are omitted.
  json snapshot() const;
};

// Missing keys keep their defaults. Unknown keys are a ConfigError.
Config load_config(const std::filesystem::path& path);
Config config_from_yaml_text(const std::string& text);
std::string default_config_yaml();

}  // namespace studysim
