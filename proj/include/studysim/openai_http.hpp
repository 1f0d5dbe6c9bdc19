#pragma once

// OpenAI-compatible HTTP backend (/chat/completions, /embeddings) and the
// fine-tuning upload calls (/files, /fine_tuning/jobs).

#include <chrono>
#include <filesystem>
#include <string>

#include "studysim/lm.hpp"

namespace studysim {

struct EndpointConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  std::chrono::seconds timeout{120};

  // STUDYSIM_API_BASE / STUDYSIM_API_KEY, falling back to OPENAI_API_KEY.
  static EndpointConfig from_env();
};

class OpenAIBackend : public Backend {
 public:
  explicit OpenAIBackend(EndpointConfig endpoint);

  Completion complete(const LMRequest& request) override;
  std::vector<double> embed(const std::string& model_id, const std::string& text) override;
  std::string identity() const override;

 private:
  EndpointConfig endpoint_;
};

// Builds the /chat/completions body for a request.
json chat_completion_body(const LMRequest& request);
// Parses a /chat/completions response; throws Fatal on malformed bodies.
Completion parse_chat_completion(const json& body, bool want_logprobs);

// Uploads `file` with purpose fine-tune, creates a job on `base_model`, returns
// the job id without waiting for completion. Missing key -> Fatal.
std::string submit_finetune(const std::filesystem::path& file, const std::string& base_model,
                            const EndpointConfig& endpoint);

}  // namespace studysim
