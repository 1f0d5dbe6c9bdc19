#pragma once

// Language-model access: request/response types, the backend interface, the
// scripted mock backend and the caching, retrying gateway that fronts them.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "studysim/error.hpp"

namespace studysim {

using json = nlohmann::json;

/// Upper bound on requested top-k log-probabilities; matches common API limits.
inline constexpr int kMaxTopLogprobs = 20;

enum class Role { System, User, Assistant };
std::string_view to_string(Role role);

struct Message {
  Role role = Role::User;
  std::string content;
};

struct LMRequest {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 0.0;
  std::int64_t seed = 0;
  int max_tokens = 1024;
  bool want_logprobs = false;
  int top_k_logprobs = kMaxTopLogprobs;
};

void validate(const LMRequest& request);
json to_json_value(const LMRequest& request);

// Cache key over every request field.
std::string request_key(const LMRequest& request);

// All message contents joined by blank lines; what mock matchers see.
std::string prompt_text(const LMRequest& request);
std::string prompt_hash(const LMRequest& request);

struct TokenDistribution {
  std::vector<std::string> token_labels;
  std::vector<double> probs;

  // Probabilities in (0,1], equal lengths, total mass <= 1 + 1e-9.
  void validate() const;
  static TokenDistribution uniform(std::size_t k);
};

void to_json(json& j, const TokenDistribution& d);
void from_json(const json& j, TokenDistribution& d);

struct Completion {
  std::string text;
  std::optional<TokenDistribution> first_token_distribution;
};

json to_json_value(const Completion& completion);
Completion completion_from_json(const json& j);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete(const LMRequest& request) = 0;
  virtual std::vector<double> embed(const std::string& model_id, const std::string& text) = 0;
  // Stable identity recorded in run manifests.
  virtual std::string identity() const = 0;
  // Whether the gateway should apply its rate limiter.
  virtual bool throttled() const { return true; }
};

// ---------------------------------------------------------------------------
// Scripted mock backend

struct MockRule {
  std::optional<std::string> contains;
  std::optional<std::string> ends_with;
  std::optional<std::string> prompt_hash;
  bool is_default = false;
  std::string response;
  std::optional<TokenDistribution> logprobs;
  std::optional<std::vector<double>> embedding;
  // Named built-in responder computing the reply from the prompt.
  std::optional<std::string> responder;
  json options = json::object();

  bool matches(const std::string& prompt, const std::string& hash) const;
};

struct MockScript {
  std::vector<MockRule> rules;
  std::vector<std::string> keywords;
  int embedding_dim = 64;

  // A terminal default rule is required.
  void validate() const;
  static MockScript from_json(const json& j);
  static MockScript load(const std::filesystem::path& path);
};

class MockBackend : public Backend {
 public:
  explicit MockBackend(MockScript script);

  Completion complete(const LMRequest& request) override;
  std::vector<double> embed(const std::string& model_id, const std::string& text) override;
  std::string identity() const override { return identity_; }
  bool throttled() const override { return false; }

  std::uint64_t calls() const { return calls_.load(); }
  const MockScript& script() const { return script_; }

  // The next `count` calls throw `code` before consulting the script.
  void inject_failures(int count, ErrorCode code);

 private:
  const MockRule& match(const std::string& prompt, const std::string& hash) const;

  MockScript script_;
  std::string identity_;
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<int> pending_failures_{0};
  std::atomic<ErrorCode> failure_code_{ErrorCode::Retryable};
};

// Deterministic hash-derived unit-scale vector.
std::vector<double> hash_embedding(std::string_view text, int dim);

// ---------------------------------------------------------------------------
// Gateway

struct GatewayOptions {
  int max_attempts = 5;
  std::chrono::milliseconds backoff_base{500};
  double requests_per_minute = 60.0;  // <= 0 disables the limiter
  std::optional<std::filesystem::path> run_cache_file;
  std::optional<std::filesystem::path> global_cache_dir;
};

struct GatewayStats {
  std::uint64_t backend_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;
};

class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  double rate_per_sec_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

class Gateway {
 public:
  explicit Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

  Completion complete(const LMRequest& request);
  std::vector<double> embed(const std::string& model_id, const std::string& text);

  GatewayStats stats() const;
  std::size_t cache_entries() const;
  Backend& backend() { return *backend_; }
  const Backend& backend() const { return *backend_; }

 private:
  template <typename Call>
  json cached_call(const std::string& key, const json& request_json, Call&& call);
  template <typename Call>
  json with_retry(Call&& call);
  std::optional<json> lookup_locked(const std::string& key);
  void store_locked(const std::string& key, const json& request_json, const json& response);
  void load_run_cache();

  std::shared_ptr<Backend> backend_;
  GatewayOptions options_;
  RateLimiter limiter_;

  mutable std::mutex mu_;
  std::map<std::string, json> memory_;
  std::map<std::string, std::shared_future<json>> inflight_;
  std::ofstream run_log_;

  std::atomic<std::uint64_t> backend_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> retries_{0};
};

// ---------------------------------------------------------------------------
// Reply parsing

// Strips code fences, finds the first balanced top-level object and parses it.
// Throws ParseError with the raw text as detail.
json extract_json(std::string_view raw);

}  // namespace studysim
