#include <algorithm>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "studysim/hash.hpp"
#include "studysim/lm.hpp"

namespace studysim {

namespace fs = std::filesystem;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

void validate(const LMRequest& r) {
  if (r.model_id.empty()) throw Error(ErrorCode::InvalidInput, "request has no model id");
  if (r.messages.empty()) throw Error(ErrorCode::InvalidInput, "request has no messages");
  if (r.messages.front().role == Role::Assistant) {
    throw Error(ErrorCode::InvalidInput, "first message must be system or user");
  }
  if (!(r.temperature >= 0.0)) throw Error(ErrorCode::InvalidInput, "temperature must be >= 0");
  if (r.max_tokens <= 0) throw Error(ErrorCode::InvalidInput, "max_tokens must be positive");
  if (r.top_k_logprobs < 1 || r.top_k_logprobs > kMaxTopLogprobs) {
    throw Error(ErrorCode::InvalidInput, "top_k_logprobs must be in [1, 20]");
  }
}

json to_json_value(const LMRequest& r) {
  json messages = json::array();
  for (const auto& m : r.messages) {
    messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  return json{{"model_id", r.model_id},         {"messages", messages},
              {"temperature", r.temperature},   {"seed", r.seed},
              {"max_tokens", r.max_tokens},     {"want_logprobs", r.want_logprobs},
              {"top_k_logprobs", r.top_k_logprobs}};
}

std::string request_key(const LMRequest& r) { return sha256_hex("chat\n" + to_json_value(r).dump()); }

std::string prompt_text(const LMRequest& r) {
  std::string out;
  for (const auto& m : r.messages) {
    if (!out.empty()) out += "\n\n";
    out += m.content;
  }
  return out;
}

std::string prompt_hash(const LMRequest& r) { return sha256_hex(prompt_text(r)); }

void TokenDistribution::validate() const {
  if (token_labels.size() != probs.size()) {
    throw Error(ErrorCode::InvalidDistribution, "labels and probs differ in length");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidDistribution, "probability outside (0,1]");
    total += p;
  }
  if (total > 1.0 + 1e-9) throw Error(ErrorCode::InvalidDistribution, "probability mass exceeds 1");
}

TokenDistribution TokenDistribution::uniform(std::size_t k) {
  TokenDistribution d;
  for (std::size_t i = 0; i < k; ++i) {
    d.token_labels.push_back("t" + std::to_string(i));
    d.probs.push_back(1.0 / static_cast<double>(k));
  }
  return d;
}

void to_json(json& j, const TokenDistribution& d) {
  j = json{{"tokens", d.token_labels}, {"probs", d.probs}};
}

void from_json(const json& j, TokenDistribution& d) {
  j.at("tokens").get_to(d.token_labels);
  j.at("probs").get_to(d.probs);
}

json to_json_value(const Completion& c) {
  json j{{"text", c.text}};
  j["first_token_distribution"] = c.first_token_distribution ? json(*c.first_token_distribution) : json(nullptr);
  return j;
}

Completion completion_from_json(const json& j) {
  Completion c;
  j.at("text").get_to(c.text);
  if (j.contains("first_token_distribution") && !j["first_token_distribution"].is_null()) {
    c.first_token_distribution = j["first_token_distribution"].get<TokenDistribution>();
  }
  return c;
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double requests_per_minute)
    : rate_per_sec_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, requests_per_minute / 6.0)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rate_per_sec_ <= 0.0) return;
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_per_sec_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_sec_);
    }
    std::this_thread::sleep_for(wait);
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

fs::path global_entry_path(const fs::path& dir, const std::string& key) {
  return dir / key.substr(0, 2) / (key + ".json");
}

json cache_record(const std::string& key, const json& request_json, const json& response) {
  return json{{"key", key}, {"request", request_json}, {"response", response}, {"timestamp", utc_timestamp()}};
}

}  // namespace

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)),
      options_(std::move(options)),
      limiter_(backend_ && backend_->throttled() ? options_.requests_per_minute : 0.0) {
  if (!backend_) throw Error(ErrorCode::ConfigError, "gateway requires a backend");
  if (options_.max_attempts < 1) options_.max_attempts = 1;
  load_run_cache();
  if (options_.run_cache_file) {
    if (options_.run_cache_file->has_parent_path()) fs::create_directories(options_.run_cache_file->parent_path());
    run_log_.open(*options_.run_cache_file, std::ios::app);
    if (!run_log_) throw Error(ErrorCode::CacheError, "cannot open " + options_.run_cache_file->string());
  }
  if (options_.global_cache_dir) fs::create_directories(*options_.global_cache_dir);
}

void Gateway::load_run_cache() {
  if (!options_.run_cache_file || !fs::exists(*options_.run_cache_file)) return;
  std::ifstream in(*options_.run_cache_file);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("key") || !rec.contains("response")) {
      throw Error(ErrorCode::CacheError,
                  options_.run_cache_file->string() + ":" + std::to_string(lineno) + " is not a cache record");
    }
    memory_.emplace(rec["key"].get<std::string>(), rec["response"]);
  }
}

std::optional<json> Gateway::lookup_locked(const std::string& key) {
  if (options_.global_cache_dir) {
    const auto path = global_entry_path(*options_.global_cache_dir, key);
    if (fs::exists(path)) {
      std::ifstream in(path);
      auto rec = json::parse(in, nullptr, false);
      if (rec.is_discarded() || !rec.is_object() || rec.value("key", std::string{}) != key ||
          !rec.contains("response")) {
        throw Error(ErrorCode::CacheError, "corrupt cache entry " + path.string());
      }
      memory_[key] = rec["response"];
      return rec["response"];
    }
  }
  if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  return std::nullopt;
}

void Gateway::store_locked(const std::string& key, const json& request_json, const json& response) {
  memory_[key] = response;
  const json record = cache_record(key, request_json, response);
  if (options_.global_cache_dir) {
    const auto path = global_entry_path(*options_.global_cache_dir, key);
    fs::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << record.dump() << '\n';
      if (!out) throw Error(ErrorCode::CacheError, "cannot write " + tmp);
    }
    fs::rename(tmp, path);
  }
  if (run_log_.is_open()) {
    run_log_ << record.dump() << '\n';
    run_log_.flush();
  }
}

template <typename Call>
json Gateway::with_retry(Call&& call) {
  for (int attempt = 1;; ++attempt) {
    try {
      limiter_.acquire();
      ++backend_calls_;
      return call();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Retryable || attempt >= options_.max_attempts) throw;
      ++retries_;
      const auto delay = options_.backoff_base * (1LL << (attempt - 1));
      spdlog::warn("retryable backend failure (attempt {}/{}): {}", attempt, options_.max_attempts, e.what());
      std::this_thread::sleep_for(delay);
    }
  }
}

template <typename Call>
json Gateway::cached_call(const std::string& key, const json& request_json, Call&& call) {
  std::promise<json> promise;
  {
    std::unique_lock lock(mu_);
    if (auto hit = lookup_locked(key)) {
      ++cache_hits_;
      return *hit;
    }
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      auto fut = it->second;
      lock.unlock();
      ++cache_hits_;
      return fut.get();
    }
    inflight_.emplace(key, promise.get_future().share());
  }
  try {
    json response = with_retry(call);
    std::lock_guard lock(mu_);
    store_locked(key, request_json, response);
    promise.set_value(response);
    inflight_.erase(key);
    return response;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mu_);
    inflight_.erase(key);
    throw;
  }
}

Completion Gateway::complete(const LMRequest& request) {
  validate(request);
  const std::string key = request_key(request);
  const json response = cached_call(key, to_json_value(request), [&] {
    Completion c = backend_->complete(request);
    if (c.first_token_distribution) c.first_token_distribution->validate();
    return to_json_value(c);
  });
  return completion_from_json(response);
}

std::vector<double> Gateway::embed(const std::string& model_id, const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::InvalidInput, "cannot embed empty text");
  const json request_json{{"kind", "embedding"}, {"model_id", model_id}, {"input", text}};
  const std::string key = sha256_hex("embed\n" + request_json.dump());
  const json response = cached_call(key, request_json, [&] {
    return json{{"embedding", backend_->embed(model_id, text)}};
  });
  return response.at("embedding").get<std::vector<double>>();
}

GatewayStats Gateway::stats() const {
  return {backend_calls_.load(), cache_hits_.load(), retries_.load()};
}

std::size_t Gateway::cache_entries() const {
  std::lock_guard lock(mu_);
  return memory_.size();
}

}  // namespace studysim
