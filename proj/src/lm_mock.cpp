#include <cmath>
#include <fstream>

#include "studysim/hash.hpp"
#include "studysim/keyword_world.hpp"
#include "studysim/lm.hpp"

namespace studysim {

bool MockRule::matches(const std::string& prompt, const std::string& hash) const {
  if (is_default) return true;
  if (!contains && !ends_with && !prompt_hash) return false;
  if (contains && prompt.find(*contains) == std::string::npos) return false;
  if (ends_with && (prompt.size() < ends_with->size() ||
                    prompt.compare(prompt.size() - ends_with->size(), ends_with->size(), *ends_with) != 0)) {
    return false;
  }
  if (prompt_hash && *prompt_hash != hash) return false;
  return true;
}

void MockScript::validate() const {
  if (rules.empty() || !rules.back().is_default) {
    throw Error(ErrorCode::ConfigError, "mock script must end with a default rule");
  }
  if (embedding_dim <= 0) throw Error(ErrorCode::ConfigError, "embedding_dim must be positive");
  for (const auto& r : rules) {
    if (r.logprobs) r.logprobs->validate();
  }
}

MockScript MockScript::from_json(const json& j) {
  MockScript s;
  s.keywords = j.value("keywords", std::vector<std::string>{});
  s.embedding_dim = j.value("embedding_dim", 64);
  for (const auto& r : j.at("rules")) {
    MockRule rule;
    if (r.contains("contains")) rule.contains = r["contains"].get<std::string>();
    if (r.contains("ends_with")) rule.ends_with = r["ends_with"].get<std::string>();
    if (r.contains("hash")) rule.prompt_hash = r["hash"].get<std::string>();
    rule.is_default = r.value("default", false);
    rule.response = r.value("response", std::string{});
    if (r.contains("logprobs")) rule.logprobs = r["logprobs"].get<TokenDistribution>();
    if (r.contains("embedding")) rule.embedding = r["embedding"].get<std::vector<double>>();
    if (r.contains("responder")) rule.responder = r["responder"].get<std::string>();
    rule.options = r.value("options", json::object());
    s.rules.push_back(std::move(rule));
  }
  s.validate();
  return s;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open mock script " + path.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ConfigError, "mock script is not valid JSON: " + path.string());
  return from_json(j);
}

namespace {

json script_json(const MockScript& s) {
  json rules = json::array();
  for (const auto& r : s.rules) {
    json jr{{"default", r.is_default}, {"response", r.response}, {"options", r.options}};
    if (r.contains) jr["contains"] = *r.contains;
    if (r.ends_with) jr["ends_with"] = *r.ends_with;
    if (r.prompt_hash) jr["hash"] = *r.prompt_hash;
    if (r.logprobs) jr["logprobs"] = *r.logprobs;
    if (r.embedding) jr["embedding"] = *r.embedding;
    if (r.responder) jr["responder"] = *r.responder;
    rules.push_back(std::move(jr));
  }
  return json{{"keywords", s.keywords}, {"embedding_dim", s.embedding_dim}, {"rules", rules}};
}

}  // namespace

std::vector<double> hash_embedding(std::string_view text, int dim) {
  const std::string digest = sha256_hex(text);
  std::uint64_t state = std::stoull(digest.substr(0, 16), nullptr, 16);
  std::vector<double> v(static_cast<std::size_t>(dim));
  for (auto& x : v) x = 2.0 * unit_interval(splitmix64(state)) - 1.0;
  return v;
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {
  script_.validate();
  identity_ = "mock:" + short_hash(script_json(script_).dump());
}

void MockBackend::inject_failures(int count, ErrorCode code) {
  failure_code_ = code;
  pending_failures_ = count;
}

const MockRule& MockBackend::match(const std::string& prompt, const std::string& hash) const {
  for (const auto& rule : script_.rules) {
    if (rule.matches(prompt, hash)) return rule;
  }
  return script_.rules.back();
}

Completion MockBackend::complete(const LMRequest& request) {
  ++calls_;
  if (pending_failures_.load() > 0 && pending_failures_.fetch_sub(1) > 0) {
    throw Error(failure_code_.load(), "injected mock failure");
  }
  const std::string prompt = prompt_text(request);
  const MockRule& rule = match(prompt, sha256_hex(prompt));
  Completion c;
  c.text = rule.responder ? mock::respond(rule, script_, prompt) : rule.response;
  if (request.want_logprobs && rule.logprobs) {
    TokenDistribution d = *rule.logprobs;
    const auto k = static_cast<std::size_t>(request.top_k_logprobs);
    if (d.probs.size() > k) {
      d.probs.resize(k);
      d.token_labels.resize(k);
    }
    c.first_token_distribution = std::move(d);
  }
  return c;
}

std::vector<double> MockBackend::embed(const std::string& /*model_id*/, const std::string& text) {
  ++calls_;
  if (pending_failures_.load() > 0 && pending_failures_.fetch_sub(1) > 0) {
    throw Error(failure_code_.load(), "injected mock failure");
  }
  const MockRule& rule = match(text, sha256_hex(text));
  if (rule.embedding) return *rule.embedding;
  return hash_embedding(text, script_.embedding_dim);
}

}  // namespace studysim
