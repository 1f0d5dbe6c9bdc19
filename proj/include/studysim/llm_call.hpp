#pragma once

#include <optional>
#include <type_traits>
#include <string>

#include "studysim/lm.hpp"

namespace studysim {

struct CallSpec {
  std::string model_id;
  double temperature = 0.0;
  std::int64_t seed = 0;
  int max_tokens = 2048;
  std::optional<std::string> system;
};

/// Retries vary the seed so that a cached bad reply is not replayed.
inline std::int64_t attempt_seed(std::int64_t seed, int attempt) { return seed + 7919LL * attempt; }

inline LMRequest make_request(const CallSpec& spec, const std::string& user_prompt, int attempt = 0) {
  LMRequest r;
  r.model_id = spec.model_id;
  if (spec.system) r.messages.push_back({Role::System, *spec.system});
  r.messages.push_back({Role::User, user_prompt});
  r.temperature = spec.temperature;
  r.seed = attempt_seed(spec.seed, attempt);
  r.max_tokens = spec.max_tokens;
  return r;
}

// Asks for a JSON reply up to `attempts` times. `accept` maps the parsed object
// to a value, or nullopt when the content is unusable. After the last attempt
// throws `failure` carrying the last raw reply.
template <typename Accept>
auto ask_json(Gateway& gateway, const CallSpec& spec, const std::string& user_prompt, int attempts,
              ErrorCode failure, const std::string& what, Accept&& accept)
    -> typename std::invoke_result_t<Accept, const json&>::value_type {
  std::string last_raw;
  std::string last_reason = "no attempts made";
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const Completion c = gateway.complete(make_request(spec, user_prompt, attempt));
    last_raw = c.text;
    try {
      const json parsed = extract_json(c.text);
      if (auto value = accept(parsed)) return *value;
      last_reason = "unusable reply";
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseError) throw;
      last_reason = "unparseable reply";
    } catch (const json::exception& e) {
      last_reason = std::string("unexpected reply shape: ") + e.what();
    }
  }
  throw Error(failure, what + ": " + last_reason + " after " + std::to_string(attempts) + " attempts", last_raw);
}

}  // namespace studysim
