#include <optional>
#include <string>

#include "studysim/lm.hpp"

namespace studysim {

namespace {

// Body of the first ``` fenced block, language tag removed.
std::optional<std::string_view> fenced_body(std::string_view raw) {
  const auto open = raw.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body_start = raw.find('\n', open + 3);
  if (body_start == std::string_view::npos) return std::nullopt;
  ++body_start;
  const auto close = raw.find("```", body_start);
  if (close == std::string_view::npos) return raw.substr(body_start);
  return raw.substr(body_start, close - body_start);
}

// End offset (exclusive) of the balanced object starting at `start`, honoring strings.
std::optional<std::size_t> balanced_end(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

std::optional<json> first_object(std::string_view text) {
  for (auto pos = text.find('{'); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
    const auto end = balanced_end(text, pos);
    if (!end) continue;
    auto parsed = json::parse(text.substr(pos, *end - pos), nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  }
  return std::nullopt;
}

}  // namespace

json extract_json(std::string_view raw) {
  if (auto body = fenced_body(raw)) {
    if (auto obj = first_object(*body)) return *obj;
  }
  if (auto obj = first_object(raw)) return *obj;
  throw Error(ErrorCode::ParseError, "no balanced JSON object in model output", std::string(raw));
}

}  // namespace studysim
