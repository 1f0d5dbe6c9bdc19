#pragma once

// Built-in responders for the mock backend. Together they form a small
// deterministic "keyword world": each exam question is about one keyword, and
// the learner answers it iff some studied question mentions that keyword.
// This makes exam scores (and therefore utilities) exactly computable.

#include <string>
#include <string_view>
#include <vector>

#include "studysim/lm.hpp"

namespace studysim::mock {

/// Prefix of every learner answer produced from studied material.
inline constexpr std::string_view kStudiedMarker = "From the materials:";

// First configured keyword (in list order) that occurs in `text`; empty if none.
std::string first_keyword(std::string_view text, const std::vector<std::string>& keywords);

// Keyword whose last occurrence in `text` is furthest right; empty if none.
std::string last_keyword(std::string_view text, const std::vector<std::string>& keywords);

// Reply for a named responder. Throws ConfigError for unknown names.
//   keyword-learner, keyword-evaluator, keyword-question, keyword-paragraph,
//   keyword-answerer, keyword-aligner, segment-headers, bloom-constant
std::string respond(const MockRule& rule, const MockScript& script, const std::string& prompt);

}  // namespace studysim::mock
