#pragma once

// Text renderings of exam-score and correlation tables.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "studysim/lm.hpp"

namespace studysim::report {

// "0.76 (+0.30)": two decimals, signed gain over the baseline.
std::string format_score_gain(double score, double baseline);

struct ScoreRow {
  std::string label;                      // e.g. the strategy
  std::map<std::string, double> by_subject;
};

// Markdown table: a "No-study" row, then one "score (+gain)" row per entry.
std::string render_score_table(const std::map<std::string, double>& baseline_by_subject,
                               const std::vector<ScoreRow>& rows);

struct CorrelationRow {
  std::string metric1;
  std::string metric2;
  std::optional<double> rho;
  std::optional<double> p_value;
  std::size_t n = 0;
  std::string note;
};

json to_json_value(const CorrelationRow& row);
CorrelationRow correlation_from_json(const json& j);
std::string render_correlation_table(const std::vector<CorrelationRow>& rows);

}  // namespace studysim::report
