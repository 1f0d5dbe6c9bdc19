#include "studysim/report.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace studysim::report {

namespace {

std::string fixed(double v, int digits, bool sign = false) {
  // Avoid "-0.00" for values that round to zero.
  const double scale = std::pow(10.0, digits);
  if (std::round(std::abs(v) * scale) == 0.0) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, sign ? "%+.*f" : "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_score_gain(double score, double baseline) {
  return fixed(score, 2) + " (" + fixed(score - baseline, 2, true) + ")";
}

std::string render_score_table(const std::map<std::string, double>& baseline_by_subject,
                               const std::vector<ScoreRow>& rows) {
  std::set<std::string> subjects;
  for (const auto& [s, v] : baseline_by_subject) subjects.insert(s);
  for (const auto& r : rows) {
    for (const auto& [s, v] : r.by_subject) subjects.insert(s);
  }
  std::string out = "| Method |";
  std::string rule = "|---|";
  for (const auto& s : subjects) {
    out += " " + s + " |";
    rule += "---|";
  }
  out += "\n" + rule + "\n| No-study |";
  for (const auto& s : subjects) {
    const auto it = baseline_by_subject.find(s);
    out += " " + (it == baseline_by_subject.end() ? std::string("-") : fixed(it->second, 2)) + " |";
  }
  out += "\n";
  for (const auto& r : rows) {
    out += "| " + r.label + " |";
    for (const auto& s : subjects) {
      const auto it = r.by_subject.find(s);
      const auto base = baseline_by_subject.find(s);
      if (it == r.by_subject.end()) out += " - |";
      else if (base == baseline_by_subject.end()) out += " " + fixed(it->second, 2) + " |";
      else out += " " + format_score_gain(it->second, base->second) + " |";
    }
    out += "\n";
  }
  return out;
}

json to_json_value(const CorrelationRow& r) {
  json j{{"metric1", r.metric1}, {"metric2", r.metric2}, {"n", r.n}};
  j["rho"] = r.rho ? json(*r.rho) : json(nullptr);
  j["p"] = r.p_value ? json(*r.p_value) : json(nullptr);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

CorrelationRow correlation_from_json(const json& j) {
  CorrelationRow r;
  r.metric1 = j.at("metric1").get<std::string>();
  r.metric2 = j.at("metric2").get<std::string>();
  r.n = j.value("n", std::size_t{0});
  if (j.contains("rho") && !j["rho"].is_null()) r.rho = j["rho"].get<double>();
  if (j.contains("p") && !j["p"].is_null()) r.p_value = j["p"].get<double>();
  r.note = j.value("note", std::string{});
  return r;
}

std::string render_correlation_table(const std::vector<CorrelationRow>& rows) {
  std::string out = "| Metric 1 | Metric 2 | rho | p | n |\n|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out += "| " + r.metric1 + " | " + r.metric2 + " | " + (r.rho ? fixed(*r.rho, 3) : std::string("n/a")) + " | " +
           (r.p_value ? fixed(*r.p_value, 3) : std::string("n/a")) + " | " + std::to_string(r.n) + " |\n";
  }
  return out;
}

}  // namespace studysim::report
