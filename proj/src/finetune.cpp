#include "studysim/finetune.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <tuple>

#include <spdlog/spdlog.h>

namespace studysim::finetune {

FilterResult filter_by_utility(const std::vector<UtilityRecord>& records, double theta) {
  if (!std::isfinite(theta)) throw Error(ErrorCode::InvalidInput, "theta must be finite");
  FilterResult out;
  for (const auto& r : records) (r.utility >= theta ? out.accepted : out.rejected).push_back(r.qa_id);
  spdlog::info("theta {}: accepted {}, rejected {}", theta, out.accepted.size(), out.rejected.size());
  return out;
}

json to_json_value(const FineTuneExample& e) {
  return json{{"messages",
               json::array({{{"role", "system"}, {"content", e.system_prompt}},
                            {{"role", "user"}, {"content", e.user_prompt}},
                            {{"role", "assistant"}, {"content", e.question}}})}};
}

std::string render_jsonl(std::vector<FineTuneExample> examples) {
  if (examples.empty()) throw Error(ErrorCode::EmptyDataset, "refusing to emit a fine-tune file with no examples");
  std::sort(examples.begin(), examples.end(), [](const FineTuneExample& a, const FineTuneExample& b) {
    return std::tie(a.chapter_ordinal, a.section_index, a.qa_id) <
           std::tie(b.chapter_ordinal, b.section_index, b.qa_id);
  });
  std::string out;
  for (const auto& e : examples) {
    out += to_json_value(e).dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::vector<FineTuneExample>& examples, const std::filesystem::path& path) {
  const std::string body = render_jsonl(examples);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
  out << body;
}

ExportMode parse_export_mode(std::string_view text) {
  if (text == "subject") return ExportMode::Subject;
  if (text == "cross") return ExportMode::Cross;
  throw Error(ErrorCode::InvalidInput, "unknown export mode '" + std::string(text) + "'");
}

std::string_view to_string(ExportMode mode) { return mode == ExportMode::Subject ? "subject" : "cross"; }

std::map<std::string, std::filesystem::path> emit(const std::vector<FineTuneExample>& examples,
                                                  const std::filesystem::path& dir, const std::string& stem,
                                                  ExportMode mode) {
  std::map<std::string, std::filesystem::path> out;
  if (mode == ExportMode::Cross) {
    const auto path = dir / (stem + "_cross.jsonl");
    write_jsonl(examples, path);
    out["cross"] = path;
    return out;
  }
  if (examples.empty()) throw Error(ErrorCode::EmptyDataset, "refusing to emit a fine-tune file with no examples");
  std::map<std::string, std::vector<FineTuneExample>> by_subject;
  for (const auto& e : examples) by_subject[e.subject].push_back(e);
  for (const auto& [subject, group] : by_subject) {
    std::string label = subject;
    for (auto& ch : label) {
      if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
    }
    const auto path = dir / (stem + "_" + label + ".jsonl");
    write_jsonl(group, path);
    out[subject] = path;
  }
  return out;
}

}  // namespace studysim::finetune
