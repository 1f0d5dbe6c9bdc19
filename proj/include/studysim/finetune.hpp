#pragma once

// Utility-threshold filtering and chat-format fine-tune dataset emission.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "studysim/domain.hpp"
#include "studysim/lm.hpp"

namespace studysim::finetune {

inline constexpr double kDefaultTheta = 0.1;

struct FilterResult {
  std::vector<std::string> accepted;  // qa ids, input order
  std::vector<std::string> rejected;
};

// Accepts u >= theta. Throws InvalidInput for a non-finite theta.
FilterResult filter_by_utility(const std::vector<UtilityRecord>& records, double theta);

struct FineTuneExample {
  std::string qa_id;
  std::string subject;
  int chapter_ordinal = 0;
  int section_index = 0;
  std::string system_prompt;
  std::string user_prompt;  // the exact prompt that produced the question
  std::string question;
};

json to_json_value(const FineTuneExample& example);

// One {"messages":[...]} per line ordered by (ordinal, section, qa_id).
// Throws EmptyDataset for no examples.
std::string render_jsonl(std::vector<FineTuneExample> examples);
void write_jsonl(const std::vector<FineTuneExample>& examples, const std::filesystem::path& path);

enum class ExportMode { Subject, Cross };
ExportMode parse_export_mode(std::string_view text);
std::string_view to_string(ExportMode mode);

// Subject mode writes <stem>_<subject>.jsonl per subject; cross mode writes
// <stem>_cross.jsonl. Returns label -> path.
std::map<std::string, std::filesystem::path> emit(const std::vector<FineTuneExample>& examples,
                                                  const std::filesystem::path& dir, const std::string& stem,
                                                  ExportMode mode);

}  // namespace studysim::finetune
