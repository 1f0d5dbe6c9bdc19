#pragma once

// Shared vocabulary: chapters, exams, QA pairs, attempts and utility records.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace studysim {

using json = nlohmann::json;

/// Absolute tolerance for score-identity checks.
inline constexpr double kScoreTolerance = 1e-12;

/// Curated exams hold between these many questions (inclusive).
inline constexpr std::size_t kMinExamQuestions = 10;
inline constexpr std::size_t kMaxExamQuestions = 25;

enum class SubjectKind { Microbiology, Chemistry, Economics, Sociology, USHistory, Other };

struct Subject {
  SubjectKind kind = SubjectKind::Other;
  std::string other_name;  // only meaningful for Other

  std::string name() const;
  static Subject parse(std::string_view text);
  friend bool operator==(const Subject&, const Subject&) = default;
  friend auto operator<=>(const Subject& a, const Subject& b) { return a.name() <=> b.name(); }
};

enum class Split { Train, Test, Unassigned };
std::string_view to_string(Split split);
Split parse_split(std::string_view text);

enum class Bloom { Remembering, Understanding, Applying, Analyzing, Evaluating, Creating };
inline constexpr Bloom kAllBloom[] = {Bloom::Remembering, Bloom::Understanding, Bloom::Applying,
                                      Bloom::Analyzing,   Bloom::Evaluating,    Bloom::Creating};
std::string_view to_string(Bloom level);
// Case-insensitive; returns nullopt for anything outside the six categories.
std::optional<Bloom> parse_bloom(std::string_view text);

struct Section {
  int index = 0;
  std::string content;
  friend bool operator==(const Section&, const Section&) = default;
};

struct ExamQuestion {
  std::string id;
  std::string text;
  std::optional<std::string> reference_answer;
  std::optional<Bloom> bloom;
  std::vector<int> aligned_sections;
  friend bool operator==(const ExamQuestion&, const ExamQuestion&) = default;
};

struct Exam {
  std::vector<ExamQuestion> questions;
  friend bool operator==(const Exam&, const Exam&) = default;
};

struct Chapter {
  std::string id;
  Subject subject;
  int ordinal = 0;  // position in curriculum order
  std::string title;
  std::vector<Section> sections;
  Exam exam;
  Split split = Split::Unassigned;
  bool curated = false;

  const Section* section(int index) const;
  // Sections joined in order; the document handed to the evaluator.
  std::string full_text() const;
  friend bool operator==(const Chapter&, const Chapter&) = default;
};

enum class Strategy { ZeroShot, FewShot, CoT, BloomBased, FineTuned };
std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view text);

struct Provenance {
  Strategy strategy = Strategy::ZeroShot;
  std::string model_id;
  int trial = 0;
  std::int64_t seed = 0;
  std::optional<Bloom> bloom_level;  // BloomBased only
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct QAPair {
  std::string id;
  std::string question;
  std::string answer;
  int anchor_section = 0;
  std::string chapter_id;
  Provenance generator;
  friend bool operator==(const QAPair&, const QAPair&) = default;
};

// Content id: question, answer, anchor, chapter, strategy and trial.
std::string make_qa_id(std::string_view chapter_id, std::string_view question, std::string_view answer,
                       int anchor_section, const Provenance& provenance);

struct ExamAttempt {
  std::string chapter_id;
  std::string study_set_id;
  int trial = 0;
  std::int64_t seed = 0;
  std::map<std::string, std::string> responses;
  std::map<std::string, double> per_question_scores;
  double exam_score = 0.0;
  std::vector<std::string> notes;  // clamp log etc.
};

struct UtilityRecord {
  std::string qa_id;
  double s_empty = 0.0;
  double s_full = 0.0;
  double s_single = 0.0;
  double s_all_but_one = 0.0;
  double utility = 0.0;
};

// Averaged single-one and all-but-one gains.
double averaged_gain(double s_empty, double s_full, double s_single, double s_all_but_one);
UtilityRecord make_utility_record(std::string qa_id, double s_empty, double s_full, double s_single,
                                  double s_all_but_one);
bool is_consistent(const UtilityRecord& record);

/// Arithmetic mean of per-question scores. Throws EmptyExam / InvalidScore.
double exam_score(const std::map<std::string, double>& per_question);

enum class ViolationKind {
  NoSections,
  NonContiguousSections,
  DuplicateSectionIndex,
  EmptySectionContent,
  ExamTooSmall,
  ExamTooLarge,
  DuplicateQuestionId,
  EmptyQuestionText,
  AlignmentOutOfRange,
};
std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string field;
  std::string detail;
  friend bool operator==(const Violation&, const Violation&) = default;
};

std::vector<Violation> validate_chapter(const Chapter& chapter);

void to_json(json& j, const Subject& s);
void from_json(const json& j, Subject& s);
void to_json(json& j, const Section& s);
void from_json(const json& j, Section& s);
void to_json(json& j, const ExamQuestion& q);
void from_json(const json& j, ExamQuestion& q);
void to_json(json& j, const Exam& e);
void from_json(const json& j, Exam& e);
void to_json(json& j, const Chapter& c);
void from_json(const json& j, Chapter& c);
void to_json(json& j, const Provenance& p);
void from_json(const json& j, Provenance& p);
void to_json(json& j, const QAPair& qa);
void from_json(const json& j, QAPair& qa);
void to_json(json& j, const ExamAttempt& a);
void from_json(const json& j, ExamAttempt& a);
void to_json(json& j, const UtilityRecord& r);
void from_json(const json& j, UtilityRecord& r);

}  // namespace studysim
