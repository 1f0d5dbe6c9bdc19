#pragma once

// Textbook chapter ingestion and curation: sectioning, exam extraction and
// capping, Bloom annotation, exam-to-section alignment, splits and statistics.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "studysim/domain.hpp"
#include "studysim/lm.hpp"
#include "studysim/llm_call.hpp"

namespace studysim::corpus {

/// Chapters kept for training / evaluation per subject, in curriculum order.
inline constexpr std::size_t kTrainChapters = 20;
inline constexpr std::size_t kTestChapters = 5;
/// Bloom classification batch size (one LM call per batch).
inline constexpr std::size_t kBloomBatch = 25;

struct RawChapterFile {
  Subject subject;
  int ordinal = 0;
  std::string slug;
  std::string body_markdown;
  std::string exam_markdown;
};

struct FewShotExample {
  std::string input;
  std::string output;
};

FewShotExample default_few_shot();

// Layout: <root>/<subject>/<ordinal>_<slug>/{body.md,exam.md}, plus an optional
// <root>/<subject>/_fewshot/{input.md,output.json}.
struct CorpusLayout {
  std::vector<RawChapterFile> chapters;  // sorted by (subject, ordinal)
  std::map<std::string, FewShotExample> few_shot;  // by subject name
  std::vector<std::string> violations;
};

// Throws LayoutError when the directory is missing or holds no chapters.
CorpusLayout scan_corpus(const std::filesystem::path& root);

struct ChapterRejected {
  std::size_t count = 0;  // well-formed questions found
};

struct ExamExtraction {
  std::vector<ExamQuestion> questions;
  std::optional<ChapterRejected> rejected;
  std::size_t dropped_ill_formed = 0;
  std::size_t truncated = 0;
};

// Removes emphasis, code ticks, images, link targets and HTML tags; collapses whitespace.
std::string strip_markdown(std::string_view text);

// Numbered items at column 0 start questions; indented/continuation lines are
// options folded into the stem; "Answer:" lines set the reference answer;
// headers close the current question.
ExamExtraction extract_exam(std::string_view exam_markdown);

std::vector<Section> segment_sections(Gateway& gateway, const RawChapterFile& raw, const FewShotExample& example,
                                      const CallSpec& spec, int attempts = 3);

std::vector<ExamQuestion> classify_bloom(Gateway& gateway, std::vector<ExamQuestion> questions, const CallSpec& spec,
                                         int attempts = 3);

struct AlignmentWarning {
  std::string question_id;
  int section_index = 0;
};

std::vector<AlignmentWarning> align_exam_to_sections(Gateway& gateway, Chapter& chapter, const CallSpec& spec,
                                                     int attempts = 3);

struct CurationOptions {
  CallSpec segmentation;
  CallSpec annotation;
  int attempts = 3;
};

struct CurationResult {
  std::optional<Chapter> chapter;
  std::optional<ChapterRejected> rejected;
  std::vector<AlignmentWarning> warnings;
  std::size_t dropped_ill_formed = 0;
};

std::string chapter_id(const RawChapterFile& raw);

// extract -> segment -> annotate -> align; rejected chapters skip the LM steps.
CurationResult curate_chapter(Gateway& gateway, const RawChapterFile& raw, const FewShotExample& example,
                              const CurationOptions& options);

// Chapters of one subject: first 20 by ordinal Train, next 5 Test, rest Unassigned.
// Throws SplitError with fewer than 25 chapters.
void split_train_test(std::vector<Chapter>& chapters);

struct CorpusStatsRow {
  Subject subject;
  Split split = Split::Unassigned;
  std::size_t chapter_count = 0;
  double mean_exam_per_chapter = 0.0;
  double pct_with_reference_answer = 0.0;
  double mean_sections_per_chapter = 0.0;
  double section_length_variance = 0.0;  // chars^2, population variance
};

struct CorpusStats {
  std::vector<CorpusStatsRow> rows;

  json to_json() const;
  // Table-shaped CSV: Subject,#C,Split,#E/C,%E w/ answer,#S/C
  std::string to_csv() const;
};

CorpusStats corpus_stats(const std::vector<Chapter>& chapters);

}  // namespace studysim::corpus
