#include "studysim/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "studysim/error.hpp"
#include "studysim/hash.hpp"

namespace studysim {

namespace {

std::string normalize_token(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

}  // namespace

std::string Subject::name() const {
  switch (kind) {
    case SubjectKind::Microbiology: return "Microbiology";
    case SubjectKind::Chemistry: return "Chemistry";
    case SubjectKind::Economics: return "Economics";
    case SubjectKind::Sociology: return "Sociology";
    case SubjectKind::USHistory: return "USHistory";
    case SubjectKind::Other: return other_name;
  }
  return other_name;
}

Subject Subject::parse(std::string_view text) {
  const std::string key = normalize_token(text);
  if (key == "microbiology") return {SubjectKind::Microbiology, {}};
  if (key == "chemistry") return {SubjectKind::Chemistry, {}};
  if (key == "economics") return {SubjectKind::Economics, {}};
  if (key == "sociology") return {SubjectKind::Sociology, {}};
  if (key == "ushistory") return {SubjectKind::USHistory, {}};
  return {SubjectKind::Other, std::string(text)};
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "Train";
    case Split::Test: return "Test";
    case Split::Unassigned: return "Unassigned";
  }
  return "Unassigned";
}

Split parse_split(std::string_view text) {
  const std::string key = normalize_token(text);
  if (key == "train") return Split::Train;
  if (key == "test") return Split::Test;
  if (key == "unassigned") return Split::Unassigned;
  throw Error(ErrorCode::InvalidInput, "unknown split '" + std::string(text) + "'");
}

std::string_view to_string(Bloom level) {
  switch (level) {
    case Bloom::Remembering: return "Remembering";
    case Bloom::Understanding: return "Understanding";
    case Bloom::Applying: return "Applying";
    case Bloom::Analyzing: return "Analyzing";
    case Bloom::Evaluating: return "Evaluating";
    case Bloom::Creating: return "Creating";
  }
  return "Remembering";
}

std::optional<Bloom> parse_bloom(std::string_view text) {
  const std::string key = normalize_token(text);
  for (Bloom b : kAllBloom) {
    if (normalize_token(to_string(b)) == key) return b;
  }
  return std::nullopt;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::ZeroShot: return "zero-shot";
    case Strategy::FewShot: return "few-shot";
    case Strategy::CoT: return "cot";
    case Strategy::BloomBased: return "bloom";
    case Strategy::FineTuned: return "fine-tuned";
  }
  return "zero-shot";
}

Strategy parse_strategy(std::string_view text) {
  const std::string key = normalize_token(text);
  if (key == "zeroshot") return Strategy::ZeroShot;
  if (key == "fewshot") return Strategy::FewShot;
  if (key == "cot" || key == "chainofthought") return Strategy::CoT;
  if (key == "bloom" || key == "bloombased") return Strategy::BloomBased;
  if (key == "finetuned") return Strategy::FineTuned;
  throw Error(ErrorCode::InvalidInput, "unknown strategy '" + std::string(text) + "'");
}

const Section* Chapter::section(int index) const {
  for (const auto& s : sections) {
    if (s.index == index) return &s;
  }
  return nullptr;
}

std::string Chapter::full_text() const {
  std::string out;
  for (const auto& s : sections) {
    if (!out.empty()) out += "\n\n";
    out += s.content;
  }
  return out;
}

std::string make_qa_id(std::string_view chapter_id, std::string_view question, std::string_view answer,
                       int anchor_section, const Provenance& provenance) {
  const std::string anchor = std::to_string(anchor_section);
  const std::string trial = std::to_string(provenance.trial);
  return "qa-" + hash_parts({chapter_id, question, answer, anchor, to_string(provenance.strategy),
                             provenance.model_id, trial});
}

double averaged_gain(double s_empty, double s_full, double s_single, double s_all_but_one) {
  return ((s_single - s_empty) + (s_full - s_all_but_one)) / 2.0;
}

UtilityRecord make_utility_record(std::string qa_id, double s_empty, double s_full, double s_single,
                                  double s_all_but_one) {
  UtilityRecord r;
  r.qa_id = std::move(qa_id);
  r.s_empty = s_empty;
  r.s_full = s_full;
  r.s_single = s_single;
  r.s_all_but_one = s_all_but_one;
  r.utility = averaged_gain(s_empty, s_full, s_single, s_all_but_one);
  return r;
}

bool is_consistent(const UtilityRecord& r) {
  const double expected = averaged_gain(r.s_empty, r.s_full, r.s_single, r.s_all_but_one);
  return std::abs(expected - r.utility) <= kScoreTolerance && r.utility >= -1.0 - kScoreTolerance &&
         r.utility <= 1.0 + kScoreTolerance;
}

double exam_score(const std::map<std::string, double>& per_question) {
  if (per_question.empty()) throw Error(ErrorCode::EmptyExam, "no per-question scores");
  double sum = 0.0;
  for (const auto& [id, score] : per_question) {
    if (!(score >= 0.0 && score <= 1.0)) {
      throw Error(ErrorCode::InvalidScore, "score for '" + id + "' outside [0,1]: " + std::to_string(score));
    }
    sum += score;
  }
  return sum / static_cast<double>(per_question.size());
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::NoSections: return "NoSections";
    case ViolationKind::NonContiguousSections: return "NonContiguousSections";
    case ViolationKind::DuplicateSectionIndex: return "DuplicateSectionIndex";
    case ViolationKind::EmptySectionContent: return "EmptySectionContent";
    case ViolationKind::ExamTooSmall: return "ExamTooSmall";
    case ViolationKind::ExamTooLarge: return "ExamTooLarge";
    case ViolationKind::DuplicateQuestionId: return "DuplicateQuestionId";
    case ViolationKind::EmptyQuestionText: return "EmptyQuestionText";
    case ViolationKind::AlignmentOutOfRange: return "AlignmentOutOfRange";
  }
  return "Unknown";
}

std::vector<Violation> validate_chapter(const Chapter& chapter) {
  std::vector<Violation> out;
  if (chapter.sections.empty()) {
    out.push_back({ViolationKind::NoSections, "sections", "chapter has no sections"});
  }
  std::set<int> indices;
  for (const auto& s : chapter.sections) {
    if (!indices.insert(s.index).second) {
      out.push_back({ViolationKind::DuplicateSectionIndex, "sections.index", std::to_string(s.index)});
    }
    if (s.content.empty()) {
      out.push_back({ViolationKind::EmptySectionContent, "sections.content", std::to_string(s.index)});
    }
  }
  if (!indices.empty()) {
    int expected = 1;
    for (int idx : indices) {
      if (idx != expected) {
        out.push_back({ViolationKind::NonContiguousSections, "sections.index",
                       "expected " + std::to_string(expected) + ", found " + std::to_string(idx)});
        break;
      }
      ++expected;
    }
  }
  const auto n = chapter.exam.questions.size();
  if (chapter.curated && n < kMinExamQuestions) {
    out.push_back({ViolationKind::ExamTooSmall, "exam.questions", std::to_string(n)});
  }
  if (chapter.curated && n > kMaxExamQuestions) {
    out.push_back({ViolationKind::ExamTooLarge, "exam.questions", std::to_string(n)});
  }
  std::set<std::string> ids;
  for (const auto& q : chapter.exam.questions) {
    if (!ids.insert(q.id).second) {
      out.push_back({ViolationKind::DuplicateQuestionId, "exam.questions.id", q.id});
    }
    if (q.text.empty()) out.push_back({ViolationKind::EmptyQuestionText, "exam.questions.text", q.id});
    for (int a : q.aligned_sections) {
      if (!indices.contains(a)) {
        out.push_back({ViolationKind::AlignmentOutOfRange, "exam.questions.aligned_sections",
                       q.id + ":" + std::to_string(a)});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const Subject& s) { j = s.name(); }
void from_json(const json& j, Subject& s) { s = Subject::parse(j.get<std::string>()); }

void to_json(json& j, const Section& s) { j = json{{"index", s.index}, {"content", s.content}}; }
void from_json(const json& j, Section& s) {
  j.at("index").get_to(s.index);
  j.at("content").get_to(s.content);
}

void to_json(json& j, const ExamQuestion& q) {
  j = json{{"id", q.id}, {"text", q.text}, {"aligned_sections", q.aligned_sections}};
  j["reference_answer"] = q.reference_answer ? json(*q.reference_answer) : json(nullptr);
  j["bloom"] = q.bloom ? json(std::string(to_string(*q.bloom))) : json(nullptr);
}
void from_json(const json& j, ExamQuestion& q) {
  j.at("id").get_to(q.id);
  j.at("text").get_to(q.text);
  q.reference_answer.reset();
  if (j.contains("reference_answer") && !j["reference_answer"].is_null()) {
    q.reference_answer = j["reference_answer"].get<std::string>();
  }
  q.bloom.reset();
  if (j.contains("bloom") && !j["bloom"].is_null()) {
    q.bloom = parse_bloom(j["bloom"].get<std::string>());
    if (!q.bloom) throw Error(ErrorCode::ValidationError, "unknown bloom category in question " + q.id);
  }
  q.aligned_sections = j.value("aligned_sections", std::vector<int>{});
}

void to_json(json& j, const Exam& e) { j = json{{"questions", e.questions}}; }
void from_json(const json& j, Exam& e) { j.at("questions").get_to(e.questions); }

void to_json(json& j, const Chapter& c) {
  j = json{{"id", c.id},           {"subject", c.subject},
           {"ordinal", c.ordinal}, {"title", c.title},
           {"sections", c.sections}, {"exam", c.exam},
           {"split", std::string(to_string(c.split))}, {"curated", c.curated}};
}
void from_json(const json& j, Chapter& c) {
  j.at("id").get_to(c.id);
  j.at("subject").get_to(c.subject);
  c.ordinal = j.value("ordinal", 0);
  c.title = j.value("title", std::string{});
  j.at("sections").get_to(c.sections);
  j.at("exam").get_to(c.exam);
  c.split = parse_split(j.value("split", std::string("Unassigned")));
  c.curated = j.value("curated", false);
}

void to_json(json& j, const Provenance& p) {
  j = json{{"strategy", std::string(to_string(p.strategy))},
           {"model_id", p.model_id},
           {"trial", p.trial},
           {"seed", p.seed}};
  j["bloom_level"] = p.bloom_level ? json(std::string(to_string(*p.bloom_level))) : json(nullptr);
}
void from_json(const json& j, Provenance& p) {
  p.strategy = parse_strategy(j.at("strategy").get<std::string>());
  j.at("model_id").get_to(p.model_id);
  j.at("trial").get_to(p.trial);
  j.at("seed").get_to(p.seed);
  p.bloom_level.reset();
  if (j.contains("bloom_level") && !j["bloom_level"].is_null()) {
    p.bloom_level = parse_bloom(j["bloom_level"].get<std::string>());
  }
}

void to_json(json& j, const QAPair& qa) {
  j = json{{"id", qa.id},
           {"question", qa.question},
           {"answer", qa.answer},
           {"anchor_section", qa.anchor_section},
           {"chapter_id", qa.chapter_id},
           {"generator", qa.generator}};
}
void from_json(const json& j, QAPair& qa) {
  j.at("id").get_to(qa.id);
  j.at("question").get_to(qa.question);
  j.at("answer").get_to(qa.answer);
  j.at("anchor_section").get_to(qa.anchor_section);
  qa.chapter_id = j.value("chapter_id", std::string{});
  j.at("generator").get_to(qa.generator);
}

void to_json(json& j, const ExamAttempt& a) {
  j = json{{"chapter_id", a.chapter_id},
           {"study_set_id", a.study_set_id},
           {"trial", a.trial},
           {"seed", a.seed},
           {"responses", a.responses},
           {"per_question_scores", a.per_question_scores},
           {"exam_score", a.exam_score},
           {"notes", a.notes}};
}
void from_json(const json& j, ExamAttempt& a) {
  a.chapter_id = j.value("chapter_id", std::string{});
  j.at("study_set_id").get_to(a.study_set_id);
  a.trial = j.value("trial", 0);
  a.seed = j.value("seed", std::int64_t{0});
  j.at("responses").get_to(a.responses);
  j.at("per_question_scores").get_to(a.per_question_scores);
  j.at("exam_score").get_to(a.exam_score);
  a.notes = j.value("notes", std::vector<std::string>{});
}

void to_json(json& j, const UtilityRecord& r) {
  j = json{{"qa_id", r.qa_id},   {"s_empty", r.s_empty},
           {"s_full", r.s_full}, {"s_single", r.s_single},
           {"s_all_but_one", r.s_all_but_one}, {"utility", r.utility}};
}
void from_json(const json& j, UtilityRecord& r) {
  j.at("qa_id").get_to(r.qa_id);
  j.at("s_empty").get_to(r.s_empty);
  j.at("s_full").get_to(r.s_full);
  j.at("s_single").get_to(r.s_single);
  j.at("s_all_but_one").get_to(r.s_all_but_one);
  j.at("utility").get_to(r.utility);
}

}  // namespace studysim
