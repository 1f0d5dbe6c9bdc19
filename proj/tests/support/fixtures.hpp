#pragma once

// Synthetic corpora and keyword-world mock scripts shared by the test binaries.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "studysim/lm.hpp"

namespace fs = std::filesystem;

namespace fixtures {

namespace fs = std::filesystem;
using studysim::json;

// Fixed-width, terminator-suffixed so no keyword is a substring of another.
inline std::string keyword(int subject, int chapter, int section) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "KW%02d%02d%02dZ", subject, chapter, section);
  return buf;
}

inline std::string section_sentence(int subject, int chapter, int section) {
  return "Passage " + std::to_string(subject) + "." + std::to_string(chapter) + "." + std::to_string(section) +
         " explains " + keyword(subject, chapter, section) + " through a worked illustration of tidal marsh ecology.";
}

struct ChapterSpec {
  int ordinal = 1;
  int sections = 3;
  int exam_questions = 10;
};

struct SubjectSpec {
  std::string name;
  std::vector<ChapterSpec> chapters;
};

inline void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string exam_question_text(int subject, int chapter, int section, int q) {
  return "Explain the role of " + keyword(subject, chapter, section) + " in case " + std::to_string(q) + ".";
}

// Exam question q (1-based) targets section ((q-1) % sections) + 1.
inline void write_chapter(const fs::path& subject_dir, int subject, const ChapterSpec& c) {
  char dir[64];
  std::snprintf(dir, sizeof dir, "%02d_chapter-%02d", c.ordinal, c.ordinal);
  std::string body = "# Chapter " + std::to_string(c.ordinal) + "\n\n## Learning Objectives\n\nList the goals.\n\n";
  for (int s = 1; s <= c.sections; ++s) {
    body += "## Part " + std::to_string(s) + "\n\n" + section_sentence(subject, c.ordinal, s) + "\n\n";
  }
  body += "## Summary\n\nA recap.\n";
  std::string exam = "# Review Questions\n\n";
  for (int q = 1; q <= c.exam_questions; ++q) {
    const int s = (q - 1) % c.sections + 1;
    exam += std::to_string(q) + ". " + exam_question_text(subject, c.ordinal, s, q) + "\n";
    if (q % 2 == 1) exam += "Answer: It concerns " + keyword(subject, c.ordinal, s) + ".\n";
    exam += "\n";
  }
  write_text(subject_dir / dir / "body.md", body);
  write_text(subject_dir / dir / "exam.md", exam);
}

inline std::vector<std::string> write_corpus(const fs::path& root, const std::vector<SubjectSpec>& subjects) {
  std::vector<std::string> keywords;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const int subject = static_cast<int>(i) + 1;
    for (const auto& c : subjects[i].chapters) {
      write_chapter(root / subjects[i].name, subject, c);
      for (int s = 1; s <= c.sections; ++s) keywords.push_back(keyword(subject, c.ordinal, s));
    }
  }
  return keywords;
}

inline std::vector<ChapterSpec> chapters(int count, int sections = 3, int exam_questions = 10) {
  std::vector<ChapterSpec> out;
  for (int i = 1; i <= count; ++i) out.push_back({i, sections, exam_questions});
  return out;
}

// Every keyword any fixture corpus can contain, in a fixed order.
inline std::vector<std::string> all_keywords(int subjects = 5, int chapters = 30, int sections = 6) {
  std::vector<std::string> out;
  for (int a = 1; a <= subjects; ++a) {
    for (int b = 1; b <= chapters; ++b) {
      for (int c = 1; c <= sections; ++c) out.push_back(keyword(a, b, c));
    }
  }
  return out;
}

inline json uniform_logprobs(int k) {
  json tokens = json::array(), probs = json::array();
  for (int i = 0; i < k; ++i) {
    tokens.push_back("t" + std::to_string(i));
    probs.push_back(1.0 / k);
  }
  return json{{"tokens", tokens}, {"probs", probs}};
}

// Full keyword-world script: every pipeline role is answered by a built-in
// responder, EIG prompts get a uniform-4 prior and a one-hot posterior.
inline json keyword_world_script(const std::vector<std::string>& keywords) {
  json rules = json::array({
      {{"contains", "[LEARNING MATERIALS]"}, {"responder", "keyword-learner"}},
      {{"contains", "You are a teacher who is evaluating"}, {"responder", "keyword-evaluator"}},
      {{"contains", "# TARGET TEXTBOOK CONTENT:"}, {"responder", "segment-headers"}},
      {{"contains", "Classify the questions into one of the six"},
       {"responder", "bloom-constant"},
       {"options", {{"cycle", true}}}},
      {{"contains", "<section index="}, {"responder", "keyword-aligner"}},
      {{"contains", "to generate the next paragraph"}, {"responder", "keyword-paragraph"}},
      {{"contains", "Answer each question shortly"}, {"responder", "keyword-answerer"}},
      {{"contains", "Scoring Criteria"}, {"responder", "keyword-salience"}},
      {{"contains", "Imagine you are a reader encountering"},
       {"ends_with", "Answer:"},
       {"response", "It"},
       {"logprobs", uniform_logprobs(4)}},
      {{"contains", "Imagine you are a reader encountering"},
       {"response", "is"},
       {"logprobs", {{"tokens", {"is"}}, {"probs", {1.0}}}}},
      {{"contains", "currently reading the section: "}, {"responder", "keyword-question"}},
      {{"contains", "Input context: "}, {"responder", "keyword-question"}},
      {{"default", true}, {"response", "{}"}},
  });
  return json{{"keywords", keywords}, {"embedding_dim", 32}, {"rules", rules}};
}

// Learner and evaluator only; enough for simulation-level tests.
inline json learner_world_script(const std::vector<std::string>& keywords) {
  json rules = json::array({
      {{"contains", "[LEARNING MATERIALS]"}, {"responder", "keyword-learner"}},
      {{"contains", "You are a teacher who is evaluating"}, {"responder", "keyword-evaluator"}},
      {{"default", true}, {"response", "{}"}},
  });
  return json{{"keywords", keywords}, {"rules", rules}};
}

inline fs::path write_script(const fs::path& path, const json& script) {
  write_text(path, script.dump(2));
  return path;
}

inline fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("studysim-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace fixtures
