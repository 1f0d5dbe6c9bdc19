#pragma once

// Reader simulation: a learner takes the exam from a study set of QA pairs
// only, and an evaluator scores each response against the chapter.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "studysim/domain.hpp"
#include "studysim/lm.hpp"

namespace studysim::sim {

struct StudySet {
  std::vector<QAPair> pairs;
  std::string id;  // hash of the sorted pair ids
};

std::string study_set_id(const std::vector<QAPair>& pairs);
// Throws InvalidInput on duplicate pair ids. The empty set is allowed.
StudySet make_study_set(std::vector<QAPair> pairs);

struct TrialAggregate {
  std::vector<double> trial_scores;
  double mean = 0.0;
  std::size_t count = 0;
  std::vector<ExamAttempt> attempts;
};

struct SimulatorOptions {
  std::string learner_model = "gpt-4o-mini";
  std::string evaluator_model = "gpt-4o-mini";
  double learner_temperature = 0.0;
  double evaluator_temperature = 0.0;
  std::int64_t base_seed = 0;
  // Chapters longer than this hand the evaluator only the aligned sections.
  long context_budget_chars = 400000;
  int attempts = 3;
  std::optional<std::filesystem::path> attempts_dir;
};

class Simulator {
 public:
  Simulator(Gateway& gateway, SimulatorOptions options);

  std::string learner_prompt(const Exam& exam, const StudySet& study) const;
  std::string evaluator_document(const Chapter& chapter, const ExamQuestion& question) const;

  // question id -> response; missing answers become the refusal string.
  std::map<std::string, std::string> take_exam(const Exam& exam, const StudySet& study, std::int64_t seed);

  // Scores are clamped into [0,1]; each clamp is recorded in notes.
  ExamAttempt score_attempt(const Chapter& chapter, const std::map<std::string, std::string>& responses,
                            std::int64_t seed);

  // Trials run with seeds base_seed + first_trial + t.
  TrialAggregate simulate(const Chapter& chapter, const StudySet& study, int trials, int first_trial = 0);

  const SimulatorOptions& options() const { return options_; }

 private:
  void persist(const ExamAttempt& attempt) const;

  Gateway& gateway_;
  SimulatorOptions options_;
};

}  // namespace studysim::sim
