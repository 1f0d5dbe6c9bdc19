#include "studysim/simulator.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "studysim/hash.hpp"
#include "studysim/llm_call.hpp"
#include "studysim/prompts.hpp"

namespace studysim::sim {

std::string study_set_id(const std::vector<QAPair>& pairs) {
  std::vector<std::string> ids;
  for (const auto& p : pairs) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  std::string joined;
  for (const auto& id : ids) joined += id + "\n";
  return "ss-" + short_hash(joined);
}

StudySet make_study_set(std::vector<QAPair> pairs) {
  std::set<std::string> seen;
  for (const auto& p : pairs) {
    if (!seen.insert(p.id).second) throw Error(ErrorCode::InvalidInput, "duplicate QA pair id " + p.id);
  }
  StudySet s;
  s.id = study_set_id(pairs);
  s.pairs = std::move(pairs);
  return s;
}

Simulator::Simulator(Gateway& gateway, SimulatorOptions options) : gateway_(gateway), options_(std::move(options)) {}

std::string Simulator::learner_prompt(const Exam& exam, const StudySet& study) const {
  return prompts::learner(prompts::learning_materials(study.pairs), exam);
}

std::string Simulator::evaluator_document(const Chapter& chapter, const ExamQuestion& question) const {
  std::string full = chapter.full_text();
  if (options_.context_budget_chars <= 0 || static_cast<long>(full.size()) <= options_.context_budget_chars ||
      question.aligned_sections.empty()) {
    return full;
  }
  std::string out;
  for (int idx : question.aligned_sections) {
    if (const Section* s = chapter.section(idx)) {
      if (!out.empty()) out += "\n\n";
      out += s->content;
    }
  }
  return out.empty() ? full : out;
}

std::map<std::string, std::string> Simulator::take_exam(const Exam& exam, const StudySet& study, std::int64_t seed) {
  if (exam.questions.empty()) throw Error(ErrorCode::EmptyExam, "exam has no questions");
  CallSpec spec{options_.learner_model, options_.learner_temperature, seed, 4096, std::nullopt};
  using Responses = std::map<std::string, std::string>;
  return ask_json(gateway_, spec, learner_prompt(exam, study), options_.attempts, ErrorCode::SimulationError,
                  "learner reply", [&](const json& j) -> std::optional<Responses> {
                    Responses out;
                    for (std::size_t i = 0; i < exam.questions.size(); ++i) {
                      const std::string key = std::to_string(i + 1);
                      std::string answer;
                      if (j.contains(key) && !j[key].is_null()) {
                        answer = j[key].is_string() ? j[key].get<std::string>() : j[key].dump();
                      }
                      if (answer.find_first_not_of(" \t\r\n") == std::string::npos) {
                        answer = std::string(prompts::kRefusal);
                      }
                      out[exam.questions[i].id] = std::move(answer);
                    }
                    return out;
                  });
}

ExamAttempt Simulator::score_attempt(const Chapter& chapter, const std::map<std::string, std::string>& responses,
                                     std::int64_t seed) {
  ExamAttempt attempt;
  attempt.chapter_id = chapter.id;
  attempt.seed = seed;
  CallSpec spec{options_.evaluator_model, options_.evaluator_temperature, seed, 512, std::nullopt};
  for (const auto& q : chapter.exam.questions) {
    const auto it = responses.find(q.id);
    if (it == responses.end()) throw Error(ErrorCode::ScoringError, "no response for question " + q.id);
    const std::string prompt = prompts::evaluator(evaluator_document(chapter, q), q.text, q.reference_answer, it->second);
    double raw = ask_json(gateway_, spec, prompt, options_.attempts, ErrorCode::ScoringError,
                          "evaluator reply for " + q.id, [](const json& j) -> std::optional<double> {
                            if (!j.contains("score")) return std::nullopt;
                            const auto& s = j["score"];
                            if (s.is_number()) return s.get<double>();
                            if (s.is_string()) {
                              try {
                                return std::stod(s.get<std::string>());
                              } catch (const std::exception&) {
                                return std::nullopt;
                              }
                            }
                            return std::nullopt;
                          });
    const double clamped = std::clamp(raw, 0.0, 1.0);
    if (clamped != raw) {
      attempt.notes.push_back("clamped score for " + q.id + " from " + json(raw).dump() + " to " + json(clamped).dump());
      spdlog::warn("{}: {}", chapter.id, attempt.notes.back());
    }
    attempt.responses[q.id] = it->second;
    attempt.per_question_scores[q.id] = clamped;
  }
  attempt.exam_score = exam_score(attempt.per_question_scores);
  return attempt;
}

void Simulator::persist(const ExamAttempt& attempt) const {
  if (!options_.attempts_dir) return;
  std::filesystem::create_directories(*options_.attempts_dir);
  const auto path = *options_.attempts_dir /
                    (attempt.chapter_id + "__" + attempt.study_set_id + "__t" + std::to_string(attempt.trial) + ".json");
  std::ofstream out(path, std::ios::trunc);
  out << json(attempt).dump(2) << '\n';
}

TrialAggregate Simulator::simulate(const Chapter& chapter, const StudySet& study, int trials, int first_trial) {
  if (trials < 1) throw Error(ErrorCode::InvalidInput, "trials must be >= 1");
  TrialAggregate agg;
  for (int t = 0; t < trials; ++t) {
    const int trial = first_trial + t;
    const std::int64_t seed = options_.base_seed + trial;
    try {
      auto responses = take_exam(chapter.exam, study, seed);
      ExamAttempt attempt = score_attempt(chapter, responses, seed);
      attempt.study_set_id = study.id;
      attempt.trial = trial;
      persist(attempt);
      agg.trial_scores.push_back(attempt.exam_score);
      agg.attempts.push_back(std::move(attempt));
    } catch (const Error& e) {
      rethrow_with_context(e, chapter.id + " trial " + std::to_string(trial));
    }
  }
  agg.count = agg.trial_scores.size();
  double sum = 0.0;
  for (double s : agg.trial_scores) sum += s;
  agg.mean = sum / static_cast<double>(agg.count);
  return agg;
}

}  // namespace studysim::sim
