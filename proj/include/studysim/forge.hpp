#pragma once

// Question generation strategies and the independent answer generator.

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "studysim/domain.hpp"
#include "studysim/lm.hpp"
#include "studysim/llm_call.hpp"
#include "studysim/prompts.hpp"

namespace studysim::forge {

/// Exemplars required by the few-shot strategy.
inline constexpr std::size_t kFewShotExemplars = 5;

struct GenerationContext {
  std::string chapter_id;
  Section anchor;
  std::vector<Section> preceding;  // oldest first; all indices < anchor.index

  std::string preceding_text() const;
};

// Anchor is never truncated; preceding sections are dropped oldest-first until
// the combined text fits `context_budget_chars` (<= 0 means unlimited).
GenerationContext make_context(const Chapter& chapter, int anchor_index, long context_budget_chars = 0);

class BloomSampler {
 public:
  BloomSampler(std::map<Bloom, double> distribution, std::uint64_t seed);
  // Distribution from label counts of the given (train-split) chapters.
  // Empirical label distribution of the chapters' exam questions.
  static std::map<Bloom, double> distribution_of(const std::vector<Chapter>& chapters);
  static BloomSampler from_chapters(const std::vector<Chapter>& chapters, std::uint64_t seed);

  Bloom sample();
  const std::map<Bloom, double>& distribution() const { return distribution_; }

 private:
  std::map<Bloom, double> distribution_;
  std::uint64_t state_;
  std::mutex mu_;
};

struct GenerationOptions {
  std::string model_id = "gpt-4o-mini";
  double temperature = 1.0;
  int trial = 0;
  std::int64_t seed = 0;
  int attempts = 3;
  std::vector<prompts::FewShotExemplar> exemplars;  // FewShot
  BloomSampler* sampler = nullptr;                  // BloomBased
};

struct GeneratedQuestion {
  std::string chapter_id;
  int anchor_section = 0;
  std::string question;
  Provenance provenance;
  std::string system_prompt;
  std::string user_prompt;  // the prompt that produced the question
  std::optional<std::string> reasoning;  // CoT trace, not propagated further
};

GeneratedQuestion generate_question(Gateway& gateway, const GenerationContext& ctx, Strategy strategy,
                                    const GenerationOptions& options);

// Uniform without replacement over aligned (section, exam question) pairs of
// the given chapters. Throws ExemplarError with fewer than five available.
std::vector<prompts::FewShotExemplar> select_exemplars(const std::vector<Chapter>& train_chapters,
                                                       std::uint64_t seed,
                                                       std::size_t count = kFewShotExemplars);

struct AnswerOptions {
  std::string model_id = "gpt-4o-mini";
  double temperature = 0.0;
  std::int64_t seed = 0;
  int attempts = 3;
};

// One batched call; the prompt carries only the questions.
std::vector<QAPair> generate_answers(Gateway& gateway, const std::vector<GeneratedQuestion>& questions,
                                     const AnswerOptions& options);

struct ChatExample {
  std::string system;
  std::string user;
  std::string assistant;
};

json to_json_value(const ChatExample& example);

struct SftDataset {
  std::vector<ChatExample> examples;
  std::size_t skipped_unaligned = 0;
};

// One example per (exam question, aligned section): zero-shot prompt for that
// anchor -> exam question text.
SftDataset build_sft_dataset(const std::vector<Chapter>& train_chapters, long context_budget_chars = 0);

}  // namespace studysim::forge
