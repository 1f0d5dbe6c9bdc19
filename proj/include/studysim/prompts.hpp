#pragma once

// Prompt templates for every LM role in the pipeline.

#include <string>
#include <string_view>
#include <vector>

#include "studysim/domain.hpp"

namespace studysim::prompts {

/// Literal refusal the learner gives for material it has not studied.
inline constexpr std::string_view kRefusal = "I don't know. I have not been studied on this.";

/// System message for question generation and the fine-tune files built from it.
inline constexpr std::string_view kQuestionSystem =
    "You are a tutor who writes study questions for a student reading a textbook.";

struct FewShotExemplar {
  std::string section;
  std::string question;
};

std::string_view bloom_definition(Bloom level);

std::string question_zero_shot(std::string_view preceding, std::string_view anchor);
std::string question_few_shot(std::string_view preceding, std::string_view anchor,
                              const std::vector<FewShotExemplar>& exemplars);
std::string question_cot(std::string_view preceding, std::string_view anchor);
std::string bloom_next_paragraph(Bloom level, std::string_view full_context);
std::string bloom_bridge_question(std::string_view context, std::string_view next_paragraph);

std::string answer_batch(const std::vector<std::string>& questions);

// "Question: ...\nAnswer: ..." blocks separated by blank lines.
std::string learning_materials(const std::vector<QAPair>& pairs);
std::string learner(std::string_view materials, const Exam& exam);

std::string evaluator(std::string_view document, std::string_view question,
                      const std::optional<std::string>& ground_truth, std::string_view prediction);

std::string segmentation(std::string_view example_input, std::string_view example_output,
                         std::string_view target_content);
std::string bloom_classification(const std::vector<std::string>& questions);
std::string alignment(const std::vector<Section>& sections, const std::vector<std::string>& questions);

std::string salience(std::string_view article, std::string_view question);
std::string eig_prior(std::string_view article, std::string_view question);
std::string eig_posterior(std::string_view article, std::string_view question, std::string_view first_token);

}  // namespace studysim::prompts
