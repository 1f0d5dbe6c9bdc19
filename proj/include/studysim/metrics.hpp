#pragma once

// Indirect question metrics (salience, EIG), similarity to the exam, Bloom
// depth and rank correlation.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "studysim/domain.hpp"
#include "studysim/lm.hpp"

namespace studysim::metrics {

struct SalienceScore {
  int value = 1;  // 1..5
};

struct EIGResult {
  double prior_entropy = 0.0;
  double posterior_entropy = 0.0;
  double eig = 0.0;
};

struct CorrelationResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

struct SimilarityResult {
  std::optional<double> max_cosine;  // nullopt when embeddings failed
  double max_rouge_l = 0.0;
};

struct MetricModels {
  std::string judge_model = "gpt-4o-mini";
  double temperature = 0.0;
  std::string embedding_model = "text-embedding-3-small";
  std::int64_t seed = 0;
  int attempts = 3;
  int top_k = kMaxTopLogprobs;
};

// Natural-log entropy of the renormalized distribution.
double entropy(const TokenDistribution& dist);
double entropy(const std::vector<double>& probs);

SalienceScore salience(Gateway& gateway, std::string_view question, std::string_view context,
                       const MetricModels& models);

EIGResult eig(Gateway& gateway, std::string_view question, std::string_view article,
              std::string_view answer_first_token, const MetricModels& models);
EIGResult eig_from_distributions(const TokenDistribution& prior, const TokenDistribution& posterior);

// First whitespace-delimited word of an answer.
std::string first_token(std::string_view answer);

// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& values);
CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y);

// Lowercased alphanumeric runs.
std::vector<std::string> rouge_tokens(std::string_view text);
double rouge_l(std::string_view candidate, std::string_view reference);
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

SimilarityResult similarity_to_exam(Gateway& gateway, std::string_view question, const Exam& exam,
                                    const MetricModels& models);

int bloom_depth(Bloom level);

}  // namespace studysim::metrics
