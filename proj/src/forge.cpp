#include "studysim/forge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "studysim/hash.hpp"

namespace studysim::forge {

std::string GenerationContext::preceding_text() const {
  std::string out;
  for (const auto& s : preceding) {
    if (!out.empty()) out += "\n\n";
    out += s.content;
  }
  return out;
}

GenerationContext make_context(const Chapter& chapter, int anchor_index, long context_budget_chars) {
  const Section* anchor = chapter.section(anchor_index);
  if (!anchor) {
    throw Error(ErrorCode::InvalidInput, chapter.id + " has no section " + std::to_string(anchor_index));
  }
  GenerationContext ctx;
  ctx.chapter_id = chapter.id;
  ctx.anchor = *anchor;
  for (const auto& s : chapter.sections) {
    if (s.index < anchor_index) ctx.preceding.push_back(s);
  }
  std::sort(ctx.preceding.begin(), ctx.preceding.end(),
            [](const Section& a, const Section& b) { return a.index < b.index; });
  if (context_budget_chars > 0) {
    auto total = [&] {
      long n = static_cast<long>(ctx.anchor.content.size());
      for (const auto& s : ctx.preceding) n += static_cast<long>(s.content.size()) + 2;
      return n;
    };
    while (!ctx.preceding.empty() && total() > context_budget_chars) ctx.preceding.erase(ctx.preceding.begin());
  }
  return ctx;
}

BloomSampler::BloomSampler(std::map<Bloom, double> distribution, std::uint64_t seed)
    : distribution_(std::move(distribution)), state_(seed) {
  double total = 0.0;
  for (const auto& [level, p] : distribution_) {
    if (!(p >= 0.0)) throw Error(ErrorCode::InvalidInput, "negative Bloom probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidInput, "Bloom distribution sums to " + std::to_string(total));
  }
}

std::map<Bloom, double> BloomSampler::distribution_of(const std::vector<Chapter>& chapters) {
  std::map<Bloom, double> counts;
  double total = 0.0;
  for (const auto& c : chapters) {
    for (const auto& q : c.exam.questions) {
      if (q.bloom) {
        counts[*q.bloom] += 1.0;
        total += 1.0;
      }
    }
  }
  if (total == 0.0) throw Error(ErrorCode::InvalidInput, "no Bloom labels in the training chapters");
  for (auto& [level, c] : counts) c /= total;
  return counts;
}

BloomSampler BloomSampler::from_chapters(const std::vector<Chapter>& chapters, std::uint64_t seed) {
  return BloomSampler(distribution_of(chapters), seed);
}

Bloom BloomSampler::sample() {
  std::lock_guard lock(mu_);
  const double u = unit_interval(splitmix64(state_));
  double cumulative = 0.0;
  Bloom last = distribution_.begin()->first;
  for (const auto& [level, p] : distribution_) {
    if (p <= 0.0) continue;
    cumulative += p;
    last = level;
    if (u < cumulative) return level;
  }
  return last;
}

namespace {

std::optional<std::string> non_empty_string(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) return std::nullopt;
  std::string s = j[key].get<std::string>();
  if (s.find_first_not_of(" \t\r\n") == std::string::npos) return std::nullopt;
  return s;
}

}  // namespace

GeneratedQuestion generate_question(Gateway& gateway, const GenerationContext& ctx, Strategy strategy,
                                    const GenerationOptions& options) {
  GeneratedQuestion out;
  out.chapter_id = ctx.chapter_id;
  out.anchor_section = ctx.anchor.index;
  out.system_prompt = std::string(prompts::kQuestionSystem);
  out.provenance = {strategy, options.model_id, options.trial, options.seed, std::nullopt};

  CallSpec spec{options.model_id, options.temperature, options.seed, 1024, out.system_prompt};
  const std::string preceding = ctx.preceding_text();
  const std::string where = ctx.chapter_id + " section " + std::to_string(ctx.anchor.index);
  auto ask_question = [&](const std::string& prompt) {
    out.user_prompt = prompt;
    return ask_json(gateway, spec, prompt, options.attempts, ErrorCode::GenerationError, "question for " + where,
                    [](const json& j) { return non_empty_string(j, "question"); });
  };

  switch (strategy) {
    case Strategy::ZeroShot:
    case Strategy::FineTuned:
      out.question = ask_question(prompts::question_zero_shot(preceding, ctx.anchor.content));
      break;
    case Strategy::FewShot:
      if (options.exemplars.size() < kFewShotExemplars) {
        throw Error(ErrorCode::ExemplarError, "few-shot generation needs " + std::to_string(kFewShotExemplars) +
                                                  " exemplars, got " + std::to_string(options.exemplars.size()));
      }
      out.question = ask_question(prompts::question_few_shot(preceding, ctx.anchor.content, options.exemplars));
      break;
    case Strategy::CoT: {
      out.user_prompt = prompts::question_cot(preceding, ctx.anchor.content);
      using Reply = std::pair<std::string, std::optional<std::string>>;
      auto reply = ask_json(gateway, spec, out.user_prompt, options.attempts, ErrorCode::GenerationError,
                            "question for " + where, [](const json& j) -> std::optional<Reply> {
                              auto q = non_empty_string(j, "question");
                              if (!q) return std::nullopt;
                              return Reply{*q, non_empty_string(j, "reasoning")};
                            });
      out.question = std::move(reply.first);
      out.reasoning = std::move(reply.second);
      break;
    }
    case Strategy::BloomBased: {
      if (!options.sampler) throw Error(ErrorCode::InvalidInput, "Bloom-based generation needs a sampler");
      const Bloom level = options.sampler->sample();
      out.provenance.bloom_level = level;
      std::string full_context = preceding;
      if (!full_context.empty()) full_context += "\n\n";
      full_context += ctx.anchor.content;
      const std::string paragraph =
          ask_json(gateway, spec, prompts::bloom_next_paragraph(level, full_context), options.attempts,
                   ErrorCode::GenerationError, "next paragraph for " + where,
                   [](const json& j) { return non_empty_string(j, "next_paragraph"); });
      out.question = ask_question(prompts::bloom_bridge_question(full_context, paragraph));
      break;
    }
  }
  return out;
}

std::vector<prompts::FewShotExemplar> select_exemplars(const std::vector<Chapter>& train_chapters,
                                                       std::uint64_t seed, std::size_t count) {
  std::vector<prompts::FewShotExemplar> pool;
  for (const auto& c : train_chapters) {
    for (const auto& q : c.exam.questions) {
      for (int idx : q.aligned_sections) {
        if (const Section* s = c.section(idx)) pool.push_back({s->content, q.text});
      }
    }
  }
  if (pool.size() < count) {
    throw Error(ErrorCode::ExemplarError, "only " + std::to_string(pool.size()) + " aligned exemplars available, need " +
                                              std::to_string(count));
  }
  // Partial Fisher-Yates with a platform-independent generator.
  std::uint64_t state = seed;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t span = pool.size() - i;
    const std::size_t j = i + static_cast<std::size_t>(unit_interval(splitmix64(state)) * static_cast<double>(span));
    std::swap(pool[i], pool[std::min(j, pool.size() - 1)]);
  }
  pool.resize(count);
  return pool;
}

std::vector<QAPair> generate_answers(Gateway& gateway, const std::vector<GeneratedQuestion>& questions,
                                     const AnswerOptions& options) {
  if (questions.empty()) throw Error(ErrorCode::InvalidInput, "no questions to answer");
  std::vector<std::string> texts;
  for (const auto& q : questions) texts.push_back(q.question);
  CallSpec spec{options.model_id, options.temperature, options.seed, 4096, std::nullopt};
  const auto answers =
      ask_json(gateway, spec, prompts::answer_batch(texts), options.attempts, ErrorCode::AnswerError,
               "answering " + std::to_string(texts.size()) + " questions",
               [&](const json& j) -> std::optional<std::vector<std::string>> {
                 if (!j.contains("qa_pairs") || !j["qa_pairs"].is_array()) return std::nullopt;
                 const auto& arr = j["qa_pairs"];
                 if (arr.size() != texts.size()) return std::nullopt;
                 std::vector<std::string> out;
                 for (const auto& item : arr) {
                   if (!item.is_object() || !item.contains("answer")) return std::nullopt;
                   const auto& a = item["answer"];
                   out.push_back(a.is_string() ? a.get<std::string>() : a.dump());
                 }
                 return out;
               });
  std::vector<QAPair> pairs;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const auto& q = questions[i];
    QAPair p;
    p.question = q.question;
    p.answer = answers[i];
    p.anchor_section = q.anchor_section;
    p.chapter_id = q.chapter_id;
    p.generator = q.provenance;
    p.id = make_qa_id(p.chapter_id, p.question, p.answer, p.anchor_section, p.generator);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

json to_json_value(const ChatExample& e) {
  return json{{"messages",
               json::array({{{"role", "system"}, {"content", e.system}},
                            {{"role", "user"}, {"content", e.user}},
                            {{"role", "assistant"}, {"content", e.assistant}}})}};
}

SftDataset build_sft_dataset(const std::vector<Chapter>& train_chapters, long context_budget_chars) {
  SftDataset out;
  for (const auto& c : train_chapters) {
    for (const auto& q : c.exam.questions) {
      if (q.aligned_sections.empty()) {
        ++out.skipped_unaligned;
        continue;
      }
      for (int idx : q.aligned_sections) {
        const auto ctx = make_context(c, idx, context_budget_chars);
        out.examples.push_back({std::string(prompts::kQuestionSystem),
                                prompts::question_zero_shot(ctx.preceding_text(), ctx.anchor.content), q.text});
      }
    }
  }
  return out;
}

}  // namespace studysim::forge
