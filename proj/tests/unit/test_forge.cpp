#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "studysim/forge.hpp"

using namespace studysim;
using namespace studysim::forge;

namespace {

Chapter chapter_with_sections(int n) {
  Chapter c;
  c.id = "ch";
  c.ordinal = 1;
  for (int i = 1; i <= n; ++i) c.sections.push_back({i, fixtures::section_sentence(1, 1, i)});
  for (int q = 1; q <= 10; ++q) {
    const int s = (q - 1) % n + 1;
    c.exam.questions.push_back({"q" + std::to_string(q), fixtures::exam_question_text(1, 1, s, q), std::nullopt,
                                kAllBloom[q % 6], {s}});
  }
  return c;
}

struct World {
  std::vector<std::string> keywords = fixtures::all_keywords(1, 2, 6);
  std::shared_ptr<MockBackend> backend =
      std::make_shared<MockBackend>(MockScript::from_json(fixtures::keyword_world_script(keywords)));
  Gateway gateway{backend, GatewayOptions{}};
};

}  // namespace

TEST(Context, PrecedingSectionsOnlyInOrder) {
  const auto c = chapter_with_sections(4);
  const auto ctx = make_context(c, 3);
  EXPECT_EQ(ctx.anchor.index, 3);
  ASSERT_EQ(ctx.preceding.size(), 2u);
  EXPECT_EQ(ctx.preceding[0].index, 1);
  EXPECT_EQ(ctx.preceding[1].index, 2);
  EXPECT_TRUE(make_context(c, 1).preceding.empty());
  EXPECT_THROW(make_context(c, 9), Error);
}

TEST(Context, BudgetDropsOldestFirstNeverAnchor) {
  const auto c = chapter_with_sections(4);
  const long one = static_cast<long>(c.sections[0].content.size());
  const auto ctx = make_context(c, 4, one * 2 + 2);
  ASSERT_EQ(ctx.preceding.size(), 1u);
  EXPECT_EQ(ctx.preceding[0].index, 3);
  const auto tiny = make_context(c, 4, 1);
  EXPECT_TRUE(tiny.preceding.empty());
  EXPECT_EQ(tiny.anchor.content, c.sections[3].content);
}

TEST(BloomSampler, FollowsLabelDistribution) {
  const auto dist = BloomSampler::distribution_of({chapter_with_sections(3)});
  double total = 0;
  for (const auto& [b, p] : dist) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
  BloomSampler sampler({{Bloom::Applying, 0.25}, {Bloom::Creating, 0.75}}, 42);
  int creating = 0;
  for (int i = 0; i < 4000; ++i) creating += sampler.sample() == Bloom::Creating ? 1 : 0;
  EXPECT_NEAR(creating / 4000.0, 0.75, 0.03);
  BloomSampler again({{Bloom::Applying, 0.25}, {Bloom::Creating, 0.75}}, 42);
  BloomSampler same({{Bloom::Applying, 0.25}, {Bloom::Creating, 0.75}}, 42);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(again.sample(), same.sample());
}

TEST(BloomSampler, RejectsInvalidDistribution) {
  EXPECT_THROW(BloomSampler({{Bloom::Applying, 0.5}}, 1), Error);
  EXPECT_THROW(BloomSampler::distribution_of({Chapter{}}), Error);
}

TEST(Generate, ZeroShotAsksAboutAnchorKeyword) {
  World w;
  const auto c = chapter_with_sections(3);
  GenerationOptions o;
  const auto q = generate_question(w.gateway, make_context(c, 2), Strategy::ZeroShot, o);
  EXPECT_EQ(q.question, "What is " + fixtures::keyword(1, 1, 2) + " and why does it matter?");
  EXPECT_EQ(q.anchor_section, 2);
  EXPECT_NE(q.user_prompt.find("currently reading the section: " + c.sections[1].content), std::string::npos);
  EXPECT_EQ(q.provenance.strategy, Strategy::ZeroShot);
}

TEST(Generate, CoTKeepsReasoningSeparate) {
  World w;
  const auto q = generate_question(w.gateway, make_context(chapter_with_sections(3), 1), Strategy::CoT, {});
  ASSERT_TRUE(q.reasoning.has_value());
  EXPECT_EQ(q.question.find("centers on"), std::string::npos);
}

TEST(Generate, FewShotNeedsFiveExemplars) {
  World w;
  GenerationOptions o;
  o.exemplars.resize(4);
  try {
    generate_question(w.gateway, make_context(chapter_with_sections(3), 1), Strategy::FewShot, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ExemplarError);
  }
  o.exemplars = select_exemplars({chapter_with_sections(3)}, 9);
  const auto q = generate_question(w.gateway, make_context(chapter_with_sections(3), 3), Strategy::FewShot, o);
  EXPECT_NE(q.user_prompt.find("Example 5:"), std::string::npos);
  EXPECT_EQ(q.question, "What is " + fixtures::keyword(1, 1, 3) + " and why does it matter?");
}

TEST(Generate, BloomBasedRecordsLevel) {
  World w;
  BloomSampler sampler({{Bloom::Evaluating, 1.0}}, 1);
  GenerationOptions o;
  o.sampler = &sampler;
  const auto q = generate_question(w.gateway, make_context(chapter_with_sections(3), 2), Strategy::BloomBased, o);
  EXPECT_EQ(q.provenance.bloom_level, Bloom::Evaluating);
  EXPECT_NE(q.user_prompt.find("Input context: "), std::string::npos);
  EXPECT_EQ(q.question, "What is " + fixtures::keyword(1, 1, 2) + " and why does it matter?");
}

TEST(Generate, UnusableRepliesBecomeGenerationError) {
  auto backend = std::make_shared<MockBackend>(
      MockScript::from_json(json{{"rules", {{{"default", true}, {"response", "no json"}}}}}));
  Gateway g(backend, GatewayOptions{});
  GenerationOptions o;
  o.attempts = 2;
  try {
    generate_question(g, make_context(chapter_with_sections(2), 1), Strategy::ZeroShot, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GenerationError);
    EXPECT_EQ(e.detail(), "no json");
  }
  EXPECT_EQ(backend->calls(), 2u);
}

TEST(Exemplars, DeterministicDistinctAndDrawnFromAlignedPairs) {
  const auto c = chapter_with_sections(3);
  const auto a = select_exemplars({c}, 5);
  EXPECT_EQ(a.size(), 5u);
  const auto b = select_exemplars({c}, 5);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].question, b[i].question);
  std::set<std::string> distinct;
  for (const auto& e : a) {
    distinct.insert(e.question);
    const auto kw = e.section.substr(e.section.find("KW"), 9);
    EXPECT_NE(e.question.find(kw), std::string::npos);
  }
  EXPECT_EQ(distinct.size(), 5u);
  Chapter sparse = c;
  sparse.exam.questions.resize(4);
  EXPECT_THROW(select_exemplars({sparse}, 1), Error);
}

TEST(Answers, PromptCarriesOnlyQuestions) {
  World w;
  const auto c = chapter_with_sections(3);
  std::vector<GeneratedQuestion> qs;
  for (int s = 1; s <= 3; ++s) qs.push_back(generate_question(w.gateway, make_context(c, s), Strategy::ZeroShot, {}));
  const auto pairs = generate_answers(w.gateway, qs, {});
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_EQ(pairs[0].answer, fixtures::keyword(1, 1, 1) + " is covered in the textbook.");
  const std::string prompt = prompts::answer_batch({qs[0].question, qs[1].question, qs[2].question});
  for (const auto& s : c.sections) EXPECT_EQ(prompt.find(s.content), std::string::npos);
  std::set<std::string> ids;
  for (const auto& p : pairs) ids.insert(p.id);
  EXPECT_EQ(ids.size(), 3u);
}

TEST(Answers, CountMismatchIsAnswerError) {
  auto backend = std::make_shared<MockBackend>(MockScript::from_json(
      json{{"rules", {{{"default", true}, {"response", R"({"qa_pairs":[{"question":"a","answer":"b"}]})"}}}}}));
  Gateway g(backend, GatewayOptions{});
  std::vector<GeneratedQuestion> qs(2);
  qs[0].question = "a";
  qs[1].question = "c";
  try {
    generate_answers(g, qs, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AnswerError);
  }
}

TEST(Sft, OneExamplePerAlignedPair) {
  auto c = chapter_with_sections(3);
  c.exam.questions[0].aligned_sections = {1, 2};
  c.exam.questions[1].aligned_sections.clear();
  const auto ds = build_sft_dataset({c});
  EXPECT_EQ(ds.examples.size(), 10u);
  EXPECT_EQ(ds.skipped_unaligned, 1u);
  EXPECT_EQ(ds.examples[0].assistant, c.exam.questions[0].text);
  const auto j = to_json_value(ds.examples[0]);
  EXPECT_EQ(j["messages"][2]["role"], "assistant");
}
