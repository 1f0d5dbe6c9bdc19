#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "studysim/prompts.hpp"
#include "studysim/simulator.hpp"
#include "studysim/utility.hpp"

using namespace studysim;

namespace {

std::string kw(int i) { return fixtures::keyword(9, 1, i); }

// Exam question i is about keyword i.
Chapter keyword_chapter(int questions) {
  Chapter c;
  c.id = "sim-ch";
  c.ordinal = 1;
  c.curated = true;
  for (int i = 1; i <= questions; ++i) {
    c.sections.push_back({i, fixtures::section_sentence(9, 1, i)});
    c.exam.questions.push_back({"q" + std::to_string(i), "Explain " + kw(i) + ".", std::nullopt, std::nullopt, {i}});
  }
  return c;
}

QAPair pair_about(const std::vector<int>& keywords, const std::string& id) {
  QAPair p;
  p.id = id;
  p.question = "What links";
  for (int k : keywords) p.question += " " + kw(k);
  p.question += "?";
  p.answer = "They are related.";
  p.chapter_id = "sim-ch";
  return p;
}

struct World {
  std::shared_ptr<MockBackend> backend;
  Gateway gateway;
  explicit World(int keywords)
      : backend(std::make_shared<MockBackend>(MockScript::from_json(fixtures::learner_world_script([&] {
          std::vector<std::string> k;
          for (int i = 1; i <= keywords; ++i) k.push_back(kw(i));
          return k;
        }())))),
        gateway(backend, GatewayOptions{}) {}
};

}  // namespace

TEST(StudySet, IdIgnoresOrderAndRejectsDuplicates) {
  const auto a = pair_about({1}, "a"), b = pair_about({2}, "b");
  EXPECT_EQ(sim::make_study_set({a, b}).id, sim::make_study_set({b, a}).id);
  EXPECT_NE(sim::make_study_set({a}).id, sim::make_study_set({b}).id);
  EXPECT_THROW(sim::make_study_set({a, a}), Error);
  EXPECT_NO_THROW(sim::make_study_set({}));
}

TEST(Simulator, ScoreIsCoveredFraction) {
  World w(4);
  sim::Simulator s(w.gateway, {});
  const auto c = keyword_chapter(4);
  EXPECT_DOUBLE_EQ(s.simulate(c, sim::make_study_set({}), 1).mean, 0.0);
  EXPECT_DOUBLE_EQ(s.simulate(c, sim::make_study_set({pair_about({1, 3}, "x")}), 1).mean, 0.5);
  const auto agg = s.simulate(c, sim::make_study_set({pair_about({1, 2, 3, 4}, "y")}), 3);
  EXPECT_EQ(agg.count, 3u);
  EXPECT_DOUBLE_EQ(agg.mean, 1.0);
  EXPECT_EQ(agg.attempts[2].trial, 2);
}

TEST(Simulator, LearnerPromptHoldsOnlyStudySetAndExam) {
  World w(3);
  sim::Simulator s(w.gateway, {});
  const auto c = keyword_chapter(3);
  const auto prompt = s.learner_prompt(c.exam, sim::make_study_set({pair_about({1}, "x")}));
  for (const auto& sec : c.sections) EXPECT_EQ(prompt.find(sec.content), std::string::npos);
  EXPECT_NE(prompt.find("Question: What links " + kw(1) + "?\nAnswer: They are related."), std::string::npos);
  EXPECT_NE(prompt.find("1. Explain " + kw(1) + "."), std::string::npos);
}

TEST(Simulator, EvaluatorDocumentFallsBackToAlignedSectionsOverBudget) {
  World w(3);
  sim::SimulatorOptions o;
  o.context_budget_chars = 10;
  sim::Simulator s(w.gateway, o);
  const auto c = keyword_chapter(3);
  EXPECT_EQ(s.evaluator_document(c, c.exam.questions[1]), c.sections[1].content);
  o.context_budget_chars = 0;
  EXPECT_EQ(sim::Simulator(w.gateway, o).evaluator_document(c, c.exam.questions[1]), c.full_text());
}

TEST(Simulator, OutOfRangeEvaluatorScoresAreClamped) {
  auto backend = std::make_shared<MockBackend>(MockScript::from_json(json{
      {"rules",
       {{{"contains", "[LEARNING MATERIALS]"}, {"response", R"({"1":"a","2":"b"})"}},
        {{"contains", "student's answer:\na"}, {"response", R"({"score": 1.5})"}},
        {{"default", true}, {"response", R"({"score": "-0.5"})"}}}}}));
  Gateway g(backend, GatewayOptions{});
  sim::Simulator s(g, {});
  auto c = keyword_chapter(2);
  const auto attempt = s.simulate(c, sim::make_study_set({}), 1).attempts[0];
  EXPECT_DOUBLE_EQ(attempt.per_question_scores.at("q1"), 1.0);
  EXPECT_DOUBLE_EQ(attempt.per_question_scores.at("q2"), 0.0);
  EXPECT_EQ(attempt.notes.size(), 2u);
}

TEST(Simulator, MissingAnswersBecomeRefusal) {
  auto backend = std::make_shared<MockBackend>(MockScript::from_json(
      json{{"rules", {{{"contains", "[LEARNING MATERIALS]"}, {"response", R"({"1":"x"})"}},
                      {{"default", true}, {"response", R"({"score": 0})"}}}}}));
  Gateway g(backend, GatewayOptions{});
  sim::Simulator s(g, {});
  const auto r = s.take_exam(keyword_chapter(2).exam, sim::make_study_set({}), 0);
  EXPECT_EQ(r.at("q2"), prompts::kRefusal);
}

TEST(Simulator, AttemptsArePersisted) {
  World w(2);
  sim::SimulatorOptions o;
  o.attempts_dir = fixtures::temp_dir("attempts");
  sim::Simulator s(w.gateway, o);
  s.simulate(keyword_chapter(2), sim::make_study_set({}), 2);
  EXPECT_EQ(std::distance(fs::directory_iterator(*o.attempts_dir), fs::directory_iterator{}), 2);
}

TEST(Perturbation, DistinctSetCountsAreExact) {
  auto pairs = [](int n) {
    std::vector<QAPair> out;
    for (int i = 1; i <= n; ++i) out.push_back(pair_about({i}, "p" + std::to_string(i)));
    return out;
  };
  EXPECT_THROW(utility::plan_perturbations({}), Error);
  // n=1: single == full and all-but-one == empty.
  EXPECT_EQ(utility::plan_perturbations(pairs(1)).distinct_sets().size(), 2u);
  // n=2: single(a) == all-but-one(b).
  EXPECT_EQ(utility::plan_perturbations(pairs(2)).distinct_sets().size(), 4u);
  for (int n = 3; n <= 20; ++n) {
    EXPECT_EQ(utility::plan_perturbations(pairs(n)).distinct_sets().size(), static_cast<std::size_t>(2 * n + 2));
  }
}

TEST(Perturbation, SetsHaveExpectedMembership) {
  const auto plan = utility::plan_perturbations({pair_about({1}, "a"), pair_about({2}, "b"), pair_about({3}, "c")});
  EXPECT_TRUE(plan.empty.pairs.empty());
  EXPECT_EQ(plan.full.pairs.size(), 3u);
  for (const auto& p : plan.per_pair) {
    ASSERT_EQ(p.single.pairs.size(), 1u);
    EXPECT_EQ(p.single.pairs[0].id, p.qa_id);
    EXPECT_EQ(p.all_but_one.pairs.size(), 2u);
    for (const auto& q : p.all_but_one.pairs) EXPECT_NE(q.id, p.qa_id);
  }
  const auto sets = plan.distinct_sets();
  EXPECT_EQ(sets[0].id, plan.empty.id);
  EXPECT_EQ(sets[1].id, plan.full.id);
}

TEST(UtilityEstimate, WorkedExample) {
  // Four questions; A covers q1, B covers q2 and q3.
  World w(4);
  sim::Simulator s(w.gateway, {});
  const auto r = utility::estimate_utilities(s, keyword_chapter(4), {pair_about({1}, "A"), pair_about({2, 3}, "B")}, 1);
  ASSERT_EQ(r.records.size(), 2u);
  const auto& a = r.records[0];
  EXPECT_DOUBLE_EQ(a.s_empty, 0.0);
  EXPECT_DOUBLE_EQ(a.s_full, 0.75);
  EXPECT_DOUBLE_EQ(a.s_single, 0.25);
  EXPECT_DOUBLE_EQ(a.s_all_but_one, 0.5);
  EXPECT_DOUBLE_EQ(a.utility, 0.25);
  EXPECT_DOUBLE_EQ(r.records[1].utility, 0.5);
}

TEST(UtilityEstimate, RedundantPairsShareCredit) {
  World w(4);
  sim::Simulator s(w.gateway, {});
  const auto r = utility::estimate_utilities(s, keyword_chapter(4), {pair_about({1}, "A"), pair_about({1}, "B")}, 1, 4);
  for (const auto& rec : r.records) {
    EXPECT_DOUBLE_EQ(rec.utility, 0.125);
    EXPECT_TRUE(is_consistent(rec));
  }
}

TEST(UtilityEstimate, SingletonEqualsSingleGain) {
  World w(5);
  sim::Simulator s(w.gateway, {});
  const auto r = utility::estimate_utilities(s, keyword_chapter(5), {pair_about({2, 4}, "A")}, 2);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_DOUBLE_EQ(r.records[0].utility, r.records[0].s_single - r.records[0].s_empty);
  EXPECT_DOUBLE_EQ(r.records[0].utility, 0.4);
  EXPECT_EQ(r.simulations.size(), 2u);
}

TEST(UtilityEstimate, WorkerCountDoesNotChangeResults) {
  std::vector<QAPair> pairs;
  for (int i = 1; i <= 6; ++i) pairs.push_back(pair_about({i, (i % 6) + 1}, "p" + std::to_string(i)));
  World w1(8), w2(8);
  sim::Simulator s1(w1.gateway, {}), s2(w2.gateway, {});
  const auto a = utility::estimate_utilities(s1, keyword_chapter(8), pairs, 2, 1);
  const auto b = utility::estimate_utilities(s2, keyword_chapter(8), pairs, 2, 8);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(json(a.records[i]).dump(), json(b.records[i]).dump());
  }
}
