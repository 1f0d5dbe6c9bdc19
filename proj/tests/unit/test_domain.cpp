#include <gtest/gtest.h>

#include <random>

#include "studysim/domain.hpp"
#include "studysim/error.hpp"
#include "studysim/hash.hpp"

using namespace studysim;

namespace {

Chapter small_chapter() {
  Chapter c;
  c.id = "Microbiology-01_intro";
  c.subject = Subject::parse("Microbiology");
  c.ordinal = 1;
  c.sections = {{1, "alpha"}, {2, "beta"}, {3, "gamma"}};
  for (int i = 1; i <= 10; ++i) {
    c.exam.questions.push_back({"q" + std::to_string(i), "question " + std::to_string(i), std::nullopt, std::nullopt,
                                {1}});
  }
  c.curated = true;
  return c;
}

bool has(const std::vector<Violation>& v, ViolationKind k) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.kind == k; });
}

}  // namespace

TEST(ExamScore, MeanOfPerQuestionScores) {
  EXPECT_DOUBLE_EQ(exam_score({{"a", 1.0}, {"b", 0.0}, {"c", 1.0}, {"d", 1.0}}), 0.75);
  EXPECT_DOUBLE_EQ(exam_score({{"a", 0.0}, {"b", 0.0}}), 0.0);
}

TEST(ExamScore, RejectsEmptyAndOutOfRange) {
  try {
    exam_score({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyExam);
  }
  try {
    exam_score({{"a", 1.5}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidScore);
  }
  EXPECT_THROW(exam_score({{"a", -0.1}}), Error);
}

TEST(ExamScore, PropertyBoundedByMinAndMax) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, double> m;
    const int n = 1 + static_cast<int>(rng() % 30);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = u(rng);
      m["q" + std::to_string(i)] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double s = exam_score(m);
    EXPECT_GE(s, lo - 1e-15);
    EXPECT_LE(s, hi + 1e-15);
  }
}

TEST(Utility, AveragedGainWorkedExample) {
  const auto r = make_utility_record("qa-A", 0.0, 0.75, 0.25, 0.5);
  EXPECT_DOUBLE_EQ(r.utility, 0.25);
  EXPECT_TRUE(is_consistent(r));
}

TEST(Utility, InconsistentRecordDetected) {
  auto r = make_utility_record("qa", 0.1, 0.9, 0.4, 0.6);
  r.utility += 1e-6;
  EXPECT_FALSE(is_consistent(r));
}

TEST(Utility, RecordsStayWithinUnitBounds) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const auto r = make_utility_record("qa", u(rng), u(rng), u(rng), u(rng));
    EXPECT_GE(r.utility, -1.0);
    EXPECT_LE(r.utility, 1.0);
    EXPECT_TRUE(is_consistent(r));
  }
}

TEST(Subject, ParsingIsCaseAndPunctuationInsensitive) {
  EXPECT_EQ(Subject::parse("us_history").kind, SubjectKind::USHistory);
  EXPECT_EQ(Subject::parse("US History").kind, SubjectKind::USHistory);
  EXPECT_EQ(Subject::parse("MICROBIOLOGY").kind, SubjectKind::Microbiology);
  const auto other = Subject::parse("Astronomy");
  EXPECT_EQ(other.kind, SubjectKind::Other);
  EXPECT_EQ(other.name(), "Astronomy");
}

TEST(Bloom, ParsesAllSixLevels) {
  for (Bloom b : kAllBloom) EXPECT_EQ(parse_bloom(to_string(b)), b);
  EXPECT_FALSE(parse_bloom("Memorizing").has_value());
}

TEST(Chapter, ValidChapterHasNoViolations) { EXPECT_TRUE(validate_chapter(small_chapter()).empty()); }

TEST(Chapter, DetectsStructuralViolations) {
  auto c = small_chapter();
  c.sections.push_back({5, ""});
  c.sections.push_back({2, "dup"});
  c.exam.questions.push_back({"q1", "", std::nullopt, std::nullopt, {9}});
  const auto v = validate_chapter(c);
  EXPECT_TRUE(has(v, ViolationKind::NonContiguousSections));
  EXPECT_TRUE(has(v, ViolationKind::DuplicateSectionIndex));
  EXPECT_TRUE(has(v, ViolationKind::EmptySectionContent));
  EXPECT_TRUE(has(v, ViolationKind::DuplicateQuestionId));
  EXPECT_TRUE(has(v, ViolationKind::EmptyQuestionText));
  EXPECT_TRUE(has(v, ViolationKind::AlignmentOutOfRange));
}

TEST(Chapter, ExamSizeRulesApplyToCuratedChapters) {
  auto c = small_chapter();
  c.exam.questions.resize(9);
  EXPECT_TRUE(has(validate_chapter(c), ViolationKind::ExamTooSmall));
  c.curated = false;
  EXPECT_FALSE(has(validate_chapter(c), ViolationKind::ExamTooSmall));
  c = small_chapter();
  for (int i = 11; i <= 26; ++i) c.exam.questions.push_back({"q" + std::to_string(i), "x", {}, {}, {}});
  EXPECT_TRUE(has(validate_chapter(c), ViolationKind::ExamTooLarge));
}

TEST(Chapter, JsonRoundTrip) {
  auto c = small_chapter();
  c.exam.questions[0].reference_answer = "answer";
  c.exam.questions[0].bloom = Bloom::Analyzing;
  c.split = Split::Test;
  const json j = c;
  EXPECT_EQ(j.get<Chapter>(), c);
  EXPECT_EQ(json(j.get<Chapter>()).dump(), j.dump());
}

TEST(QAPair, IdIsStableAndContentSensitive) {
  Provenance p{Strategy::ZeroShot, "m", 0, 1, std::nullopt};
  const auto a = make_qa_id("ch", "q", "a", 1, p);
  EXPECT_EQ(a, make_qa_id("ch", "q", "a", 1, p));
  EXPECT_NE(a, make_qa_id("ch", "q", "a", 2, p));
  p.trial = 1;
  EXPECT_NE(a, make_qa_id("ch", "q", "a", 1, p));
  QAPair qa{a, "q", "a", 1, "ch", p};
  EXPECT_EQ(json(qa).get<QAPair>(), qa);
}

TEST(Hash, KnownDigestAndPartSeparation) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_NE(hash_parts({"ab", "c"}), hash_parts({"a", "bc"}));
  EXPECT_EQ(short_hash("abc").size(), 16u);
}

TEST(Strategy, StringRoundTrip) {
  for (Strategy s : {Strategy::ZeroShot, Strategy::FewShot, Strategy::CoT, Strategy::BloomBased, Strategy::FineTuned}) {
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  }
}
