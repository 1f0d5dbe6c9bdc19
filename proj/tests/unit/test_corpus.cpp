#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "studysim/corpus.hpp"

using namespace studysim;
using namespace studysim::corpus;

namespace {

struct World {
  std::vector<std::string> keywords = fixtures::all_keywords(2, 30, 6);
  std::shared_ptr<MockBackend> backend =
      std::make_shared<MockBackend>(MockScript::from_json(fixtures::keyword_world_script(keywords)));
  Gateway gateway{backend, GatewayOptions{}};
  CurationOptions options{{"m", 0.0, 0, 2048, std::nullopt}, {"m", 0.0, 0, 2048, std::nullopt}, 3};
};

std::string numbered_exam(int n) {
  std::string out;
  for (int i = 1; i <= n; ++i) out += std::to_string(i) + ". Question number " + std::to_string(i) + "?\n";
  return out;
}

}  // namespace

TEST(ExtractExam, NumberedItemsOptionsAndAnswers) {
  const std::string md =
      "# Review\n\nIntro prose.\n\n1. What is **osmosis**?\n   A. diffusion\n   B. filtration\nAnswer: A\n"
      "2) Name [two](http://x) organelles.\n" +
      [] {
        std::string s;
        for (int i = 3; i <= 10; ++i) s += std::to_string(i) + ". Item " + std::to_string(i) + "\n";
        return s;
      }();
  const auto out = extract_exam(md);
  ASSERT_FALSE(out.rejected.has_value());
  ASSERT_EQ(out.questions.size(), 10u);
  EXPECT_EQ(out.questions[0].text, "What is osmosis? A. diffusion B. filtration");
  EXPECT_EQ(out.questions[0].reference_answer, "A");
  EXPECT_EQ(out.questions[1].text, "Name two organelles.");
  EXPECT_FALSE(out.questions[1].reference_answer.has_value());
  EXPECT_EQ(out.questions[0].id, "q1");
  EXPECT_EQ(out.questions[9].id, "q10");
}

TEST(ExtractExam, CapsAtTwentyFiveKeepingOrder) {
  const auto out = extract_exam(numbered_exam(30));
  ASSERT_EQ(out.questions.size(), 25u);
  EXPECT_EQ(out.truncated, 5u);
  for (int i = 0; i < 25; ++i) EXPECT_EQ(out.questions[i].text, "Question number " + std::to_string(i + 1) + "?");
}

TEST(ExtractExam, RejectsFewerThanTen) {
  const auto out = extract_exam(numbered_exam(9));
  ASSERT_TRUE(out.rejected.has_value());
  EXPECT_EQ(out.rejected->count, 9u);
}

TEST(ExtractExam, EmptyStemsAreDropped) {
  const auto out = extract_exam(numbered_exam(10) + "11.\n");
  EXPECT_EQ(out.dropped_ill_formed, 1u);
  EXPECT_EQ(out.questions.size(), 10u);
}

TEST(StripMarkdown, RemovesFormatting) {
  EXPECT_EQ(strip_markdown("**bold** and `code` ![img](a.png) <b>x</b>\n\n  y"), "bold and code x y");
}

TEST(ScanCorpus, ReportsLayoutViolations) {
  const auto root = fixtures::temp_dir("scan");
  fixtures::write_corpus(root, {{"Microbiology", fixtures::chapters(2)}});
  fs::create_directories(root / "Microbiology" / "notes");
  fs::create_directories(root / "Microbiology" / "03_missing");
  const auto layout = scan_corpus(root);
  EXPECT_EQ(layout.chapters.size(), 2u);
  EXPECT_EQ(layout.violations.size(), 2u);
  EXPECT_EQ(layout.chapters[0].ordinal, 1);
  EXPECT_EQ(layout.chapters[1].slug, "chapter-02");
}

TEST(ScanCorpus, MissingOrEmptyRootIsLayoutError) {
  const auto root = fixtures::temp_dir("scan-empty");
  EXPECT_THROW(scan_corpus(root), Error);
  EXPECT_THROW(scan_corpus(root / "nope"), Error);
}

TEST(Curate, KeywordWorldChapterIsSegmentedAnnotatedAndAligned) {
  World w;
  const auto root = fixtures::temp_dir("curate");
  fixtures::write_corpus(root, {{"Chemistry", {{1, 4, 12}}}});
  const auto layout = scan_corpus(root);
  const auto r = curate_chapter(w.gateway, layout.chapters[0], default_few_shot(), w.options);
  ASSERT_TRUE(r.chapter.has_value());
  const Chapter& c = *r.chapter;
  EXPECT_EQ(c.id, "Chemistry-01_chapter-01");
  ASSERT_EQ(c.sections.size(), 4u);
  EXPECT_EQ(c.sections[2].content, fixtures::section_sentence(1, 1, 3));
  ASSERT_EQ(c.exam.questions.size(), 12u);
  for (std::size_t q = 0; q < 12; ++q) {
    EXPECT_EQ(c.exam.questions[q].aligned_sections, std::vector<int>{static_cast<int>(q % 4) + 1});
    EXPECT_EQ(c.exam.questions[q].bloom, kAllBloom[q % 6]);
  }
  EXPECT_TRUE(validate_chapter(c).empty());
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Curate, RejectedChapterMakesNoCalls) {
  World w;
  const auto root = fixtures::temp_dir("curate-reject");
  fixtures::write_corpus(root, {{"Chemistry", {{1, 3, 9}}}});
  const auto r = curate_chapter(w.gateway, scan_corpus(root).chapters[0], default_few_shot(), w.options);
  EXPECT_FALSE(r.chapter.has_value());
  ASSERT_TRUE(r.rejected.has_value());
  EXPECT_EQ(w.backend->calls(), 0u);
}

TEST(Split, FirstTwentyTrainNextFiveTest) {
  std::vector<Chapter> chapters(27);
  for (int i = 0; i < 27; ++i) chapters[i].ordinal = 27 - i;
  split_train_test(chapters);
  for (const auto& c : chapters) {
    const Split want = c.ordinal <= 20 ? Split::Train : c.ordinal <= 25 ? Split::Test : Split::Unassigned;
    EXPECT_EQ(c.split, want) << c.ordinal;
  }
}

TEST(Split, TooFewChaptersIsSplitError) {
  std::vector<Chapter> chapters(24);
  try {
    split_train_test(chapters);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SplitError);
  }
}

TEST(Stats, PerSubjectAndSplitRows) {
  std::vector<Chapter> chapters(2);
  for (auto& c : chapters) {
    c.subject = Subject::parse("Economics");
    c.split = Split::Train;
    c.sections = {{1, "aa"}, {2, "aaaa"}};
    c.exam.questions = {{"q1", "x", std::string("y"), {}, {}}, {"q2", "x", {}, {}, {}}};
  }
  chapters[1].exam.questions.push_back({"q3", "x", std::string("z"), {}, {}});
  const auto stats = corpus_stats(chapters);
  ASSERT_EQ(stats.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(stats.rows[0].mean_exam_per_chapter, 2.5);
  EXPECT_DOUBLE_EQ(stats.rows[0].pct_with_reference_answer, 60.0);
  EXPECT_DOUBLE_EQ(stats.rows[0].mean_sections_per_chapter, 2.0);
  EXPECT_DOUBLE_EQ(stats.rows[0].section_length_variance, 1.0);
  EXPECT_EQ(stats.to_csv(), "Subject,#C,Split,#E/C,%E w/ answer,#S/C\nEconomics,2,Train,2.5,60%,2.0\n");
}
