#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "studysim/finetune.hpp"

using namespace studysim;
using namespace studysim::finetune;

namespace {

std::vector<UtilityRecord> records(const std::vector<double>& utilities) {
  std::vector<UtilityRecord> out;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    UtilityRecord r;
    r.qa_id = "qa" + std::to_string(i);
    r.utility = utilities[i];
    out.push_back(r);
  }
  return out;
}

FineTuneExample example(const std::string& id, const std::string& subject, int ordinal, int section) {
  return {id, subject, ordinal, section, "sys", "prompt for " + id, "question " + id};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Filter, ThresholdIsInclusive) {
  const auto r = filter_by_utility(records({0.1, 0.0999999, 0.5, -0.2}), 0.1);
  EXPECT_EQ(r.accepted, (std::vector<std::string>{"qa0", "qa2"}));
  EXPECT_EQ(r.rejected, (std::vector<std::string>{"qa1", "qa3"}));
}

TEST(Filter, NonFiniteThetaRejected) {
  EXPECT_THROW(filter_by_utility(records({0.1}), std::nan("")), Error);
  EXPECT_THROW(filter_by_utility(records({0.1}), INFINITY), Error);
}

TEST(Filter, AcceptedSetsShrinkAsThetaGrows) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> us(40);
    for (auto& x : us) x = u(rng);
    const auto recs = records(us);
    std::vector<std::string> prev = filter_by_utility(recs, -1.0).accepted;
    for (double theta = -0.9; theta <= 1.0; theta += 0.1) {
      const auto cur = filter_by_utility(recs, theta).accepted;
      for (const auto& id : cur) EXPECT_NE(std::find(prev.begin(), prev.end(), id), prev.end());
      prev = cur;
    }
  }
}

TEST(Jsonl, ChatFormatAndOrdering) {
  const std::string body =
      render_jsonl({example("b", "Chemistry", 2, 1), example("z", "Chemistry", 1, 3), example("a", "Chemistry", 1, 3)});
  std::vector<json> lines;
  std::istringstream in(body);
  for (std::string line; std::getline(in, line);) lines.push_back(json::parse(line));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0]["messages"][2]["content"], "question a");
  EXPECT_EQ(lines[1]["messages"][2]["content"], "question z");
  EXPECT_EQ(lines[2]["messages"][2]["content"], "question b");
  const auto& m = lines[0]["messages"];
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0]["role"], "system");
  EXPECT_EQ(m[1]["role"], "user");
  EXPECT_EQ(m[1]["content"], "prompt for a");
  EXPECT_EQ(m[2]["role"], "assistant");
}

TEST(Jsonl, EmptyDatasetRefused) {
  try {
    render_jsonl({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
}

TEST(Emit, SubjectAndCrossModes) {
  const auto dir = fixtures::temp_dir("emit");
  const std::vector<FineTuneExample> ex{example("a", "US History", 1, 1), example("b", "Chemistry", 1, 1),
                                        example("c", "Chemistry", 2, 1)};
  const auto by_subject = emit(ex, dir, "ft", ExportMode::Subject);
  ASSERT_EQ(by_subject.size(), 2u);
  EXPECT_EQ(by_subject.at("US History").filename(), "ft_US_History.jsonl");
  EXPECT_EQ(slurp(by_subject.at("Chemistry")), render_jsonl({ex[1], ex[2]}));
  const auto cross = emit(ex, dir, "ft", ExportMode::Cross);
  ASSERT_EQ(cross.size(), 1u);
  EXPECT_EQ(slurp(cross.at("cross")), render_jsonl(ex));
  EXPECT_THROW(emit({}, dir, "ft", ExportMode::Subject), Error);
}

TEST(ExportMode, Parsing) {
  EXPECT_EQ(parse_export_mode("cross"), ExportMode::Cross);
  EXPECT_EQ(to_string(parse_export_mode("subject")), "subject");
  EXPECT_THROW(parse_export_mode("both"), Error);
}
