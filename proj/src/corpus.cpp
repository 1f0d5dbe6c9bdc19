#include "studysim/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <regex>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "studysim/prompts.hpp"

namespace studysim::corpus {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string title_of(const RawChapterFile& raw) {
  std::istringstream in(raw.body_markdown);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) return trim(line.substr(2));
  }
  return raw.slug;
}

}  // namespace

FewShotExample default_few_shot() {
  FewShotExample ex;
  ex.input =
      "# 1.1 Introduction\n## Learning Objectives\n- Describe matter\n\n"
      "Matter is anything that occupies space and has mass.\n\n"
      "## States of Matter\nMatter exists as solids, liquids, and gases. The density is $\\rho = m/V$.\n\n"
      "## Summary\nMatter has mass and volume.\n";
  ex.output = json{{"section",
                    {{"1", {{"content", "Matter is anything that occupies space and has mass."}}},
                     {"2", {{"content", "Matter exists as solids, liquids, and gases. The density is \\rho = m/V."}}}}}}
                  .dump(4);
  return ex;
}

CorpusLayout scan_corpus(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::LayoutError, "corpus directory not found: " + root.string());
  CorpusLayout layout;
  static const std::regex kChapterDir(R"(^(\d+)_(.+)$)");
  std::vector<fs::path> subjects;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) subjects.push_back(entry.path());
  }
  std::sort(subjects.begin(), subjects.end());
  for (const auto& subject_dir : subjects) {
    const Subject subject = Subject::parse(subject_dir.filename().string());
    std::set<int> ordinals;
    for (const auto& entry : fs::directory_iterator(subject_dir)) {
      const std::string name = entry.path().filename().string();
      if (!entry.is_directory()) continue;
      if (name == "_fewshot") {
        const auto in = entry.path() / "input.md";
        const auto out = entry.path() / "output.json";
        if (fs::exists(in) && fs::exists(out)) {
          layout.few_shot[subject.name()] = {read_file(in), read_file(out)};
        } else {
          layout.violations.push_back(entry.path().string() + ": _fewshot needs input.md and output.json");
        }
        continue;
      }
      std::smatch m;
      if (!std::regex_match(name, m, kChapterDir)) {
        layout.violations.push_back(entry.path().string() + ": not an <ordinal>_<slug> chapter directory");
        continue;
      }
      RawChapterFile raw;
      raw.subject = subject;
      raw.ordinal = std::stoi(m[1].str());
      raw.slug = m[2].str();
      const auto body = entry.path() / "body.md";
      const auto exam = entry.path() / "exam.md";
      if (!fs::exists(body) || !fs::exists(exam)) {
        layout.violations.push_back(entry.path().string() + ": missing body.md or exam.md");
        continue;
      }
      if (!ordinals.insert(raw.ordinal).second) {
        layout.violations.push_back(entry.path().string() + ": duplicate ordinal " + std::to_string(raw.ordinal));
        continue;
      }
      raw.body_markdown = read_file(body);
      raw.exam_markdown = read_file(exam);
      layout.chapters.push_back(std::move(raw));
    }
  }
  std::sort(layout.chapters.begin(), layout.chapters.end(), [](const RawChapterFile& a, const RawChapterFile& b) {
    return std::pair(a.subject.name(), a.ordinal) < std::pair(b.subject.name(), b.ordinal);
  });
  if (layout.chapters.empty()) {
    throw Error(ErrorCode::LayoutError, "no chapter directories under " + root.string());
  }
  return layout;
}

std::string strip_markdown(std::string_view text) {
  static const std::regex kImage(R"(!\[[^\]]*\]\([^)]*\))");
  static const std::regex kLink(R"(\[([^\]]*)\]\([^)]*\))");
  static const std::regex kHtml(R"(<[^>]+>)");
  static const std::regex kEmphasis(R"(\*\*|__|\*|`)");
  static const std::regex kSpace(R"(\s+)");
  std::string s(text);
  s = std::regex_replace(s, kImage, "");
  s = std::regex_replace(s, kLink, "$1");
  s = std::regex_replace(s, kHtml, "");
  s = std::regex_replace(s, kEmphasis, "");
  s = std::regex_replace(s, kSpace, " ");
  return trim(s);
}

ExamExtraction extract_exam(std::string_view exam_markdown) {
  static const std::regex kStart(R"(^(?:\*\*)?(\d+)[.)](?:\*\*)?(?:\s+(.*))?$)");
  static const std::regex kAnswer(R"(^\s*(?:[*_]{0,2})answer(?:[*_]{0,2})\s*:\s*(?:[*_]{0,2})\s*(.*)$)",
                                  std::regex::icase);
  struct Draft {
    std::string stem;
    std::string answer;
    bool in_answer = false;
  };
  std::vector<Draft> drafts;
  std::optional<Draft> current;
  auto close = [&] {
    if (current) drafts.push_back(std::move(*current));
    current.reset();
  };

  std::istringstream in{std::string(exam_markdown)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line[0] == '#') {
      close();
      continue;
    }
    std::smatch m;
    if (std::regex_match(line, m, kStart)) {
      close();
      current = Draft{m[2].matched ? m[2].str() : std::string{}, {}, false};
      continue;
    }
    if (!current) continue;  // prose before the first question
    if (std::regex_match(line, m, kAnswer)) {
      current->in_answer = true;
      current->answer = m[1].str();
      continue;
    }
    auto& target = current->in_answer ? current->answer : current->stem;
    target += " " + trim(line);
  }
  close();

  ExamExtraction out;
  for (auto& d : drafts) {
    std::string stem = strip_markdown(d.stem);
    if (stem.empty()) {
      ++out.dropped_ill_formed;
      continue;
    }
    ExamQuestion q;
    q.text = std::move(stem);
    std::string answer = strip_markdown(d.answer);
    if (!answer.empty()) q.reference_answer = std::move(answer);
    out.questions.push_back(std::move(q));
  }
  if (out.questions.size() < kMinExamQuestions) {
    out.rejected = ChapterRejected{out.questions.size()};
  } else if (out.questions.size() > kMaxExamQuestions) {
    out.truncated = out.questions.size() - kMaxExamQuestions;
    out.questions.resize(kMaxExamQuestions);
  }
  for (std::size_t i = 0; i < out.questions.size(); ++i) out.questions[i].id = "q" + std::to_string(i + 1);
  return out;
}

std::vector<Section> segment_sections(Gateway& gateway, const RawChapterFile& raw, const FewShotExample& example,
                                      const CallSpec& spec, int attempts) {
  if (trim(raw.body_markdown).empty()) throw Error(ErrorCode::SegmentationError, "empty chapter body");
  const std::string prompt = prompts::segmentation(example.input, example.output, raw.body_markdown);
  auto sections = ask_json(gateway, spec, prompt, attempts, ErrorCode::SegmentationError,
                           "segmenting " + raw.slug, [](const json& j) -> std::optional<std::vector<Section>> {
                             if (!j.contains("section") || !j["section"].is_object()) return std::nullopt;
                             std::vector<std::pair<long, std::string>> numbered;
                             for (const auto& [key, value] : j["section"].items()) {
                               char* end = nullptr;
                               const long n = std::strtol(key.c_str(), &end, 10);
                               if (end == key.c_str() || *end != '\0') return std::nullopt;
                               std::string content;
                               if (value.is_object() && value.contains("content") && value["content"].is_string()) {
                                 content = value["content"].get<std::string>();
                               } else if (value.is_string()) {
                                 content = value.get<std::string>();
                               } else {
                                 return std::nullopt;
                               }
                               content = trim(content);
                               if (!content.empty()) numbered.emplace_back(n, std::move(content));
                             }
                             std::sort(numbered.begin(), numbered.end());
                             std::vector<Section> out;
                             for (auto& [n, content] : numbered) {
                               out.push_back({static_cast<int>(out.size()) + 1, std::move(content)});
                             }
                             return out;
                           });
  if (sections.empty()) throw Error(ErrorCode::SegmentationError, "segmentation returned no sections for " + raw.slug);
  return sections;
}

std::vector<ExamQuestion> classify_bloom(Gateway& gateway, std::vector<ExamQuestion> questions, const CallSpec& spec,
                                         int attempts) {
  if (questions.empty()) throw Error(ErrorCode::InvalidInput, "no questions to classify");
  for (std::size_t start = 0; start < questions.size(); start += kBloomBatch) {
    const std::size_t end = std::min(questions.size(), start + kBloomBatch);
    std::vector<std::string> texts;
    for (std::size_t i = start; i < end; ++i) texts.push_back(questions[i].text);
    const auto labels =
        ask_json(gateway, spec, prompts::bloom_classification(texts), attempts, ErrorCode::AnnotationError,
                 "Bloom classification", [&](const json& j) -> std::optional<std::vector<Bloom>> {
                   if (!j.contains("bloom_categories") || !j["bloom_categories"].is_array()) return std::nullopt;
                   const auto& arr = j["bloom_categories"];
                   if (arr.size() != texts.size()) return std::nullopt;
                   std::vector<Bloom> out;
                   for (const auto& item : arr) {
                     std::string label;
                     if (item.is_object()) {
                       label = item.value("bloom_category", std::string{});
                     } else if (item.is_string()) {
                       label = item.get<std::string>();
                     }
                     auto b = parse_bloom(label);
                     if (!b) return std::nullopt;
                     out.push_back(*b);
                   }
                   return out;
                 });
    for (std::size_t i = start; i < end; ++i) questions[i].bloom = labels[i - start];
  }
  return questions;
}

std::vector<AlignmentWarning> align_exam_to_sections(Gateway& gateway, Chapter& chapter, const CallSpec& spec,
                                                     int attempts) {
  if (chapter.sections.empty() || chapter.exam.questions.empty()) {
    throw Error(ErrorCode::InvalidInput, "alignment needs sections and exam questions");
  }
  std::vector<std::string> texts;
  for (const auto& q : chapter.exam.questions) texts.push_back(q.text);
  using Mapping = std::map<int, std::vector<int>>;
  const Mapping mapping =
      ask_json(gateway, spec, prompts::alignment(chapter.sections, texts), attempts, ErrorCode::AnnotationError,
               "aligning " + chapter.id, [](const json& j) -> std::optional<Mapping> {
                 if (!j.contains("alignments") || !j["alignments"].is_array()) return std::nullopt;
                 Mapping m;
                 for (const auto& item : j["alignments"]) {
                   if (!item.is_object() || !item.contains("question")) continue;
                   const auto& qn = item["question"];
                   int n = 0;
                   if (qn.is_number_integer()) {
                     n = qn.get<int>();
                   } else if (qn.is_string()) {
                     n = std::atoi(qn.get<std::string>().c_str());
                   }
                   for (const auto& s : item.value("sections", json::array())) {
                     if (s.is_number_integer()) m[n].push_back(s.get<int>());
                   }
                   m.try_emplace(n);
                 }
                 return m;
               });
  std::vector<AlignmentWarning> warnings;
  for (std::size_t i = 0; i < chapter.exam.questions.size(); ++i) {
    auto& q = chapter.exam.questions[i];
    q.aligned_sections.clear();
    const auto it = mapping.find(static_cast<int>(i) + 1);
    if (it == mapping.end()) continue;
    std::set<int> seen;
    for (int idx : it->second) {
      if (!chapter.section(idx)) {
        warnings.push_back({q.id, idx});
        spdlog::warn("{}: dropping out-of-range section {} for {}", chapter.id, idx, q.id);
        continue;
      }
      if (seen.insert(idx).second) q.aligned_sections.push_back(idx);
    }
    std::sort(q.aligned_sections.begin(), q.aligned_sections.end());
  }
  return warnings;
}

std::string chapter_id(const RawChapterFile& raw) {
  std::ostringstream os;
  os << raw.subject.name() << '-' << std::setw(2) << std::setfill('0') << raw.ordinal << '_' << raw.slug;
  return os.str();
}

CurationResult curate_chapter(Gateway& gateway, const RawChapterFile& raw, const FewShotExample& example,
                              const CurationOptions& options) {
  CurationResult result;
  ExamExtraction exam = extract_exam(raw.exam_markdown);
  result.dropped_ill_formed = exam.dropped_ill_formed;
  if (exam.rejected) {
    result.rejected = exam.rejected;
    return result;
  }
  Chapter ch;
  ch.id = chapter_id(raw);
  ch.subject = raw.subject;
  ch.ordinal = raw.ordinal;
  ch.title = title_of(raw);
  ch.sections = segment_sections(gateway, raw, example, options.segmentation, options.attempts);
  ch.exam.questions = classify_bloom(gateway, std::move(exam.questions), options.annotation, options.attempts);
  result.warnings = align_exam_to_sections(gateway, ch, options.annotation, options.attempts);
  ch.curated = true;
  result.chapter = std::move(ch);
  return result;
}

void split_train_test(std::vector<Chapter>& chapters) {
  const std::size_t needed = kTrainChapters + kTestChapters;
  if (chapters.size() < needed) {
    const std::string subject = chapters.empty() ? std::string("<none>") : chapters.front().subject.name();
    throw Error(ErrorCode::SplitError,
                subject + " has " + std::to_string(chapters.size()) + " curated chapters, need " + std::to_string(needed));
  }
  std::stable_sort(chapters.begin(), chapters.end(),
                   [](const Chapter& a, const Chapter& b) { return a.ordinal < b.ordinal; });
  for (std::size_t i = 0; i < chapters.size(); ++i) {
    chapters[i].split = i < kTrainChapters ? Split::Train : i < needed ? Split::Test : Split::Unassigned;
  }
}

CorpusStats corpus_stats(const std::vector<Chapter>& chapters) {
  std::map<std::pair<std::string, int>, std::vector<const Chapter*>> groups;
  for (const auto& c : chapters) groups[{c.subject.name(), static_cast<int>(c.split)}].push_back(&c);
  CorpusStats stats;
  for (const auto& [key, group] : groups) {
    CorpusStatsRow row;
    row.subject = group.front()->subject;
    row.split = group.front()->split;
    row.chapter_count = group.size();
    std::size_t questions = 0, answered = 0, sections = 0;
    std::vector<double> lengths;
    for (const Chapter* c : group) {
      questions += c->exam.questions.size();
      for (const auto& q : c->exam.questions) answered += q.reference_answer ? 1 : 0;
      sections += c->sections.size();
      for (const auto& s : c->sections) lengths.push_back(static_cast<double>(s.content.size()));
    }
    const double n = static_cast<double>(group.size());
    row.mean_exam_per_chapter = static_cast<double>(questions) / n;
    row.pct_with_reference_answer = questions ? 100.0 * static_cast<double>(answered) / static_cast<double>(questions) : 0.0;
    row.mean_sections_per_chapter = static_cast<double>(sections) / n;
    if (!lengths.empty()) {
      double mean = 0.0;
      for (double l : lengths) mean += l;
      mean /= static_cast<double>(lengths.size());
      double var = 0.0;
      for (double l : lengths) var += (l - mean) * (l - mean);
      row.section_length_variance = var / static_cast<double>(lengths.size());
    }
    stats.rows.push_back(row);
  }
  return stats;
}

json CorpusStats::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"subject", r.subject.name()},
                         {"split", std::string(to_string(r.split))},
                         {"chapter_count", r.chapter_count},
                         {"mean_exam_per_chapter", r.mean_exam_per_chapter},
                         {"pct_with_reference_answer", r.pct_with_reference_answer},
                         {"mean_sections_per_chapter", r.mean_sections_per_chapter},
                         {"section_length_variance", r.section_length_variance}});
  }
  return json{{"rows", rows_json}};
}

std::string CorpusStats::to_csv() const {
  std::ostringstream os;
  os << "Subject,#C,Split,#E/C,%E w/ answer,#S/C\n";
  os << std::fixed;
  for (const auto& r : rows) {
    os << r.subject.name() << ',' << r.chapter_count << ',' << to_string(r.split) << ',' << std::setprecision(1)
       << r.mean_exam_per_chapter << ',' << std::setprecision(0) << r.pct_with_reference_answer << "%,"
       << std::setprecision(1) << r.mean_sections_per_chapter << '\n';
  }
  return os.str();
}

}  // namespace studysim::corpus
