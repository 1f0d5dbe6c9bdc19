#include "studysim/keyword_world.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

#include "studysim/domain.hpp"
#include "studysim/prompts.hpp"

namespace studysim::mock {

namespace {

std::string_view between_last(std::string_view text, std::string_view open, std::string_view close) {
  const auto start = text.rfind(open);
  if (start == std::string_view::npos) return {};
  const auto body = start + open.size();
  const auto end = text.find(close, body);
  return text.substr(body, end == std::string_view::npos ? std::string_view::npos : end - body);
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// "N. text" / "Question N: text" style numbered lines.
std::vector<std::pair<int, std::string>> numbered(std::string_view block, const std::regex& pattern) {
  std::vector<std::pair<int, std::string>> out;
  for (const auto& line : lines_of(block)) {
    std::smatch m;
    if (std::regex_match(line, m, pattern)) out.emplace_back(std::stoi(m[1].str()), m[2].str());
  }
  return out;
}

std::string learner_reply(const MockScript& script, const std::string& prompt) {
  const auto materials = between_last(prompt, "[LEARNING MATERIALS]\n", "\n[/LEARNING MATERIALS]");
  std::vector<std::string> studied;
  for (const auto& line : lines_of(materials)) {
    if (line.rfind("Question: ", 0) == 0) studied.push_back(line.substr(10));
  }
  static const std::regex kItem(R"(^(\d+)\. (.*)$)");
  json reply = json::object();
  for (const auto& [n, text] : numbered(between_last(prompt, "[EXAM]\n", "\n[/EXAM]"), kItem)) {
    const std::string kw = first_keyword(text, script.keywords);
    const bool known = !kw.empty() && std::any_of(studied.begin(), studied.end(), [&](const std::string& q) {
      return q.find(kw) != std::string::npos;
    });
    reply[std::to_string(n)] = known ? std::string(kStudiedMarker) + " " + kw + "." : std::string(prompts::kRefusal);
  }
  return reply.dump();
}

std::string evaluator_reply(const std::string& prompt) {
  const std::string answer = trim(between_last(prompt, "student's answer:\n", "\n\nPlease provide a score"));
  const bool correct = answer.rfind(kStudiedMarker, 0) == 0;
  return json{{"score", correct ? 1.0 : 0.0}, {"feedback", correct ? "correct" : "not answered"}}.dump();
}

std::string question_reply(const MockRule& rule, const MockScript& script, const std::string& prompt) {
  std::size_t pos = std::string::npos;
  for (std::string_view marker : {"currently reading the section: ", "Input context: "}) {
    const auto p = prompt.rfind(marker);
    if (p != std::string::npos && (pos == std::string::npos || p > pos)) pos = p + marker.size();
  }
  const std::string_view region = pos == std::string::npos ? std::string_view(prompt)
                                                           : std::string_view(prompt).substr(pos);
  const std::string kw = last_keyword(region, script.keywords);
  std::string question;
  if (kw.empty()) {
    question = rule.options.value("fallback", std::string("What is the main idea of this section?"));
  } else {
    question = rule.options.value("template", std::string("What is {keyword} and why does it matter?"));
    const auto at = question.find("{keyword}");
    if (at != std::string::npos) question.replace(at, 9, kw);
  }
  json reply{{"question", question}};
  if (prompt.find("\"reasoning\"") != std::string::npos) {
    reply["reasoning"] = "The section centers on " + (kw.empty() ? std::string("its main idea") : kw) + ".";
  }
  return "```json\n" + reply.dump(4) + "\n```";
}

std::string paragraph_reply(const MockScript& script, const std::string& prompt) {
  const auto region = between_last(prompt, "understand the content better:\n\n", "\n\nOutput in the following");
  const std::string kw = last_keyword(region, script.keywords);
  return json{{"next_paragraph", "This paragraph elaborates on " + (kw.empty() ? std::string("the topic") : kw) + "."}}
      .dump();
}

std::string answerer_reply(const MockScript& script, const std::string& prompt) {
  std::vector<std::string> questions;
  for (const auto& line : lines_of(prompt)) {
    if (line.rfind("questions: ", 0) == 0) {
      questions = json::parse(line.substr(11)).get<std::vector<std::string>>();
      break;
    }
  }
  json pairs = json::array();
  for (const auto& q : questions) {
    const std::string kw = first_keyword(q, script.keywords);
    pairs.push_back({{"question", q},
                     {"answer", kw.empty() ? std::string("It is explained in the textbook.")
                                           : kw + " is covered in the textbook."}});
  }
  return json{{"qa_pairs", pairs}}.dump();
}

std::string aligner_reply(const MockScript& script, const std::string& prompt) {
  static const std::regex kSection(R"re(<section index="(\d+)">\n([\s\S]*?)\n</section>)re");
  std::vector<std::pair<int, std::string>> sections;
  for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), kSection); it != std::sregex_iterator(); ++it) {
    sections.emplace_back(std::stoi((*it)[1].str()), (*it)[2].str());
  }
  static const std::regex kQuestion(R"(^Question (\d+): (.*)$)");
  json alignments = json::array();
  for (const auto& [n, text] : numbered(prompt, kQuestion)) {
    const std::string kw = first_keyword(text, script.keywords);
    std::vector<int> hits;
    if (!kw.empty()) {
      for (const auto& [idx, content] : sections) {
        if (content.find(kw) != std::string::npos) hits.push_back(idx);
      }
    }
    alignments.push_back({{"question", n}, {"sections", hits}});
  }
  return json{{"alignments", alignments}}.dump();
}

std::string salience_reply(const MockScript& script, const std::string& prompt) {
  const auto question = between_last(prompt, "\nQuestion: ", "\n\nSystem Instructions");
  return first_keyword(question, script.keywords).empty() ? "2" : "5";
}

bool skipped_header(std::string header) {
  std::transform(header.begin(), header.end(), header.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const char* s : {"learning objectives", "key concepts", "summary"}) {
    if (header.find(s) != std::string::npos) return true;
  }
  return false;
}

std::string segment_reply(const std::string& prompt) {
  const auto marker = prompt.rfind("# TARGET TEXTBOOK CONTENT:\n");
  const std::string target = marker == std::string::npos ? prompt : prompt.substr(marker + 27);
  json sections = json::object();
  int n = 0;
  std::string body;
  bool skipping = false;
  auto flush = [&] {
    const std::string t = trim(body);
    if (!skipping && !t.empty()) sections[std::to_string(++n)] = {{"content", t}};
    body.clear();
  };
  for (const auto& line : lines_of(target)) {
    if (!line.empty() && line[0] == '#') {
      flush();
      skipping = skipped_header(line);
      continue;
    }
    body += line + "\n";
  }
  flush();
  return json{{"section", sections}}.dump();
}

std::string bloom_reply(const MockRule& rule, const std::string& prompt) {
  static const std::regex kQuestion(R"(^Question (\d+): (.*)$)");
  const std::string fixed = rule.options.value("category", std::string("Remembering"));
  const bool cycle = rule.options.value("cycle", false);
  json cats = json::array();
  std::size_t i = 0;
  for (const auto& [n, text] : numbered(prompt, kQuestion)) {
    const std::string label = cycle ? std::string(to_string(kAllBloom[i % 6])) : fixed;
    cats.push_back({{"question", text}, {"bloom_category", label}});
    ++i;
  }
  return json{{"bloom_categories", cats}}.dump();
}

}  // namespace

std::string first_keyword(std::string_view text, const std::vector<std::string>& keywords) {
  for (const auto& k : keywords) {
    if (!k.empty() && text.find(k) != std::string_view::npos) return k;
  }
  return {};
}

std::string last_keyword(std::string_view text, const std::vector<std::string>& keywords) {
  std::string best;
  std::size_t best_pos = 0;
  for (const auto& k : keywords) {
    if (k.empty()) continue;
    const auto p = text.rfind(k);
    if (p != std::string_view::npos && (best.empty() || p > best_pos)) {
      best = k;
      best_pos = p;
    }
  }
  return best;
}

std::string respond(const MockRule& rule, const MockScript& script, const std::string& prompt) {
  const std::string& name = *rule.responder;
  if (name == "keyword-learner") return learner_reply(script, prompt);
  if (name == "keyword-evaluator") return evaluator_reply(prompt);
  if (name == "keyword-question") return question_reply(rule, script, prompt);
  if (name == "keyword-paragraph") return paragraph_reply(script, prompt);
  if (name == "keyword-answerer") return answerer_reply(script, prompt);
  if (name == "keyword-aligner") return aligner_reply(script, prompt);
  if (name == "segment-headers") return segment_reply(prompt);
  if (name == "bloom-constant") return bloom_reply(rule, prompt);
  if (name == "keyword-salience") return salience_reply(script, prompt);
  throw Error(ErrorCode::ConfigError, "unknown mock responder '" + name + "'");
}

}  // namespace studysim::mock
