#include "studysim/prompts.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace studysim::prompts {

namespace {

std::string one_line(std::string_view text) {
  std::string out(text);
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::replace(out.begin(), out.end(), '\r', ' ');
  return out;
}

constexpr std::string_view kQuestionFormat = R"(Output in the following JSON format:
```json
{
    "question": question
}
```)";

std::string reading_block(std::string_view preceding, std::string_view anchor) {
  std::string out = "Article: ";
  out += preceding;
  out += "\nStudent is currently reading the section: ";
  out += anchor;
  out += ".\n\n";
  return out;
}

}  // namespace

std::string_view bloom_definition(Bloom level) {
  switch (level) {
    case Bloom::Remembering:
      return "Producing or retrieving definitions, facts, or lists, or reciting previously learned information.";
    case Bloom::Understanding:
      return "Grasping the meaning of information by interpreting and translating what has been learned.";
    case Bloom::Applying: return "Using learned information in new and concrete situations.";
    case Bloom::Analyzing: return "Breaking down or distinguishing the parts of learned information.";
    case Bloom::Evaluating:
      return "Making judgments about information, validity of ideas, or quality of work based on a set of criteria.";
    case Bloom::Creating: return "Using information to generate new ideas or products.";
  }
  return "";
}

std::string question_zero_shot(std::string_view preceding, std::string_view anchor) {
  return reading_block(preceding, anchor) +
         "Generate a question that helps the student understand the section better.\n\n" +
         std::string(kQuestionFormat);
}

std::string question_few_shot(std::string_view preceding, std::string_view anchor,
                              const std::vector<FewShotExemplar>& exemplars) {
  std::string out = "Here are examples of textbook sections and exam questions written about them.\n\n";
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    out += "Example " + std::to_string(i + 1) + ":\nSection: " + exemplars[i].section +
           "\nQuestion: " + one_line(exemplars[i].question) + "\n\n";
  }
  out += reading_block(preceding, anchor);
  out += "Generate a question that helps the student understand the section better.\n\n";
  out += kQuestionFormat;
  return out;
}

std::string question_cot(std::string_view preceding, std::string_view anchor) {
  return reading_block(preceding, anchor) +
         "Generate a question that helps the student understand the section better.\n"
         "First reason step by step about what the student needs to understand, then write the question.\n\n"
         R"(Output in the following JSON format:
```json
{
    "reasoning": reasoning,
    "question": question
}
```)";
}

std::string bloom_next_paragraph(Bloom level, std::string_view full_context) {
  std::string out = "Use the cognitive process of ";
  out += to_string(level);
  out += ": ";
  out += bloom_definition(level);
  out += "\nto generate the next paragraph for the following\n"
         "text that will help the student understand the content better:\n\n";
  out += full_context;
  out += R"(

Output in the following JSON format:
{
    "next_paragraph": next_paragraph
})";
  return out;
}

std::string bloom_bridge_question(std::string_view context, std::string_view next_paragraph) {
  std::string out =
      "Given the input context and the next paragraph,\n"
      "what is the key question that connects the two?\n\n"
      "Input context: ";
  out += context;
  out += "\nNext paragraph: ";
  out += next_paragraph;
  out += R"(

Output in the following JSON format:
{
    "question": question
})";
  return out;
}

std::string answer_batch(const std::vector<std::string>& questions) {
  std::string out = "questions: " + nlohmann::json(questions).dump() + "\n\n";
  out += R"(Answer each question shortly and output
in following JSON format:
```json
{
    "qa_pairs": [
        {"question": question_1, "answer": answer_1},
        {"question": question_2, "answer": answer_2},
        ...
        {"question": question_n, "answer": answer_n},
    ]
}
```)";
  return out;
}

std::string learning_materials(const std::vector<QAPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    if (!out.empty()) out += "\n\n";
    out += "Question: " + one_line(p.question) + "\nAnswer: " + one_line(p.answer);
  }
  return out;
}

std::string learner(std::string_view materials, const Exam& exam) {
  std::string exam_text;
  for (std::size_t i = 0; i < exam.questions.size(); ++i) {
    if (i) exam_text += "\n";
    exam_text += std::to_string(i + 1) + ". " + one_line(exam.questions[i].text);
  }
  std::string out = R"(You are now a learner participating in a structured learning simulation.
Your task is to:

1. **Study the Provided Learning Materials:** Carefully read and understand
   the content enclosed in the [LEARNING MATERIALS] tags.

2. **Answer the Exam Questions Using Only the Learning Materials:**
   When you respond to the questions in the [EXAM], you must:
   - Base all answers solely on the information contained in the
     [LEARNING MATERIALS].
   - Clearly show how your reasoning follows from the [LEARNING MATERIALS].
   - If the question asks about something not covered in the
     [LEARNING MATERIALS], do not provide an answer or guess. Instead,
     respond exactly with:

     )";
  out += kRefusal;
  out += R"(

   - Do not use information from outside the [LEARNING MATERIALS].

3. **No External Knowledge or Guessing:**
   Provide no additional reasoning or information if the content is not in
   the [LEARNING MATERIALS].

Let's begin.

[LEARNING MATERIALS]
)";
  out += materials;
  out += R"(
[/LEARNING MATERIALS]

Now, proceed to the exam below and answer as instructed:

[EXAM]
)";
  out += exam_text;
  out += R"(
[/EXAM]

Response answers in the following JSON format (key: Exam question number,
value: your answer):
{
    "1": "< your answer to exam question 1 >",
    "2": "< your answer to exam question 2 >",
    ...
})";
  return out;
}

std::string evaluator(std::string_view document, std::string_view question,
                      const std::optional<std::string>& ground_truth, std::string_view prediction) {
  std::string out = "You are a teacher who is evaluating a student's understanding of a document.\n\n";
  out += "Here is the document:\n";
  out += document;
  out += "\n\nNow, determine the correctness of the student's answers to the following\nquestion.\n\n";
  out += "question:\n";
  out += question;
  out += "\n\nground truth:\n";
  out += ground_truth ? *ground_truth : std::string("None");
  out += "\n\nstudent's answer:\n";
  out += prediction;
  out += R"(

Please provide a score between 0 and 1, where:
- 0 indicates the student's answer is completely incorrect.
- 1 indicates the student's answer is completely correct.

If ground truth is not provided (e.g., None), determine the correctness of
the student's answer based on your own understanding of the document.

Answer in the following JSON format:

{
    "score": <score>,
    "feedback": "<feedback>"
})";
  return out;
}

std::string segmentation(std::string_view example_input, std::string_view example_output,
                         std::string_view target_content) {
  std::string out = R"(Instructions for extracting sections from the given textbook content:

1. Transform markdown for equations into LaTeX and remove all other markdown
   formatting to only keep the raw content.
2. Split the content into sections of uniform length and number each section.
3. Skip the learning objectives, key concepts, and summary content.
4. Ensure that all content, except skipped parts, is covered verbatim in at
   least one of the resulting sections.

# EXAMPLE
## INPUT:
)";
  out += example_input;
  out += "\n\n## OUTPUT:\n";
  out += example_output;
  out += R"(

Produce only valid JSON with the following format:
{
    "section": {
        "1": {
            "content": "Verbatim section 1 content from chapter"
        },
        ...
    }
}

# TARGET TEXTBOOK CONTENT:
)";
  out += target_content;
  return out;
}

std::string bloom_classification(const std::vector<std::string>& questions) {
  std::string out = R"(Classify the questions into one of the six main categories of Bloom's
Taxonomy based on the cognitive processes required for answering it correctly.

Bloom's Taxonomy Categories:
)";
  int n = 1;
  for (Bloom b : kAllBloom) {
    out += std::to_string(n++) + ". " + std::string(to_string(b)) + ": " + std::string(bloom_definition(b)) + "\n";
  }
  out += "\n";
  for (std::size_t i = 0; i < questions.size(); ++i) {
    out += "Question " + std::to_string(i + 1) + ": " + one_line(questions[i]) + "\n";
  }
  out += R"(
Provide only the Bloom category and format your response in JSON with the
following structure:
{
    "bloom_categories": [
        {
            "question": question,
            "bloom_category": bloom_category
        }
    ]
})";
  return out;
}

std::string alignment(const std::vector<Section>& sections, const std::vector<std::string>& questions) {
  std::string out =
      "Below are the numbered sections of a textbook chapter followed by its end-of-chapter exam questions.\n"
      "For each exam question, list the numbers of the sections that are relevant for answering it.\n"
      "Use an empty list when no section is relevant.\n\n";
  for (const auto& s : sections) {
    out += "<section index=\"" + std::to_string(s.index) + "\">\n" + s.content + "\n</section>\n";
  }
  out += "\n";
  for (std::size_t i = 0; i < questions.size(); ++i) {
    out += "Question " + std::to_string(i + 1) + ": " + one_line(questions[i]) + "\n";
  }
  out += R"(
Output in the following JSON format:
{
    "alignments": [
        {"question": 1, "sections": [2, 3]},
        ...
    ]
})";
  return out;
}

std::string salience(std::string_view article, std::string_view question) {
  std::string out = "Article: ";
  out += article;
  out += "\nQuestion: ";
  out += question;
  out += R"(

System Instructions
Imagine you are a curious reader going through the article. You come across a question and need to determine whether it should be answered within the article or not. Your task is to assign a score based on the relevance and necessity of answering the question.

Scoring Criteria
- Score = 1: The question is completely unrelated to the article.
- Score = 2: The question is related but already answered in the article.
- Score = 3: The question is related but answering it is not essential, as it expands on a minor or non-central idea.
- Score = 4: The question is related and answering it enhances the reader's understanding of the article.
- Score = 5: The question is related and must be answered, as it expands on central ideas of the article.

Scoring Guidelines
- The score is based on the information utility of the answer.
- If a question is related but not central or necessary, do NOT assign it a high score.
- Assign Score 3 if the question is unanswered but not critical, and Score 2 if it has already been answered.
- Distinguishing Scores 4 and 5:
  - If the article would feel incomplete without the answer, assign Score 5.
  - Otherwise, assign Score 4.
- A Score of 4 is useful, but other questions may be more important.
- A Score of 5 is reserved for must-answer, central questions.
- Avoid bias toward high scores and carefully follow the instructions.

The score should strictly be an integer between 1 and 5.

Score:)";
  return out;
}

std::string eig_prior(std::string_view article, std::string_view question) {
  std::string out = "Imagine you are a reader encountering a question in the article.\n\nArticle: ";
  out += article;
  out += "\n\nQuestion: ";
  out += question;
  out += "\n\nAnswer:";
  return out;
}

std::string eig_posterior(std::string_view article, std::string_view question, std::string_view first_token) {
  return eig_prior(article, question) + " " + std::string(first_token);
}

}  // namespace studysim::prompts
