#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "clarity/mcq.hpp"

namespace clarity {

enum class Domain { legal, medical, generic };
enum class PromptLang { en, zh };

inline std::string domain_role(Domain d, PromptLang lang) {
  if (lang == PromptLang::zh) {
    switch (d) {
      case Domain::legal: return "法律";
      case Domain::medical: return "医学";
      case Domain::generic: return "学科";
    }
  }
  switch (d) {
    case Domain::legal: return "legal";
    case Domain::medical: return "medical";
    case Domain::generic: return "subject-matter";
  }
  return "subject-matter";
}

inline std::string render_template(std::string tpl,
                                   const std::map<std::string, std::string>& vars) {
  for (const auto& [key, value] : vars) {
    const std::string token = "{" + key + "}";
    size_t pos = 0;
    while ((pos = tpl.find(token, pos)) != std::string::npos) {
      tpl.replace(pos, token.size(), value);
      pos += value.size();
    }
  }
  return tpl;
}

inline std::string load_template_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open template file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Built-in templates. Files given in the judge config override these;
// placeholders use {name} substitution.
inline const char* consistency_template(PromptLang lang) {
  if (lang == PromptLang::zh) {
    return "你是一名{role}专家。下面给出一道{role}考试的多项选择题和一名学生的推理过程。"
           "请根据学生的推理，判断学生认为正确的选项，按照示例的格式，"
           "将学生认为正确的答案用大括号括起来，例如 \"{}\"、\"{B}\" 或 \"{ABD}\"。\n\n"
           "{examples}\n"
           "----\n"
           "现在，参考以上示例，分析下面的题目和学生的推理，给出学生认为正确的答案：\n"
           "题目：{question}\n"
           "推理：{reasoning}\n";
  }
  return "You are a {role} expert. You will be given a multiple-choice {role} "
         "exam question and a student's line of reasoning. Based on the "
         "student's reasoning, identify the final answer selected by the "
         "student. Follow the format in the examples below and enclose the "
         "answer the student believes is correct in curly braces, e.g. "
         "\"{}\", \"{B}\" or \"{ABD}\".\n\n"
         "{examples}\n"
         "----\n"
         "Now, based on the examples above, analyze the following question "
         "and the student's reasoning, and state the answer the student "
         "believes is correct:\n"
         "Question: {question}\n"
         "Reasoning: {reasoning}\n";
}

inline const char* polish_template(PromptLang lang) {
  if (lang == PromptLang::zh) {
    return "我是一名{role}学院的教授，正在为课程准备期末考试题。我想设计一道命题分析题，"
           "要求学生判断给定命题是否正确并说明理由。为此，我从多项选择题库中选取题干，"
           "与其中一个选项组合成待分析的命题。但题干可能仍带有选择题的表述"
           "（例如“下列哪项……？”）或多余的标点，导致语义不通。"
           "请帮我润色该命题：删除选择题相关表述，必要时调整句式或添加连接词，"
           "确保最终版本逻辑连贯、易于理解。你也可以通过调整语序、替换同义词，"
           "或引入不改变含义的虚构人名和地名来使命题多样化。"
           "请将润色后的命题放入大括号中。\n\n"
           "{examples}\n"
           "----\n"
           "原始命题：{original_statement}\n";
  }
  return "I am a {role} school professor preparing final exam questions for "
         "my {role} course. I would like to design a statement analysis "
         "question, where students are required to judge whether the given "
         "statement is correct and provide supporting reasoning. To do this, "
         "I select a question stem from my multiple-choice question bank and "
         "combine it with one of its answer options to transform it into a "
         "statement for analysis. However, the stem may still contain "
         "phrasing specific to multiple-choice format (e.g., \"Which of the "
         "following is ...?\") or redundant punctuation, and may result in "
         "illogical reasoning. Therefore, I need your help to polish the "
         "statement: remove any phrasing related to multiple-choice format, "
         "adjust sentence structure or add connecting words if necessary, "
         "and ensure that the final version is logically coherent and easy "
         "to understand. You should also diversify the statement by "
         "adjusting word order, replacing synonyms or conjunctions, or "
         "introducing fictional names and places that do not alter the "
         "meaning. This will help diversify the question bank. Please "
         "enclose the polished statement within curly braces.\n\n"
         "{examples}\n"
         "----\n"
         "Original statement: {original_statement}\n";
}

inline const char* quality_template() {
  return "You are a {role} expert. Below, you will find a {role} exam "
         "question along with two responses provided by two candidates. "
         "Please compare the quality of these two responses based on various "
         "factors, including but not limited to: the rationality of the "
         "answer, readability, logical coherence, clarity, and ease of "
         "understanding.\n\n"
         "Please evaluate both answers and determine which one is of higher "
         "quality. Use your expertise to carefully analyze the responses. "
         "Your final answer should highlight the better response by wrapping "
         "it in curly braces, either \"{Answer 1}\" or \"{Answer 2}\".\n"
         "----\n"
         "Question: {question}\n"
         "Answer 1: {answer_1}\n"
         "Answer 2: {answer_2}\n";
}

struct Exemplar {
  std::string question;
  std::string reasoning;
  std::string expected_braced_answer;  // brace-wrapped letter run, may be "{}"
};

// Repository-authored neutral exemplars; the original in-context examples
// are not published.
inline std::vector<Exemplar> default_exemplars(Domain d) {
  const std::string topic = d == Domain::legal    ? "a contract dispute"
                            : d == Domain::medical ? "a differential diagnosis"
                                                   : "a factual quiz";
  return {
      {"Regarding " + topic + ", which of the following statements are "
       "correct?\nA: statement one. B: statement two. C: statement three. "
       "D: statement four.",
       "Statement A is supported by the given facts, so A is correct. B "
       "contradicts the premise and is wrong. C restates A in different "
       "words and is also correct. D is unrelated.",
       "{AC}"},
      {"Regarding " + topic + ", which of the following statements are "
       "correct?\nA: first claim. B: second claim. C: third claim. D: "
       "fourth claim.",
       "Each claim fails under scrutiny: A misquotes the rule, B reverses "
       "cause and effect, C applies to a different case, and D is "
       "factually wrong. None of them holds.",
       "{}"},
      {"Regarding " + topic + ", which of the following statements are "
       "correct?\nA: alpha. B: beta. C: gamma. D: delta.",
       "Only B survives: A and C rest on an outdated assumption, D "
       "overgeneralizes. The student concludes B alone is right.",
       "{B}"},
  };
}

inline std::string format_exemplars(const std::vector<Exemplar>& exemplars) {
  std::ostringstream out;
  for (size_t i = 0; i < exemplars.size(); ++i) {
    out << "Example " << (i + 1) << ":\n"
        << "Question: " << exemplars[i].question << "\n"
        << "Reasoning: " << exemplars[i].reasoning << "\n"
        << "Answer: " << exemplars[i].expected_braced_answer << "\n\n";
  }
  return out.str();
}

inline std::string format_question(const MCQInstance& inst) {
  std::ostringstream out;
  out << inst.stem << "\n";
  for (const auto& o : inst.options) out << o.label << ": " << o.text << "\n";
  return out.str();
}

}  // namespace clarity
