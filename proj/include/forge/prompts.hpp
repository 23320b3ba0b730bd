#pragma once

#include <string>
#include <string_view>

// Prompt templates shared by the pipeline stages. The question, answer,
// critique, unit-evaluation and survey-persona templates are used verbatim;
// the remaining ones are short task instructions in the same register.
namespace forge::prompts {

extern const std::string_view question_generation;
extern const std::string_view answer_generation;
extern const std::string_view critique_generation;  // "{}" = cultural group
extern const std::string_view unit_evaluation;      // "{}" twice: unit, references
extern const std::string_view survey_persona;       // "{culture}" placeholders

extern const std::string_view passage_synthesis;
extern const std::string_view answerability_check;
extern const std::string_view target_answer;
extern const std::string_view unit_decomposition;
extern const std::string_view critique_unit_output;
extern const std::string_view critique_summary;
extern const std::string_view translation;       // "{language}"
extern const std::string_view back_translation;  // "{language}"
extern const std::string_view alignment_check;
extern const std::string_view json_reprompt;
extern const std::string_view survey_answer_format;

// Replaces successive "{}" placeholders with the given values.
std::string fill(std::string_view tmpl, std::initializer_list<std::string_view> values);

// Replaces every occurrence of `{name}`.
std::string fill_named(std::string_view tmpl, std::string_view name, std::string_view value);

}  // namespace forge::prompts
