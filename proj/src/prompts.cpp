#include "forge/prompts.hpp"

namespace forge::prompts {

const std::string_view question_generation =
    R"(You are a helpful expert in generating cultural-aware quetions through cultural knowledge. You are privided with a piece of cultural knowledge and the background of the cultural knowledge. Your task is to generate a single question based on the cultural knowledge that is given to you. The input form is encoded as JSON format, and below is its JSON fields:
{"cultural_group": "", "topic": "", "source": "", "cultural_knowledge": ""}

the detailed explanation of the fields are as follows:
-cultural_group: the country or the cultural group where the cultural knowledge is from
-topic: the topic of the cultural knowledge
-source: the source of the cultural knowledge
-cultural_knowledge: the cultural knowledge that is provided to you, which should pay most attention

Please strictly follow the following rules:
1. Factuality: Your question should only stems from the cultural knowledge that is provided to you and you shouldn't add other knowledge to your generated question.
2. Specificity: Your question should cover the main idea of the cultural knowledge and should be comprehensive, but not too broad. Try to specific the question with the cultural knowledge and do not ask too general questions.
3. Coverage: You should carefully understand the cultural knowledge and extract the cultural knowledge points as much as possible. And use these cultural knowledge ponints to formulate your question.)";

const std::string_view answer_generation =
    R"(You are a helpful consultant for a cultural knowledge question answering scenario. You are given the following question and its cultural knowledge. Your task is to generate a culturally-aware answer to the question based on the cultural knowledge.

Remember, your answer should be encoded in JSON format. The detailed explanation of the fields is as follows:

{"answer": "", "cultural_group": "", "language": "", "topic": ""}

answer: your answer to the question
cultural_group: the country or the cultural group your answer points to
language: the language that the cultural group mainly speaks
topic: the main topic of your answer

--------

Notably, the question stems from the cultural knowledge, so your answer should also be based on the provided cultural knowledge. You should always follow the instructions and directly answer the questions that are provided to you.
<example_start>
...
<example_end>
Remember, your answer should correlate with the cultural knowledge . You should only return the answer.

Your Answer:)";

const std::string_view critique_generation =
    R"(You are an expert reviewer for a cultural knowledge question answering system. You have plenty of cultural knowledge in {}.

You are given a JSON object and the detailed explanation of the fields are as follows:
{"question":"","grounded_answer":"", "answer_to_critique":"", "grounded_answer_knowledge_points":"", "knowledge_points_to_critique": ""}
-question: the cultural question that is given to you
-grounded_answer: the grounded answer to the question, which is the reference answer
-answer_to_critique: the answer that you should critique
-grounded_answer_knowledge_points: the knowledge points extracted from the grounded answer, each knowledge point is a single sentence and is seperated with a comma in a list
-knowledge_points_to_critique: the knowledge points extracted from the answer_to_critique, each knowledge point is a single sentence and is seperated with a comma in a list

You should compare the grounded_answer_knowledge_points  and the answer_knowledge_points and provide a detailed critique based on the comparison. And your critique should based on the principles below:
1. Correctness: Be sure to point out any factual inaccuracies or errors in the answer_to_critique and provide corrections based on the grounded_answer_knowledge_points.
2. Comprehensiveness: The answer_to_critique should cover the main points of the grounded_answer and should not miss any key information, if the answer_to_critique miss the cultural knowledge points, you should say "not addressed clearly" between the comparison.
3. Stability: If the grounded_answer_knowledge_points and the knowledge_points_to_critique are mainly the same, you should say "Roughly the same" in your critique.
4. Point by point: You should compare the grounded_answer_knowledge_points and knowledge_points_to_critique point by point and provide your critique based on the comparison. Between the comparison, you should choose the most relevant knowledge_points_to_critique from the list while comparing the grounded_answer_knowledge_points.

You should always follow the instructions and carefully compare the grounded_answer_knowledge_points and the answer_knowledge_points point by point and provide your critique.
Remember, you should directly compare the grounded_knowledge_points and knowledge_points_to_critique and point out the flaws made by knowledge_points_to_critique.)";

const std::string_view unit_evaluation =
    R"(You are an expert evaluator for a cultural knowledge question answering system. You are given a piece of cultural knowledge point and a list of reference cultural knowledge. Your task is to evaluate whether the given cultural knowledge point satisfies one of the reference cultural knowledge points and give a concise explanation.
Here are some examples and explanations:
</example>
<example/>

Remember, Your output should first generate 'Yes' or 'No', and give a concise explanation of your evaluation.
If your answer is "Yes", your explanation should specifically incorporate the given cultural knowledge point satisfies which reference cultural knowledge point.
cultural knowledge points:
{}
reference cultural knowledge points:
{}
Your output:)";

const std::string_view survey_persona =
    "You are a {culture} chatbot that know {culture} very well. Now your task is to represent the people in "
    "{culture} and answer the following question. Please be sure that you should only consider the culture of "
    "{culture} when answering the question.";

const std::string_view passage_synthesis =
    R"(You are given a list of related cultural statements that share a cultural group and a topic. Rewrite them into one coherent knowledge paragraph. Keep every fact from the statements, do not add facts that are not stated, and return only the paragraph.

Input:)";

const std::string_view answerability_check =
    R"(You are given a piece of cultural knowledge and a question. Decide whether the question can be fully answered using only the given cultural knowledge. First answer 'Yes' or 'No', then give a one-sentence reason.

Input:)";

const std::string_view target_answer =
    R"(Answer the cultural question below in the same JSON format as the examples: {"answer": "", "cultural_group": "", "language": "", "topic": ""}. Return only the JSON object.
)";

const std::string_view unit_decomposition =
    R"(Decompose the following answer into atomic cultural knowledge points. Each knowledge point must be a single self-contained sentence stating one claim. Return a JSON object {"knowledge_points": ["...", "..."]} and nothing else.

Answer:
)";

const std::string_view critique_unit_output =
    R"(This time the grounded_answer_knowledge_points list holds a single knowledge point. Compare it against the knowledge_points_to_critique list and reply with one small JSON object:
{"grounded_answer_knowledge_points": "", "knowledge_points_to_critique": "", "category": "", "Critique": ""}
-knowledge_points_to_critique: the most relevant knowledge point copied verbatim from the list, or "Not addressed clearly." if none covers it
-category: one of "semantic_equivalence", "unaddressed_knowledge", "contradictory_statement"
-Critique: your meta critique for this knowledge point

You answer:)";

const std::string_view critique_summary =
    R"(You are given the point-by-point critiques of an answer to a cultural question. Each critique compares one knowledge point of the grounded answer with the answer being critiqued. Summarize all of them into one comprehensive critique paragraph that points out the missing and contradictory cultural knowledge and what should be corrected. Return only the paragraph.

Critiques:
)";

const std::string_view translation =
    R"(Translate the following text into {language}. Preserve the meaning, names and cultural terms exactly. Return only the translation.

Text:
)";

const std::string_view back_translation =
    R"(Translate the following {language} text into English. Preserve the meaning exactly. Return only the translation.

Text:
)";

const std::string_view alignment_check =
    R"(You are given an original English text and a text that was translated into another language and back into English. Decide whether both texts carry the same semantic meaning. First answer 'Yes' or 'No', then give a concise explanation.
)";

const std::string_view json_reprompt =
    "\n\nYour previous reply could not be parsed as JSON. Reply again with only the JSON, no other text.";

const std::string_view survey_answer_format =
    "\nReply with the number of exactly one option (1-5) and nothing else.";

std::string fill(std::string_view tmpl, std::initializer_list<std::string_view> values) {
    std::string out;
    out.reserve(tmpl.size());
    auto it = values.begin();
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (it != values.end() && tmpl[i] == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
            out.append(*it++);
            ++i;
        } else {
            out.push_back(tmpl[i]);
        }
    }
    return out;
}

std::string fill_named(std::string_view tmpl, std::string_view name, std::string_view value) {
    const std::string needle = "{" + std::string(name) + "}";
    std::string out(tmpl);
    for (auto pos = out.find(needle); pos != std::string::npos; pos = out.find(needle, pos + value.size()))
        out.replace(pos, needle.size(), value);
    return out;
}

}  // namespace forge::prompts
