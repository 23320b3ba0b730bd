#include "forge/synthesis.hpp"

#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/prompts.hpp"
#include "forge/text.hpp"

namespace forge::synthesis {

using backend::PromptRequest;
using backend::Role;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void require_verified(const CulturalQuestion& q) {
    if (!q.verified) throw Error(ErrorKind::PreconditionViolation, "question " + q.id + " is not verified");
}

std::string strip_label(std::string s) {
    const auto lower = text::to_lower(s);
    for (std::string_view label : {"question:", "q:"}) {
        if (lower.rfind(label, 0) == 0) return text::trim(s.substr(label.size()));
    }
    return s;
}

std::string strip_quotes(std::string s) {
    while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        s = text::trim(s.substr(1, s.size() - 2));
    return s;
}

std::optional<std::string> extract_question(const std::string& reply) {
    if (auto obj = text::extract_json_object(reply); obj && obj->contains("question") && (*obj)["question"].is_string()) {
        auto q = text::trim((*obj)["question"].get<std::string>());
        if (!q.empty()) return q;
    }
    std::string body = text::trim(reply);
    if (auto nl = body.find('\n'); nl != std::string::npos) body = text::trim(body.substr(0, nl));
    body = strip_quotes(strip_label(std::move(body)));
    if (body.empty()) return std::nullopt;
    return body;
}

std::optional<Answer> parse_answer_object(const std::string& reply, AnswerKind kind, bool require_context) {
    auto obj = text::extract_json_object(reply);
    if (!obj || !obj->contains("answer") || !(*obj)["answer"].is_string()) return std::nullopt;
    auto field = [&](const char* name) -> std::string {
        auto it = obj->find(name);
        return it != obj->end() && it->is_string() ? text::trim(it->get<std::string>()) : std::string();
    };
    Answer a{kind, field("answer"), field("cultural_group"), field("topic"), field("language")};
    if (a.text.empty()) return std::nullopt;
    if (require_context && (a.cultural_group.empty() || a.topic.empty() || a.language.empty())) return std::nullopt;
    return a;
}

}  // namespace

CulturalQuestion generate_question(const corpus::KnowledgePassage& passage, backend::Backend& generator) {
    if (text::is_blank(passage.text)) throw Error(ErrorKind::PreconditionViolation, "passage text is empty");
    ordered_json input;
    input["cultural_group"] = passage.cultural_group;
    input["topic"] = passage.topic;
    input["source"] = passage.source;
    input["cultural_knowledge"] = passage.text;

    PromptRequest req;
    req.role = Role::generator;
    req.system_prompt = std::string(prompts::question_generation);
    req.user_prompt = input.dump(2);

    std::string reply;
    try {
        reply = generator.complete(req).text;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyCompletion) throw;
    }
    auto question = extract_question(reply);
    if (!question) throw Error(ErrorKind::UnparseableOutput, "no question text for passage " + passage.topic_key);
    return {"q:" + passage.topic_key, passage.topic_key, *question, false};
}

bool verify_answerable(CulturalQuestion& question, const corpus::KnowledgePassage& passage,
                       backend::Backend& generator) {
    if (text::is_blank(question.question) || text::is_blank(passage.text))
        throw Error(ErrorKind::PreconditionViolation, "question and passage must be non-empty");
    ordered_json input;
    input["cultural_knowledge"] = passage.text;
    input["question"] = question.question;

    PromptRequest req;
    req.role = Role::generator;
    req.temperature = 0.0;
    req.user_prompt = std::string(prompts::answerability_check) + "\n" + input.dump(2);
    const auto reply = generator.complete(req).text;
    auto verdict = text::parse_yes_no(reply);
    if (!verdict) throw Error(ErrorKind::UnparseableVerdict, "answerability reply for " + question.id + ": " + reply);
    question.verified = *verdict;
    return *verdict;
}

Answer generate_golden_answer(const CulturalQuestion& question, const corpus::KnowledgePassage& passage,
                              backend::Backend& generator) {
    require_verified(question);
    ordered_json input;
    input["question"] = question.question;
    input["cultural_knowledge"] = passage.text;

    PromptRequest req;
    req.role = Role::generator;
    req.system_prompt = std::string(prompts::answer_generation);
    req.user_prompt = input.dump(2);
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) req.user_prompt += prompts::json_reprompt;
        if (auto a = parse_answer_object(generator.complete(req).text, AnswerKind::golden, true)) return *a;
    }
    throw Error(ErrorKind::UnparseableOutput, "golden answer for " + question.id + " is not a valid JSON object");
}

Answer generate_target_answer(const CulturalQuestion& question, std::span<const Exemplar> exemplars,
                              backend::Backend& target) {
    require_verified(question);
    if (exemplars.empty()) throw Error(ErrorKind::PreconditionViolation, "target answers need at least one exemplar");

    std::string prompt(prompts::target_answer);
    for (const auto& ex : exemplars) prompt += "\nQuestion: " + ex.question + "\nAnswer: " + ex.answer + "\n";
    prompt += "\nQuestion: " + question.question + "\nAnswer:";

    PromptRequest req;
    req.role = Role::target;
    req.user_prompt = std::move(prompt);
    const auto reply = target.complete(req).text;
    if (auto a = parse_answer_object(reply, AnswerKind::target, false)) return *a;
    return {AnswerKind::target, text::trim(reply), "", "", ""};
}

std::vector<SynthesisRecord> synthesize(const std::vector<corpus::KnowledgePassage>& passages,
                                        const backend::BackendSet& backends, std::span<const Exemplar> exemplars,
                                        IssueLog* issues) {
    auto& generator = backends.for_role(Role::generator);
    auto& target = backends.for_role(Role::target);
    auto results = parallel_map<std::optional<SynthesisRecord>>(
        passages.size(), generator.config().max_concurrency,
        [&](std::size_t i) -> std::optional<SynthesisRecord> {
            const auto& passage = passages[i];
            try {
                auto q = generate_question(passage, generator);
                if (!verify_answerable(q, passage, generator)) {
                    note(issues, "verify", q.id, "question not answerable from passage");
                    return std::nullopt;
                }
                auto golden = generate_golden_answer(q, passage, generator);
                auto tgt = generate_target_answer(q, exemplars, target);
                return SynthesisRecord{std::move(q), std::move(golden), std::move(tgt)};
            } catch (const Error& e) {
                note(issues, "synthesize", passage.topic_key, e.what());
                return std::nullopt;
            }
        });
    std::vector<SynthesisRecord> out;
    for (auto& r : results)
        if (r) out.push_back(std::move(*r));
    return out;
}

std::string_view answer_kind_name(AnswerKind kind) { return kind == AnswerKind::golden ? "golden" : "target"; }

ordered_json to_json(const Answer& a) {
    ordered_json j;
    j["kind"] = answer_kind_name(a.kind);
    j["answer"] = a.text;
    j["cultural_group"] = a.cultural_group;
    j["language"] = a.language;
    j["topic"] = a.topic;
    return j;
}

Answer answer_from_json(const json& j) {
    Answer a;
    a.kind = j.value("kind", "golden") == "target" ? AnswerKind::target : AnswerKind::golden;
    a.text = j.at("answer").get<std::string>();
    a.cultural_group = j.value("cultural_group", "");
    a.language = j.value("language", "");
    a.topic = j.value("topic", "");
    return a;
}

ordered_json to_json(const SynthesisRecord& r) {
    ordered_json j;
    j["question_id"] = r.question.id;
    j["passage_ref"] = r.question.passage_ref;
    j["question"] = r.question.question;
    j["verified"] = r.question.verified;
    j["golden"] = to_json(r.golden);
    j["target"] = to_json(r.target);
    return j;
}

SynthesisRecord synthesis_record_from_json(const json& j) {
    SynthesisRecord r;
    r.question = {j.at("question_id").get<std::string>(), j.at("passage_ref").get<std::string>(),
                  j.at("question").get<std::string>(), j.at("verified").get<bool>()};
    r.golden = answer_from_json(j.at("golden"));
    r.target = answer_from_json(j.at("target"));
    return r;
}

}  // namespace forge::synthesis
