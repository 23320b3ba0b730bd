#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/backend.hpp"
#include "forge/corpus.hpp"
#include "forge/issues.hpp"

namespace forge::synthesis {

struct CulturalQuestion {
    std::string id;
    std::string passage_ref;
    std::string question;
    bool verified = false;

    bool operator==(const CulturalQuestion&) const = default;
};

enum class AnswerKind { golden, target };

struct Answer {
    AnswerKind kind = AnswerKind::golden;
    std::string text;
    std::string cultural_group;
    std::string topic;
    std::string language;

    bool operator==(const Answer&) const = default;
};

struct Exemplar {
    std::string question;
    std::string answer;
};

// One question per passage; the question id is derived from the passage key.
CulturalQuestion generate_question(const corpus::KnowledgePassage& passage, backend::Backend& generator);

// Asks the generator whether the passage answers the question. A "yes" marks
// the question verified. Raises UnparseableVerdict for anything but yes/no.
bool verify_answerable(CulturalQuestion& question, const corpus::KnowledgePassage& passage,
                       backend::Backend& generator);

// Grounded answer as a JSON object {answer, cultural_group, language, topic}.
// One reprompt on malformed output, then UnparseableOutput.
Answer generate_golden_answer(const CulturalQuestion& question, const corpus::KnowledgePassage& passage,
                              backend::Backend& generator);

// Few-shot answer from the model being trained. A JSON reply fills the
// contextual fields; plain text becomes the answer with them left empty.
Answer generate_target_answer(const CulturalQuestion& question, std::span<const Exemplar> exemplars,
                              backend::Backend& target);

struct SynthesisRecord {
    CulturalQuestion question;
    Answer golden;
    Answer target;

    bool operator==(const SynthesisRecord&) const = default;
};

// Question, verification and both answers for every passage. Passages whose
// question is rejected or whose calls fail are reported and dropped.
std::vector<SynthesisRecord> synthesize(const std::vector<corpus::KnowledgePassage>& passages,
                                        const backend::BackendSet& backends, std::span<const Exemplar> exemplars,
                                        IssueLog* issues = nullptr);

std::string_view answer_kind_name(AnswerKind kind);
nlohmann::ordered_json to_json(const Answer& a);
Answer answer_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SynthesisRecord& r);
SynthesisRecord synthesis_record_from_json(const nlohmann::json& j);

}  // namespace forge::synthesis
