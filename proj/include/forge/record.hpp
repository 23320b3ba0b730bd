#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "forge/backend.hpp"
#include "forge/critique.hpp"
#include "forge/issues.hpp"
#include "forge/synthesis.hpp"

namespace forge {

// One fully critiqued pipeline unit in the pivot language.
struct KnowledgeRecord {
    std::string record_id;
    std::string passage_ref;
    std::string language = "en";
    std::string question;
    synthesis::Answer golden;
    synthesis::Answer target;
    std::vector<std::string> golden_units;
    std::vector<std::string> target_units;
    std::vector<critique::CritiqueTriple> triples;
    std::string critique;

    bool operator==(const KnowledgeRecord&) const = default;
};

// Decomposes both answers, builds the triples and summarizes them.
KnowledgeRecord critique_record(const synthesis::SynthesisRecord& record, const backend::BackendSet& backends,
                                IssueLog* issues = nullptr);

nlohmann::ordered_json to_json(const KnowledgeRecord& r);
KnowledgeRecord knowledge_record_from_json(const nlohmann::json& j);

}  // namespace forge
