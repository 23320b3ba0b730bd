#include "forge/record.hpp"

namespace forge {

using nlohmann::json;
using nlohmann::ordered_json;

KnowledgeRecord critique_record(const synthesis::SynthesisRecord& record, const backend::BackendSet& backends,
                                IssueLog* issues) {
    auto& generator = backends.for_role(backend::Role::generator);
    auto& judge = backends.for_role(backend::Role::judge);

    KnowledgeRecord out;
    out.record_id = record.question.id;
    out.passage_ref = record.question.passage_ref;
    out.question = record.question.question;
    out.golden = record.golden;
    out.target = record.target;

    auto golden_units = critique::decompose_units(record.golden, generator);
    auto target_units = critique::decompose_units(record.target, generator);
    critique::CritiqueContext context{record.question.question, record.golden.cultural_group, record.golden.text,
                                      record.target.text};
    out.triples = critique::build_triples(golden_units, target_units, judge, context, issues);
    out.critique = critique::summarize_critique(out.triples, generator).text;
    out.golden_units = std::move(golden_units.units);
    out.target_units = std::move(target_units.units);
    return out;
}

ordered_json to_json(const KnowledgeRecord& r) {
    ordered_json j;
    j["record_id"] = r.record_id;
    j["passage_ref"] = r.passage_ref;
    j["language"] = r.language;
    j["question"] = r.question;
    j["golden"] = synthesis::to_json(r.golden);
    j["target"] = synthesis::to_json(r.target);
    j["golden_units"] = r.golden_units;
    j["target_units"] = r.target_units;
    j["triples"] = json::array();
    for (const auto& t : r.triples) j["triples"].push_back(critique::to_json(t));
    j["critique"] = r.critique;
    return j;
}

KnowledgeRecord knowledge_record_from_json(const json& j) {
    KnowledgeRecord r;
    r.record_id = j.at("record_id").get<std::string>();
    r.passage_ref = j.value("passage_ref", "");
    r.language = j.value("language", "en");
    r.question = j.at("question").get<std::string>();
    r.golden = synthesis::answer_from_json(j.at("golden"));
    r.target = synthesis::answer_from_json(j.at("target"));
    r.golden_units = j.at("golden_units").get<std::vector<std::string>>();
    r.target_units = j.at("target_units").get<std::vector<std::string>>();
    for (const auto& t : j.at("triples")) r.triples.push_back(critique::triple_from_json(t));
    r.critique = j.at("critique").get<std::string>();
    return r;
}

}  // namespace forge
