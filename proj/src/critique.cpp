#include "forge/critique.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "forge/error.hpp"
#include "forge/prompts.hpp"
#include "forge/text.hpp"

namespace forge::critique {

using backend::PromptRequest;
using backend::Role;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view category_name(Category c) {
    switch (c) {
        case Category::semantic_equivalence: return "semantic_equivalence";
        case Category::unaddressed_knowledge: return "unaddressed_knowledge";
        case Category::contradictory_statement: return "contradictory_statement";
    }
    return "unaddressed_knowledge";
}

std::optional<Category> parse_category(std::string_view s) {
    const auto n = text::normalize_unit(s);
    auto starts = [&](std::string_view p) { return n.rfind(p, 0) == 0; };
    if (starts("semantic") || starts("equivalen") || starts("roughly the same")) return Category::semantic_equivalence;
    if (starts("unaddressed") || starts("not addressed")) return Category::unaddressed_knowledge;
    if (starts("contradict")) return Category::contradictory_statement;
    return std::nullopt;
}

std::optional<std::vector<std::string>> parse_unit_list(std::string_view reply) {
    std::optional<std::vector<std::string>> raw;
    auto strings_of = [](const json& arr) -> std::optional<std::vector<std::string>> {
        std::vector<std::string> out;
        for (const auto& v : arr) {
            if (!v.is_string()) return std::nullopt;
            out.push_back(v.get<std::string>());
        }
        return out;
    };
    if (auto obj = text::extract_json_object(reply); obj && obj->contains("knowledge_points") &&
                                                     (*obj)["knowledge_points"].is_array()) {
        raw = strings_of((*obj)["knowledge_points"]);
    }
    if (!raw) {
        if (auto arr = text::extract_json_array(reply)) raw = strings_of(*arr);
    }
    if (!raw && (reply.find('{') != std::string_view::npos || reply.find('[') != std::string_view::npos)) {
        auto loose = text::quoted_values(reply);
        if (!loose.empty()) raw = std::move(loose);
    }
    if (!raw) return std::nullopt;

    std::vector<std::string> units;
    std::unordered_set<std::string> seen;
    for (const auto& u : *raw) {
        auto folded = text::collapse_whitespace(u);
        if (folded.empty()) continue;
        if (seen.insert(folded).second) units.push_back(std::move(folded));
    }
    return units;
}

UnitList decompose_units(const synthesis::Answer& answer, backend::Backend& generator) {
    if (text::is_blank(answer.text)) throw Error(ErrorKind::PreconditionViolation, "answer text is empty");
    PromptRequest req;
    req.role = Role::generator;
    req.user_prompt = std::string(prompts::unit_decomposition) + answer.text;
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) req.user_prompt += prompts::json_reprompt;
        if (auto units = parse_unit_list(generator.complete(req).text)) {
            if (units->empty()) throw Error(ErrorKind::EmptyDecomposition, "decomposition returned no units");
            return {std::move(*units), answer.kind};
        }
    }
    throw Error(ErrorKind::UnparseableOutput, "decomposition reply is not a unit list");
}

namespace {

std::optional<std::size_t> resolve_unit(const std::string& chosen, const UnitList& targets) {
    const auto folded = text::collapse_whitespace(chosen);
    for (std::size_t i = 0; i < targets.size(); ++i)
        if (targets.units[i] == folded) return i;
    const auto normalized = text::normalize_unit(chosen);
    for (std::size_t i = 0; i < targets.size(); ++i)
        if (text::normalize_unit(targets.units[i]) == normalized) return i;
    return std::nullopt;
}

// Target unit sharing the most words with `unit`; none when nothing overlaps.
std::optional<std::size_t> closest_unit(const std::string& unit, const UnitList& targets) {
    const auto words = text::split_tokens(text::strip_punctuation(text::to_lower(unit)));
    const std::set<std::string> wanted(words.begin(), words.end());
    std::optional<std::size_t> best;
    std::size_t best_hits = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        std::set<std::string> seen;
        for (const auto& w : text::split_tokens(text::strip_punctuation(text::to_lower(targets.units[i]))))
            if (wanted.count(w)) seen.insert(w);
        if (seen.size() > best_hits) {
            best_hits = seen.size();
            best = i;
        }
    }
    return best;
}

std::string string_or_empty(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it != obj.end() && it->is_string() ? text::trim(it->get<std::string>()) : std::string();
}

std::string unaddressed_critique(const std::string& judge_text) {
    if (judge_text.find("not addressed clearly") != std::string::npos) return judge_text;
    std::string out(kUnaddressedCritique);
    if (!judge_text.empty()) out += " " + judge_text;
    return out;
}

}  // namespace

PairVerdict classify_pair(const std::string& golden_unit, const UnitList& target_units, backend::Backend& judge,
                          const CritiqueContext& context) {
    if (target_units.empty()) return {Category::unaddressed_knowledge, std::nullopt, std::string(kUnaddressedCritique)};

    ordered_json input;
    input["question"] = context.question;
    input["grounded_answer"] = context.grounded_answer;
    input["answer_to_critique"] = context.answer_to_critique;
    input["grounded_answer_knowledge_points"] = json::array({golden_unit});
    input["knowledge_points_to_critique"] = target_units.units;

    PromptRequest req;
    req.role = Role::judge;
    req.temperature = 0.0;
    req.system_prompt = prompts::fill(prompts::critique_generation,
                                      {context.cultural_group.empty() ? std::string_view("the relevant culture")
                                                                      : std::string_view(context.cultural_group)});
    req.user_prompt = input.dump(2) + "\n\n" + std::string(prompts::critique_unit_output);
    const auto reply = judge.complete(req).text;

    auto obj = text::extract_json_object(reply);
    if (!obj) throw Error(ErrorKind::UnparseableVerdict, "critique reply is not a JSON object: " + reply);
    const auto chosen = string_or_empty(*obj, "knowledge_points_to_critique");
    const auto critique_text = string_or_empty(*obj, "Critique").empty() ? string_or_empty(*obj, "critique")
                                                                          : string_or_empty(*obj, "Critique");

    std::optional<std::size_t> index = resolve_unit(chosen, target_units);
    if (!index) {
        if (auto it = obj->find("index"); it != obj->end() && it->is_number_unsigned() &&
                                          it->get<std::size_t>() < target_units.size())
            index = it->get<std::size_t>();
    }

    std::optional<Category> category;
    if (auto it = obj->find("category"); it != obj->end() && it->is_string()) category = parse_category(it->get<std::string>());
    if (!category) {
        if (auto named = parse_category(chosen); named && !index) category = named;
        else if (text::to_lower(critique_text).find("roughly the same") != std::string::npos && index)
            category = Category::semantic_equivalence;
        else if (index) category = Category::contradictory_statement;
    }
    if (!category) throw Error(ErrorKind::UnparseableVerdict, "no recognizable critique category: " + reply);

    switch (*category) {
        case Category::unaddressed_knowledge:
            return {*category, std::nullopt, unaddressed_critique(critique_text)};
        case Category::semantic_equivalence:
            if (!index) throw Error(ErrorKind::UnparseableVerdict, "equivalence without a matching target unit");
            return {*category, index, std::string(kEquivalentCritique)};
        case Category::contradictory_statement:
            // A bare "Contradictory." names no unit; take the closest one.
            if (!index) index = closest_unit(golden_unit, target_units);
            if (!index) throw Error(ErrorKind::UnparseableVerdict, "contradiction without a target unit");
            return {*category, index,
                    critique_text.empty() ? "Conflicts with the grounded knowledge point: " + golden_unit : critique_text};
    }
    throw Error(ErrorKind::UnparseableVerdict, "unhandled category");
}

std::vector<CritiqueTriple> build_triples(const UnitList& golden_units, const UnitList& target_units,
                                          backend::Backend& judge, const CritiqueContext& context,
                                          IssueLog* issues) {
    if (golden_units.empty()) throw Error(ErrorKind::PreconditionViolation, "no golden units to critique");
    std::set<std::size_t> claimed;
    std::vector<CritiqueTriple> triples;
    triples.reserve(golden_units.size());
    for (const auto& unit : golden_units.units) {
        PairVerdict verdict;
        try {
            verdict = classify_pair(unit, target_units, judge, context);
        } catch (const Error& e) {
            note(issues, "critique", unit, e.what());
            verdict = {Category::unaddressed_knowledge, std::nullopt, std::string(kUnaddressedCritique)};
        }
        if (verdict.matched_index && !claimed.insert(*verdict.matched_index).second) {
            note(issues, "critique", unit,
                 "target unit " + std::to_string(*verdict.matched_index) + " already matched by an earlier unit");
            verdict = {Category::unaddressed_knowledge, std::nullopt, std::string(kUnaddressedCritique)};
        }
        CritiqueTriple t;
        t.golden_unit = unit;
        t.category = verdict.category;
        t.meta_critique = verdict.meta_critique;
        if (verdict.matched_index) t.matched_target_unit = target_units.units[*verdict.matched_index];
        triples.push_back(std::move(t));
    }
    return triples;
}

CritiqueSummary summarize_critique(std::span<const CritiqueTriple> triples, backend::Backend& generator) {
    if (triples.empty()) throw Error(ErrorKind::PreconditionViolation, "no triples to summarize");
    const bool all_equivalent = std::all_of(triples.begin(), triples.end(), [](const CritiqueTriple& t) {
        return t.category == Category::semantic_equivalence;
    });
    if (all_equivalent) return {std::string(kNoCorrections), triples.size()};

    json list = json::array();
    for (const auto& t : triples) {
        ordered_json item;
        item["grounded_answer_knowledge_points"] = t.golden_unit;
        item["knowledge_points_to_critique"] = t.matched_target_unit.value_or("Not addressed clearly.");
        item["Critique"] = t.meta_critique;
        list.emplace_back(std::move(item));
    }
    PromptRequest req;
    req.role = Role::generator;
    req.user_prompt = std::string(prompts::critique_summary) + list.dump(2);
    return {text::trim(generator.complete(req).text), triples.size()};
}

ordered_json to_json(const CritiqueTriple& t) {
    ordered_json j;
    j["golden_unit"] = t.golden_unit;
    j["matched_target_unit"] = t.matched_target_unit ? json(*t.matched_target_unit) : json(nullptr);
    j["category"] = category_name(t.category);
    j["meta_critique"] = t.meta_critique;
    return j;
}

CritiqueTriple triple_from_json(const json& j) {
    CritiqueTriple t;
    t.golden_unit = j.at("golden_unit").get<std::string>();
    if (const auto& m = j.at("matched_target_unit"); !m.is_null()) t.matched_target_unit = m.get<std::string>();
    auto category = parse_category(j.at("category").get<std::string>());
    if (!category) throw Error(ErrorKind::SchemaViolation, "unknown category " + j.at("category").dump());
    t.category = *category;
    t.meta_critique = j.at("meta_critique").get<std::string>();
    return t;
}

}  // namespace forge::critique
