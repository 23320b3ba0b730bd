#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/backend.hpp"
#include "forge/issues.hpp"
#include "forge/synthesis.hpp"

namespace forge::critique {

struct UnitList {
    std::vector<std::string> units;
    synthesis::AnswerKind source_kind = synthesis::AnswerKind::golden;

    std::size_t size() const { return units.size(); }
    bool empty() const { return units.empty(); }
};

enum class Category { semantic_equivalence, unaddressed_knowledge, contradictory_statement };

std::string_view category_name(Category c);
std::optional<Category> parse_category(std::string_view s);

inline constexpr std::string_view kEquivalentCritique = "Roughly the same";
inline constexpr std::string_view kUnaddressedCritique = "This knowledge point is not addressed clearly in the answer.";
inline constexpr std::string_view kNoCorrections = "No corrections needed.";

struct CritiqueTriple {
    std::string golden_unit;
    std::optional<std::string> matched_target_unit;  // absent iff unaddressed_knowledge
    Category category = Category::unaddressed_knowledge;
    std::string meta_critique;

    bool operator==(const CritiqueTriple&) const = default;
};

struct PairVerdict {
    Category category = Category::unaddressed_knowledge;
    std::optional<std::size_t> matched_index;
    std::string meta_critique;
};

struct CritiqueSummary {
    std::string text;
    std::size_t triple_count = 0;
};

// Extra material shown to the judge alongside the unit comparison.
struct CritiqueContext {
    std::string question;
    std::string cultural_group;
    std::string grounded_answer;
    std::string answer_to_critique;
};

// Parses a unit list out of a decomposition reply: {"knowledge_points": [...]},
// a bare JSON array, or the loose {"knowledge_points": "a", "b"} form.
// Blank entries are dropped and duplicates (after whitespace folding) removed.
std::optional<std::vector<std::string>> parse_unit_list(std::string_view reply);

// Atomic knowledge units of an answer, via the generator. One reprompt on
// unparseable output; an empty list raises EmptyDecomposition.
UnitList decompose_units(const synthesis::Answer& answer, backend::Backend& generator);

// Judge comparison of one golden unit against the target units. No judge call
// when the target list is empty.
PairVerdict classify_pair(const std::string& golden_unit, const UnitList& target_units, backend::Backend& judge,
                          const CritiqueContext& context = {});

// One triple per golden unit in golden order; each target unit is matched at
// most once (first claim wins, later claims degrade to unaddressed_knowledge).
std::vector<CritiqueTriple> build_triples(const UnitList& golden_units, const UnitList& target_units,
                                          backend::Backend& judge, const CritiqueContext& context = {},
                                          IssueLog* issues = nullptr);

CritiqueSummary summarize_critique(std::span<const CritiqueTriple> triples, backend::Backend& generator);

nlohmann::ordered_json to_json(const CritiqueTriple& t);
CritiqueTriple triple_from_json(const nlohmann::json& j);

}  // namespace forge::critique
