#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/backend.hpp"
#include "forge/issues.hpp"
#include "forge/reward.hpp"
#include "forge/synthesis.hpp"

namespace forge::eval {

struct OpenEndedItem {
    std::string id;
    std::string question;
    std::string golden_answer;
    std::optional<std::vector<std::string>> golden_units;  // filled on first scoring
    reward::ContextualUnits contextual;
    std::string language;
};

struct McqItem {
    std::string id;
    std::string question;
    std::vector<std::string> options;
    std::size_t answer_index = 0;
};

struct ContainmentItem {
    std::string id;
    std::string question;
    std::vector<std::string> annotator_answers;
    std::string language;
};

OpenEndedItem open_ended_from_json(const nlohmann::json& j);
McqItem mcq_from_json(const nlohmann::json& j);
ContainmentItem containment_from_json(const nlohmann::json& j);

// Model-under-test prompts. The open-ended one optionally carries a one-shot
// exemplar ahead of the question.
std::string open_ended_prompt(const OpenEndedItem& item, const synthesis::Exemplar* one_shot = nullptr);
std::string mcq_prompt(const McqItem& item);
std::string containment_prompt(const ContainmentItem& item);

// A candidate reply: the JSON answer format when present, else plain text with
// no contextual units.
synthesis::Answer parse_candidate(const std::string& reply);

// Decomposes the candidate (and, once, the golden answer) and scores it with
// the reward metrics.
reward::ScoredAnswer score_open_ended(OpenEndedItem& item, const std::string& candidate_answer,
                                      backend::Backend& generator, reward::UnitMatcher& matcher,
                                      IssueLog* issues = nullptr);

// Option letter in a free-form reply. Recognized forms: "A", "(A)", "A." /
// "A)", "Answer: A" (also "answer is A", "option A"). Letters beyond the option
// count are ignored; the earliest recognized letter wins.
std::optional<std::size_t> parse_choice(std::string_view response, std::size_t option_count);

struct McqOutcome {
    bool correct = false;
    std::optional<std::size_t> choice;
};

// Unparseable replies score as incorrect and are reported as UnparseableChoice.
McqOutcome score_mcq(const McqItem& item, std::string_view model_response, IssueLog* issues = nullptr);

// Per-token hook (stemmer / lemmatizer); receives the item language.
using TokenNormalizer = std::function<std::string(std::string_view token, std::string_view language)>;

std::vector<std::string> normalize_tokens(std::string_view s, std::string_view language,
                                          const TokenNormalizer& normalizer = {});

// Correct iff the normalized model answer equals, or is a contiguous token run
// of, some normalized annotator answer, or the other way round.
bool score_containment(const ContainmentItem& item, std::string_view model_answer,
                       const TokenNormalizer& normalizer = {});

struct ItemScore {
    std::string item_id;
    std::map<std::string, std::string> attributes;  // grouping candidates (language, country, ...)
    std::map<std::string, double> metrics;
};

struct Aggregate {
    std::string group;
    std::string metric;
    double value = 0.0;
    std::size_t n = 0;

    bool operator==(const Aggregate&) const = default;
};

inline constexpr std::string_view kOverallGroup = "overall";

struct Report {
    std::vector<ItemScore> per_item;
    std::vector<Aggregate> aggregates;  // overall first, then groups in lexical order
    std::optional<std::string> grouping;

    std::optional<double> value(std::string_view group, std::string_view metric) const;
    std::string render_table() const;
    void write_jsonl(const std::filesystem::path& path) const;
};

// Means per metric overall and per value of `grouping_key`. Items missing the
// attribute fall into the "(none)" group.
Report aggregate_report(std::vector<ItemScore> scores, std::optional<std::string> grouping_key = std::nullopt);

}  // namespace forge::eval
