#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/backend.hpp"
#include "forge/issues.hpp"
#include "forge/synthesis.hpp"

namespace forge::reward {

struct ContextualUnits {
    std::string cultural_group;
    std::string topic;
    std::string language;

    static ContextualUnits of(const synthesis::Answer& a) { return {a.cultural_group, a.topic, a.language}; }
    bool operator==(const ContextualUnits&) const = default;
};

// [A^1 .. A^k, group, topic, language]
struct ExtendedUnits {
    std::vector<std::string> answer_units;
    ContextualUnits contextual;

    std::size_t size() const { return answer_units.size() + 3; }
};

struct MatchVerdict {
    bool matched = false;
    std::optional<std::size_t> matched_reference_index;  // present iff matched
    std::string explanation;
};

enum class MatcherKind { exact, judge };

MatcherKind parse_matcher(std::string_view name);

class UnitMatcher {
public:
    virtual ~UnitMatcher() = default;
    // Called only with a non-empty reference list.
    virtual MatchVerdict match(const std::string& candidate, std::span<const std::string> references) = 0;
    virtual std::size_t concurrency() const { return 1; }
};

// Normalized string equality (lowercase, trimmed, whitespace folded, trailing
// punctuation dropped); the verdict index is the first equal reference.
class ExactMatcher final : public UnitMatcher {
public:
    MatchVerdict match(const std::string& candidate, std::span<const std::string> references) override;
};

// Yes/no judge over the unit-evaluation prompt. The index is the first
// reference quoted in the explanation (best token overlap as a fallback).
class JudgeMatcher final : public UnitMatcher {
public:
    explicit JudgeMatcher(backend::Backend& judge) : judge_(judge) {}
    MatchVerdict match(const std::string& candidate, std::span<const std::string> references) override;
    std::size_t concurrency() const override { return judge_.config().max_concurrency; }

private:
    backend::Backend& judge_;
};

std::unique_ptr<UnitMatcher> make_matcher(MatcherKind kind, backend::Backend* judge);

MatchVerdict match_units(const std::string& candidate_unit, std::span<const std::string> reference_units,
                         UnitMatcher& matcher);

struct BitScore {
    std::vector<int> bits;
    double score = 0.0;
};

// p_i for every target unit against the golden answer units; contextual units
// compare only with their golden counterparts. s_p = mean(p_i).
BitScore cultural_precision(const ExtendedUnits& target, const ExtendedUnits& golden, UnitMatcher& matcher,
                            IssueLog* issues = nullptr);

// r_j for every golden unit against the target answer units. s_r = mean(r_j).
BitScore cultural_recall(const ExtendedUnits& golden, const ExtendedUnits& target, UnitMatcher& matcher,
                         IssueLog* issues = nullptr);

// Harmonic mean; 0 when both inputs are 0.
double cultural_f1(double s_p, double s_r);

struct ScoredAnswer {
    std::vector<int> precision_bits;
    std::vector<int> recall_bits;
    double s_p = 0.0;
    double s_r = 0.0;
    double s_f1 = 0.0;

    bool operator==(const ScoredAnswer&) const = default;
};

ScoredAnswer score_answer(const ExtendedUnits& target, const ExtendedUnits& golden, UnitMatcher& matcher,
                          IssueLog* issues = nullptr);

struct ScoredRecord {
    std::string record_id;
    std::string prompt;
    std::string chosen;    // golden answer
    std::string rejected;  // target answer
    ScoredAnswer score;
};

struct PreferencePair {
    std::string record_id;
    std::string prompt;
    std::string chosen;
    std::string rejected;
    double s_f1 = 0.0;

    bool operator==(const PreferencePair&) const = default;
};

inline constexpr double kDefaultDpoThreshold = 0.7;

// Records with s_f1 strictly below `threshold`, input order preserved.
std::vector<PreferencePair> select_preference_pairs(std::span<const ScoredRecord> scored,
                                                    double threshold = kDefaultDpoThreshold);

nlohmann::ordered_json score_to_json(const std::string& record_id, const ScoredAnswer& s);
ScoredAnswer score_from_json(const nlohmann::json& j);

}  // namespace forge::reward
