#include "forge/reward.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/prompts.hpp"
#include "forge/text.hpp"

namespace forge::reward {

using nlohmann::json;
using nlohmann::ordered_json;

MatcherKind parse_matcher(std::string_view name) {
    if (name == "exact") return MatcherKind::exact;
    if (name == "judge") return MatcherKind::judge;
    throw Error(ErrorKind::ConfigError, "unknown matcher '" + std::string(name) + "'");
}

MatchVerdict ExactMatcher::match(const std::string& candidate, std::span<const std::string> references) {
    const auto key = text::normalize_unit(candidate);
    for (std::size_t i = 0; i < references.size(); ++i)
        if (text::normalize_unit(references[i]) == key) return {true, i, "exact match"};
    return {false, std::nullopt, "no exact match"};
}

namespace {

std::size_t best_reference(const std::string& explanation, std::span<const std::string> references) {
    const auto haystack = text::normalize_unit(explanation);
    for (std::size_t i = 0; i < references.size(); ++i) {
        const auto needle = text::normalize_unit(references[i]);
        if (!needle.empty() && haystack.find(needle) != std::string::npos) return i;
    }
    const auto words = text::split_tokens(text::strip_punctuation(haystack));
    const std::set<std::string> explanation_words(words.begin(), words.end());
    std::size_t best = 0;
    double best_overlap = -1.0;
    for (std::size_t i = 0; i < references.size(); ++i) {
        const auto ref = text::split_tokens(text::strip_punctuation(text::normalize_unit(references[i])));
        if (ref.empty()) continue;
        const auto hits = std::count_if(ref.begin(), ref.end(), [&](const auto& w) { return explanation_words.count(w) > 0; });
        const double overlap = static_cast<double>(hits) / static_cast<double>(ref.size());
        if (overlap > best_overlap) {
            best_overlap = overlap;
            best = i;
        }
    }
    return best;
}

}  // namespace

MatchVerdict JudgeMatcher::match(const std::string& candidate, std::span<const std::string> references) {
    std::string reference_block;
    for (std::size_t i = 0; i < references.size(); ++i) {
        reference_block += json(references[i]).dump();
        if (i + 1 < references.size()) reference_block += ",";
        reference_block += "\n";
    }
    backend::PromptRequest req;
    req.role = backend::Role::judge;
    req.temperature = 0.0;
    req.user_prompt = prompts::fill(prompts::unit_evaluation, {json(candidate).dump(), reference_block});
    const auto reply = judge_.complete(req).text;
    const auto verdict = text::parse_yes_no(reply);
    if (!verdict) throw Error(ErrorKind::UnparseableVerdict, "unit evaluation reply: " + reply);
    std::string explanation = text::trim(reply);
    if (!*verdict) return {false, std::nullopt, std::move(explanation)};
    const auto idx = best_reference(explanation, references);
    return {true, idx, std::move(explanation)};
}

std::unique_ptr<UnitMatcher> make_matcher(MatcherKind kind, backend::Backend* judge) {
    if (kind == MatcherKind::exact) return std::make_unique<ExactMatcher>();
    if (!judge) throw Error(ErrorKind::ConfigError, "judge matcher needs a judge backend");
    return std::make_unique<JudgeMatcher>(*judge);
}

MatchVerdict match_units(const std::string& candidate_unit, std::span<const std::string> reference_units,
                         UnitMatcher& matcher) {
    if (reference_units.empty()) return {false, std::nullopt, "no reference units"};
    return matcher.match(candidate_unit, reference_units);
}

namespace {

int contextual_bit(const std::string& a, const std::string& b) {
    const auto na = text::normalize_unit(a);
    return !na.empty() && na == text::normalize_unit(b) ? 1 : 0;
}

// Bits for `subject` units found in `reference`, answer units via the matcher.
BitScore unit_bits(const ExtendedUnits& subject, const ExtendedUnits& reference, UnitMatcher& matcher,
                   IssueLog* issues, const char* stage) {
    const auto k = subject.answer_units.size();
    std::vector<int> bits(k + 3, 0);
    parallel_for(k, matcher.concurrency(), [&](std::size_t i) {
        try {
            bits[i] = match_units(subject.answer_units[i], reference.answer_units, matcher).matched ? 1 : 0;
        } catch (const Error& e) {
            note(issues, stage, subject.answer_units[i], e.what());
            bits[i] = 0;
        }
    });
    bits[k] = contextual_bit(subject.contextual.cultural_group, reference.contextual.cultural_group);
    bits[k + 1] = contextual_bit(subject.contextual.topic, reference.contextual.topic);
    bits[k + 2] = contextual_bit(subject.contextual.language, reference.contextual.language);
    const auto hits = std::accumulate(bits.begin(), bits.end(), 0);
    return {std::move(bits), static_cast<double>(hits) / static_cast<double>(k + 3)};
}

}  // namespace

BitScore cultural_precision(const ExtendedUnits& target, const ExtendedUnits& golden, UnitMatcher& matcher,
                            IssueLog* issues) {
    return unit_bits(target, golden, matcher, issues, "precision");
}

BitScore cultural_recall(const ExtendedUnits& golden, const ExtendedUnits& target, UnitMatcher& matcher,
                         IssueLog* issues) {
    return unit_bits(golden, target, matcher, issues, "recall");
}

double cultural_f1(double s_p, double s_r) {
    if (!(s_p >= 0.0 && s_p <= 1.0 && s_r >= 0.0 && s_r <= 1.0))
        throw Error(ErrorKind::PreconditionViolation, "precision and recall must lie in [0,1]");
    const double sum = s_p + s_r;
    if (sum == 0.0) return 0.0;
    return 2.0 * s_p * s_r / sum;
}

ScoredAnswer score_answer(const ExtendedUnits& target, const ExtendedUnits& golden, UnitMatcher& matcher,
                          IssueLog* issues) {
    auto p = cultural_precision(target, golden, matcher, issues);
    auto r = cultural_recall(golden, target, matcher, issues);
    ScoredAnswer out;
    out.s_p = p.score;
    out.s_r = r.score;
    out.s_f1 = cultural_f1(p.score, r.score);
    out.precision_bits = std::move(p.bits);
    out.recall_bits = std::move(r.bits);
    return out;
}

std::vector<PreferencePair> select_preference_pairs(std::span<const ScoredRecord> scored, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw Error(ErrorKind::PreconditionViolation, "threshold must lie in (0,1]");
    std::vector<PreferencePair> pairs;
    for (const auto& r : scored)
        if (r.score.s_f1 < threshold) pairs.push_back({r.record_id, r.prompt, r.chosen, r.rejected, r.score.s_f1});
    return pairs;
}

ordered_json score_to_json(const std::string& record_id, const ScoredAnswer& s) {
    ordered_json j;
    j["record_id"] = record_id;
    j["precision_bits"] = s.precision_bits;
    j["recall_bits"] = s.recall_bits;
    j["s_p"] = s.s_p;
    j["s_r"] = s.s_r;
    j["s_f1"] = s.s_f1;
    return j;
}

ScoredAnswer score_from_json(const json& j) {
    ScoredAnswer s;
    s.precision_bits = j.at("precision_bits").get<std::vector<int>>();
    s.recall_bits = j.at("recall_bits").get<std::vector<int>>();
    s.s_p = j.at("s_p").get<double>();
    s.s_r = j.at("s_r").get<double>();
    s.s_f1 = j.at("s_f1").get<double>();
    return s;
}

}  // namespace forge::reward
