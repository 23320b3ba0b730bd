#include "forge/evalharness.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <regex>
#include <sstream>

#include "forge/critique.hpp"
#include "forge/error.hpp"
#include "forge/text.hpp"

namespace forge::eval {

using nlohmann::json;
using nlohmann::ordered_json;

OpenEndedItem open_ended_from_json(const json& j) {
    OpenEndedItem item;
    item.id = j.at("id").get<std::string>();
    item.question = j.at("question").get<std::string>();
    item.golden_answer = j.at("golden_answer").get<std::string>();
    if (text::is_blank(item.golden_answer)) throw Error(ErrorKind::SchemaViolation, "item " + item.id + " has no golden answer");
    if (j.contains("golden_units") && !j["golden_units"].is_null())
        item.golden_units = j["golden_units"].get<std::vector<std::string>>();
    const auto& ctx = j.contains("contextual") ? j["contextual"] : j;
    item.contextual = {ctx.value("cultural_group", ""), ctx.value("topic", ""), ctx.value("language", "")};
    item.language = j.value("language", item.contextual.language);
    return item;
}

McqItem mcq_from_json(const json& j) {
    McqItem item{j.at("id").get<std::string>(), j.at("question").get<std::string>(),
                 j.at("options").get<std::vector<std::string>>(), j.at("answer_index").get<std::size_t>()};
    if (item.options.size() < 2) throw Error(ErrorKind::SchemaViolation, "item " + item.id + " needs >= 2 options");
    if (item.answer_index >= item.options.size())
        throw Error(ErrorKind::SchemaViolation, "item " + item.id + " answer_index out of range");
    return item;
}

ContainmentItem containment_from_json(const json& j) {
    ContainmentItem item{j.at("id").get<std::string>(), j.value("question", ""),
                         j.at("annotator_answers").get<std::vector<std::string>>(), j.value("language", "")};
    if (item.annotator_answers.empty())
        throw Error(ErrorKind::SchemaViolation, "item " + item.id + " has no annotator answers");
    return item;
}

std::string open_ended_prompt(const OpenEndedItem& item, const synthesis::Exemplar* one_shot) {
    std::string p =
        "Answer the cultural question in JSON format: {\"answer\": \"\", \"cultural_group\": \"\", \"language\": \"\", "
        "\"topic\": \"\"}.\n";
    if (one_shot) p += "\nQuestion: " + one_shot->question + "\nAnswer: " + one_shot->answer + "\n";
    p += "\nQuestion: " + item.question + "\nAnswer:";
    return p;
}

std::string mcq_prompt(const McqItem& item) {
    std::string p = item.question + "\n";
    for (std::size_t i = 0; i < item.options.size(); ++i)
        p += std::string(1, static_cast<char>('A' + i)) + ". " + item.options[i] + "\n";
    p += "Answer with the letter of the correct option.";
    return p;
}

std::string containment_prompt(const ContainmentItem& item) {
    return item.question + "\nAnswer with a short phrase only.";
}

synthesis::Answer parse_candidate(const std::string& reply) {
    if (auto obj = text::extract_json_object(reply); obj && obj->contains("answer") && (*obj)["answer"].is_string()) {
        auto field = [&](const char* k) {
            auto it = obj->find(k);
            return it != obj->end() && it->is_string() ? text::trim(it->get<std::string>()) : std::string();
        };
        return {synthesis::AnswerKind::target, field("answer"), field("cultural_group"), field("topic"), field("language")};
    }
    return {synthesis::AnswerKind::target, text::trim(reply), "", "", ""};
}

reward::ScoredAnswer score_open_ended(OpenEndedItem& item, const std::string& candidate_answer,
                                      backend::Backend& generator, reward::UnitMatcher& matcher, IssueLog* issues) {
    if (text::is_blank(candidate_answer))
        throw Error(ErrorKind::PreconditionViolation, "empty candidate answer for item " + item.id);
    if (!item.golden_units) {
        synthesis::Answer golden{synthesis::AnswerKind::golden, item.golden_answer, item.contextual.cultural_group,
                                 item.contextual.topic, item.contextual.language};
        item.golden_units = critique::decompose_units(golden, generator).units;
    }
    const auto candidate = parse_candidate(candidate_answer);
    if (candidate.text.empty()) throw Error(ErrorKind::PreconditionViolation, "empty candidate answer for item " + item.id);
    auto units = critique::decompose_units(candidate, generator).units;

    reward::ExtendedUnits target{std::move(units), reward::ContextualUnits::of(candidate)};
    reward::ExtendedUnits golden{*item.golden_units, item.contextual};
    return reward::score_answer(target, golden, matcher, issues);
}

std::optional<std::size_t> parse_choice(std::string_view response, std::size_t option_count) {
    const std::string s(response);
    std::optional<std::pair<std::size_t, std::size_t>> best;  // (position, index)
    auto consider = [&](std::size_t pos, char letter) {
        const auto upper = static_cast<char>(std::toupper(static_cast<unsigned char>(letter)));
        if (upper < 'A') return;
        const auto idx = static_cast<std::size_t>(upper - 'A');
        if (idx >= option_count) return;
        if (!best || pos < best->first) best = {pos, idx};
    };
    auto scan = [&](const std::regex& re, bool uppercase_only) {
        for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
            const auto& m = *it;
            const char letter = m.str(1)[0];
            if (uppercase_only && !std::isupper(static_cast<unsigned char>(letter))) {
                // Lowercase only counts when punctuation or the end closes it ("answer: b.").
                const auto after = static_cast<std::size_t>(m.position(1)) + 1;
                if (after < s.size() && std::string_view(".):").find(s[after]) == std::string_view::npos &&
                    !std::isspace(static_cast<unsigned char>(s[after])))
                    continue;
                if (after < s.size() && std::isspace(static_cast<unsigned char>(s[after]))) continue;
            }
            consider(static_cast<std::size_t>(m.position(1)), letter);
        }
    };

    static const std::regex paren(R"(\(([A-Za-z])\))");
    static const std::regex label(R"((?:[Aa]nswer|[Oo]ption|[Cc]hoice)\s*(?:is\s*)?[:：]?\s*\(?([A-Za-z])(?![A-Za-z]))");
    static const std::regex dotted(R"((?:^|[^A-Za-z.])([A-Z])[.)](?=\s|$))");
    scan(paren, false);
    scan(label, true);
    scan(dotted, false);

    const auto trimmed = text::trim(s);
    if (trimmed.size() == 1 && std::isalpha(static_cast<unsigned char>(trimmed[0])))
        consider(s.find(trimmed[0]), trimmed[0]);
    if (!best) return std::nullopt;
    return best->second;
}

McqOutcome score_mcq(const McqItem& item, std::string_view model_response, IssueLog* issues) {
    if (text::is_blank(model_response))
        throw Error(ErrorKind::PreconditionViolation, "empty response for item " + item.id);
    auto choice = parse_choice(model_response, item.options.size());
    if (!choice) {
        note(issues, "mcq", item.id,
             std::string(error_kind_name(ErrorKind::UnparseableChoice)) + ": " + std::string(model_response));
        return {false, std::nullopt};
    }
    return {*choice == item.answer_index, choice};
}

std::vector<std::string> normalize_tokens(std::string_view s, std::string_view language,
                                          const TokenNormalizer& normalizer) {
    auto tokens = text::split_tokens(text::strip_punctuation(text::to_lower(s)));
    if (normalizer) {
        for (auto& t : tokens) t = normalizer(t, language);
        std::erase_if(tokens, [](const std::string& t) { return t.empty(); });
    }
    return tokens;
}

namespace {

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

bool score_containment(const ContainmentItem& item, std::string_view model_answer, const TokenNormalizer& normalizer) {
    if (text::is_blank(model_answer)) throw Error(ErrorKind::PreconditionViolation, "empty answer for item " + item.id);
    const auto model = normalize_tokens(model_answer, item.language, normalizer);
    if (model.empty()) return false;
    for (const auto& a : item.annotator_answers) {
        const auto ref = normalize_tokens(a, item.language, normalizer);
        if (contains_run(ref, model) || contains_run(model, ref)) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Reports

std::optional<double> Report::value(std::string_view group, std::string_view metric) const {
    for (const auto& a : aggregates)
        if (a.group == group && a.metric == metric) return a.value;
    return std::nullopt;
}

std::string Report::render_table() const {
    std::size_t gw = 5, mw = 6;
    for (const auto& a : aggregates) {
        gw = std::max(gw, a.group.size());
        mw = std::max(mw, a.metric.size());
    }
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(gw)) << "group" << "  " << std::setw(static_cast<int>(mw))
        << "metric" << "  " << std::right << std::setw(10) << "value" << "  " << std::setw(6) << "n" << '\n';
    for (const auto& a : aggregates) {
        out << std::left << std::setw(static_cast<int>(gw)) << a.group << "  " << std::setw(static_cast<int>(mw))
            << a.metric << "  " << std::right << std::setw(10) << std::fixed << std::setprecision(4) << a.value
            << "  " << std::setw(6) << a.n << '\n';
    }
    return out.str();
}

void Report::write_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::FileUnwritable, "cannot write " + path.string());
    for (const auto& a : aggregates) {
        ordered_json j;
        j["group"] = a.group;
        j["metric"] = a.metric;
        j["value"] = a.value;
        j["n"] = a.n;
        out << j.dump() << '\n';
    }
}

Report aggregate_report(std::vector<ItemScore> scores, std::optional<std::string> grouping_key) {
    if (scores.empty()) throw Error(ErrorKind::PreconditionViolation, "no scores to aggregate");
    // group -> metric -> values
    std::map<std::string, std::map<std::string, std::vector<double>>> grouped;
    for (const auto& s : scores) {
        for (const auto& [metric, value] : s.metrics) {
            grouped[std::string(kOverallGroup)][metric].push_back(value);
            if (grouping_key) {
                auto it = s.attributes.find(*grouping_key);
                grouped[it == s.attributes.end() ? "(none)" : it->second][metric].push_back(value);
            }
        }
    }
    Report report;
    report.grouping = grouping_key;
    auto emit = [&](const std::string& group) {
        for (auto& [metric, values] : grouped[group]) {
            // Sorted summation keeps the mean independent of item order.
            std::sort(values.begin(), values.end());
            const double sum = std::accumulate(values.begin(), values.end(), 0.0);
            report.aggregates.push_back({group, metric, sum / static_cast<double>(values.size()), values.size()});
        }
    };
    emit(std::string(kOverallGroup));
    for (const auto& [group, _] : grouped)
        if (group != kOverallGroup) emit(group);
    report.per_item = std::move(scores);
    return report;
}

}  // namespace forge::eval
