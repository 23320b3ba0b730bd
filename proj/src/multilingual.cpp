#include "forge/multilingual.hpp"

#include "forge/error.hpp"
#include "forge/prompts.hpp"
#include "forge/text.hpp"

namespace forge::multilingual {

using backend::PromptRequest;
using backend::Role;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view alignment_name(Alignment a) {
    switch (a) {
        case Alignment::pending: return "pending";
        case Alignment::passed: return "passed";
        case Alignment::failed: return "failed";
    }
    return "pending";
}

Alignment parse_alignment(std::string_view s) {
    if (s == "pending") return Alignment::pending;
    if (s == "passed") return Alignment::passed;
    if (s == "failed") return Alignment::failed;
    throw Error(ErrorKind::SchemaViolation, "unknown alignment '" + std::string(s) + "'");
}

const std::vector<Language>& default_languages() {
    static const std::vector<Language> langs{
        {"en", "English"},   {"zh", "Chinese"},    {"ar", "Arabic"},  {"es", "Spanish"},    {"fr", "French"},
        {"de", "German"},    {"ja", "Japanese"},   {"ko", "Korean"},  {"ru", "Russian"},    {"pt", "Portuguese"},
        {"it", "Italian"},   {"hi", "Hindi"},      {"bn", "Bengali"}, {"id", "Indonesian"}, {"ms", "Malay"},
        {"th", "Thai"},      {"vi", "Vietnamese"}, {"tr", "Turkish"}, {"fa", "Persian"},    {"sw", "Swahili"},
        {"am", "Amharic"},   {"el", "Greek"},      {"ur", "Urdu"},
    };
    return langs;
}

std::optional<std::string> resolve_language(std::string_view name_or_tag, const std::vector<Language>& languages) {
    static const std::vector<std::pair<std::string_view, std::string_view>> aliases{
        {"mandarin", "zh"}, {"cantonese", "zh"}, {"farsi", "fa"}, {"bangla", "bn"}, {"bahasa indonesia", "id"},
        {"bahasa melayu", "ms"}, {"kiswahili", "sw"},
    };
    const auto key = text::normalize_unit(name_or_tag);
    for (const auto& l : languages)
        if (text::to_lower(l.tag) == key || text::to_lower(l.name) == key) return l.tag;
    for (const auto& [alias, tag] : aliases) {
        if (alias != key) continue;
        for (const auto& l : languages)
            if (l.tag == tag) return l.tag;
    }
    return std::nullopt;
}

namespace {

const Language& find_language(const std::string& tag, const std::vector<Language>& languages) {
    for (const auto& l : languages)
        if (l.tag == tag) return l;
    throw Error(ErrorKind::PreconditionViolation, "language '" + tag + "' is not in the configured set");
}

void require_fields(const RecordFields& f) {
    const std::array<const std::string*, 4> values{&f.question, &f.golden, &f.target, &f.critique};
    for (std::size_t i = 0; i < values.size(); ++i)
        if (text::is_blank(*values[i]))
            throw Error(ErrorKind::PreconditionViolation, "field '" + std::string(kFieldNames[i]) + "' is empty");
}

std::string translate_text(std::string_view tmpl, const Language& lang, const std::string& body,
                           backend::Backend& generator, int attempt) {
    PromptRequest req;
    req.role = Role::generator;
    req.user_prompt = prompts::fill_named(tmpl, "language", lang.name) + body;
    if (attempt > 0) req.seed = attempt;
    return text::trim(generator.complete(req).text);
}

}  // namespace

LocalizedRecord translate_record(const RecordFields& fields, const std::string& base_record_id,
                                 const std::string& language, const std::vector<Language>& languages,
                                 backend::Backend& generator, int attempt) {
    require_fields(fields);
    const auto& lang = find_language(language, languages);
    LocalizedRecord out;
    out.base_record_id = base_record_id;
    out.language = lang.tag;
    out.question = translate_text(prompts::translation, lang, fields.question, generator, attempt);
    out.golden = translate_text(prompts::translation, lang, fields.golden, generator, attempt);
    out.target = translate_text(prompts::translation, lang, fields.target, generator, attempt);
    out.critique = translate_text(prompts::translation, lang, fields.critique, generator, attempt);
    return out;
}

RecordFields back_translate(const LocalizedRecord& localized, const std::vector<Language>& languages,
                            backend::Backend& generator, int attempt) {
    require_fields(localized.fields());
    const auto& lang = find_language(localized.language, languages);
    return {translate_text(prompts::back_translation, lang, localized.question, generator, attempt),
            translate_text(prompts::back_translation, lang, localized.golden, generator, attempt),
            translate_text(prompts::back_translation, lang, localized.target, generator, attempt),
            translate_text(prompts::back_translation, lang, localized.critique, generator, attempt)};
}

AlignmentVerdict check_alignment(const RecordFields& original, const RecordFields& back, backend::Backend& judge,
                                 LocalizedRecord* record) {
    require_fields(original);
    require_fields(back);
    const std::array<std::pair<const std::string*, const std::string*>, 4> pairs{
        std::pair{&original.question, &back.question}, std::pair{&original.golden, &back.golden},
        std::pair{&original.target, &back.target}, std::pair{&original.critique, &back.critique}};

    AlignmentVerdict verdict;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [orig, bt] = pairs[i];
        verdict.judged_fields.emplace_back(kFieldNames[i]);
        if (*orig == *bt) continue;

        PromptRequest req;
        req.role = Role::judge;
        req.temperature = 0.0;
        req.user_prompt = std::string(prompts::alignment_check) + "\nOriginal:\n" + *orig + "\n\nBack-translated:\n" + *bt;
        const auto reply = judge.complete(req).text;
        const auto ok = text::parse_yes_no(reply);
        if (ok && *ok) continue;
        verdict.failed_fields.emplace_back(kFieldNames[i]);
        if (!verdict.notes.empty()) verdict.notes += "; ";
        verdict.notes += std::string(kFieldNames[i]) + (ok ? ": meaning differs" : ": unparseable verdict");
    }
    verdict.passed = verdict.failed_fields.empty();
    if (record) record->alignment = verdict.passed ? Alignment::passed : Alignment::failed;
    return verdict;
}

LocalizedRecord localize(const RecordFields& fields, const std::string& base_record_id, const std::string& language,
                         const std::vector<Language>& languages, const backend::BackendSet& backends,
                         IssueLog* issues) {
    auto& generator = backends.for_role(Role::generator);
    auto& judge = backends.for_role(Role::judge);
    const auto subject = base_record_id + "@" + language;

    LocalizedRecord last{base_record_id, language, "", "", "", "", Alignment::failed};
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            auto localized = translate_record(fields, base_record_id, language, languages, generator, attempt);
            auto back = back_translate(localized, languages, generator, attempt);
            auto verdict = check_alignment(fields, back, judge, &localized);
            if (verdict.passed) return localized;
            note(issues, "localize", subject, "attempt " + std::to_string(attempt + 1) + " failed: " + verdict.notes);
            last = std::move(localized);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::PreconditionViolation) throw;
            note(issues, "localize", subject, "attempt " + std::to_string(attempt + 1) + " failed: " + e.what());
        }
    }
    last.alignment = Alignment::failed;
    return last;
}

ordered_json to_json(const LocalizedRecord& r) {
    ordered_json j;
    j["base_record_id"] = r.base_record_id;
    j["language"] = r.language;
    j["question"] = r.question;
    j["golden"] = r.golden;
    j["target"] = r.target;
    j["critique"] = r.critique;
    j["alignment"] = alignment_name(r.alignment);
    return j;
}

LocalizedRecord localized_from_json(const json& j) {
    return {j.at("base_record_id").get<std::string>(), j.at("language").get<std::string>(),
            j.at("question").get<std::string>(),       j.at("golden").get<std::string>(),
            j.at("target").get<std::string>(),         j.at("critique").get<std::string>(),
            parse_alignment(j.at("alignment").get<std::string>())};
}

}  // namespace forge::multilingual
