#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/backend.hpp"
#include "forge/issues.hpp"
#include "forge/record.hpp"

namespace forge::multilingual {

enum class Alignment { pending, passed, failed };

std::string_view alignment_name(Alignment a);
Alignment parse_alignment(std::string_view s);

// The four translated fields U = (question, golden, target, critique).
struct RecordFields {
    std::string question;
    std::string golden;
    std::string target;
    std::string critique;

    bool operator==(const RecordFields&) const = default;
    static RecordFields of(const KnowledgeRecord& r) { return {r.question, r.golden.text, r.target.text, r.critique}; }
};

inline constexpr std::array<std::string_view, 4> kFieldNames{"question", "golden", "target", "critique"};

struct LocalizedRecord {
    std::string base_record_id;
    std::string language;  // BCP-47-style tag, fixed at creation
    std::string question;
    std::string golden;
    std::string target;
    std::string critique;
    Alignment alignment = Alignment::pending;

    RecordFields fields() const { return {question, golden, target, critique}; }
    bool operator==(const LocalizedRecord&) const = default;
};

struct AlignmentVerdict {
    bool passed = false;
    std::vector<std::string> judged_fields;  // always the four field names
    std::vector<std::string> failed_fields;
    std::string notes;
};

struct Language {
    std::string tag;
    std::string name;
};

// Default target-language set (23 tags, English pivot included).
const std::vector<Language>& default_languages();

// Tag for a language name or tag ("Chinese", "zh", "Mandarin"), restricted to
// `languages`.
std::optional<std::string> resolve_language(std::string_view name_or_tag, const std::vector<Language>& languages);

// Field-by-field translation. `attempt` > 0 requests a fresh sample.
LocalizedRecord translate_record(const RecordFields& fields, const std::string& base_record_id,
                                 const std::string& language, const std::vector<Language>& languages,
                                 backend::Backend& generator, int attempt = 0);

RecordFields back_translate(const LocalizedRecord& localized, const std::vector<Language>& languages,
                            backend::Backend& generator, int attempt = 0);

// Per-field yes/no semantic check; textually identical fields skip the judge.
// Passes iff all four fields pass. Updates `record->alignment` when given.
AlignmentVerdict check_alignment(const RecordFields& original, const RecordFields& back, backend::Backend& judge,
                                 LocalizedRecord* record = nullptr);

// translate -> back-translate -> check, retried once with a fresh translation.
// The result is either passed or failed; failures are reported.
LocalizedRecord localize(const RecordFields& fields, const std::string& base_record_id, const std::string& language,
                         const std::vector<Language>& languages, const backend::BackendSet& backends,
                         IssueLog* issues = nullptr);

nlohmann::ordered_json to_json(const LocalizedRecord& r);
LocalizedRecord localized_from_json(const nlohmann::json& j);

}  // namespace forge::multilingual
