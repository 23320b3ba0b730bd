#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/backend.hpp"
#include "forge/issues.hpp"

namespace forge::corpus {

struct CulturalStatement {
    std::string id;
    std::string cultural_group;
    std::string topic;
    std::string source;
    std::string statement;

    bool operator==(const CulturalStatement&) const = default;
};

struct KnowledgePassage {
    std::string topic_key;  // "<group>|<topic>#<chunk>" after normalization; unique per corpus
    std::string cultural_group;
    std::string topic;
    std::string source;
    std::string text;
    std::vector<std::string> statement_ids;

    bool operator==(const KnowledgePassage&) const = default;
};

struct Reject {
    std::size_t line_no = 0;  // 1-based
    std::string reason;
    std::string raw;
};

// Names of the seed fields in a source corpus. The normalized schema is the
// default; presets cover the upstream statement corpora.
struct FieldMapping {
    std::string id = "id";
    std::string cultural_group = "cultural_group";
    std::string topic = "topic";
    std::string source = "source";
    std::string statement = "statement";
    std::string fixed_source;  // used when the corpus has no source column

    static FieldMapping normalized() { return {}; }
    static FieldMapping candle();
    static FieldMapping culture_atlas();
    static FieldMapping culture_bank();
};

struct ImportResult {
    std::vector<CulturalStatement> statements;
    std::vector<Reject> rejects;
};

enum class SeedFormat { jsonl };

// One statement per well-formed line in input order. Blank lines are skipped;
// every other malformed line (bad JSON, missing or non-string field, empty
// id/statement, duplicate id) lands in `rejects`.
ImportResult import_seed(const std::filesystem::path& path, SeedFormat format = SeedFormat::jsonl,
                         const FieldMapping& mapping = FieldMapping::normalized());

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects);

inline constexpr std::size_t kMaxStatementsPerPassage = 12;

struct StatementGroup {
    std::string topic_key;
    std::vector<const CulturalStatement*> members;
};

// Partition by normalized (cultural_group, topic) in first-appearance order,
// chunking groups above `max_per_passage`. Pure.
std::vector<StatementGroup> group_statements(const std::vector<CulturalStatement>& statements,
                                             std::size_t max_per_passage = kMaxStatementsPerPassage);

// Groups the statements and asks the generator for one paragraph per group.
// Groups whose backend call fails are skipped and recorded in `issues`.
std::vector<KnowledgePassage> aggregate_statements(const std::vector<CulturalStatement>& statements,
                                                   backend::Backend& generator, IssueLog* issues = nullptr,
                                                   std::size_t max_per_passage = kMaxStatementsPerPassage);

nlohmann::ordered_json to_json(const CulturalStatement& s);
nlohmann::ordered_json to_json(const KnowledgePassage& p);
CulturalStatement statement_from_json(const nlohmann::json& j);
KnowledgePassage passage_from_json(const nlohmann::json& j);

}  // namespace forge::corpus
