#include "forge/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <unordered_set>

#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/prompts.hpp"
#include "forge/text.hpp"

namespace forge::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

// Upstream column names. Corpora without stable ids get "<prefix><line_no>".
FieldMapping FieldMapping::candle() {
    FieldMapping m;
    m.id = "";
    m.cultural_group = "subject";
    m.topic = "facet";
    m.source = "";
    m.statement = "sentence";
    m.fixed_source = "CANDLE";
    return m;
}

FieldMapping FieldMapping::culture_atlas() {
    FieldMapping m;
    m.id = "";
    m.cultural_group = "country";
    m.topic = "topic";
    m.source = "";
    m.statement = "text";
    m.fixed_source = "CultureAtlas";
    return m;
}

FieldMapping FieldMapping::culture_bank() {
    FieldMapping m;
    m.id = "";
    m.cultural_group = "cultural group";
    m.topic = "topic";
    m.source = "";
    m.statement = "eval_whole_desc";
    m.fixed_source = "CultureBank";
    return m;
}

namespace {

std::optional<std::string> string_field(const json& j, const std::string& name, std::string& error) {
    auto it = j.find(name);
    if (it == j.end()) {
        error = "missing field '" + name + "'";
        return std::nullopt;
    }
    if (!it->is_string()) {
        error = "field '" + name + "' is not a string";
        return std::nullopt;
    }
    return it->get<std::string>();
}

std::string id_prefix(const FieldMapping& m) {
    return m.fixed_source.empty() ? "line-" : text::to_lower(m.fixed_source) + "-";
}

}  // namespace

ImportResult import_seed(const std::filesystem::path& path, SeedFormat, const FieldMapping& mapping) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot read seed file " + path.string());

    ImportResult result;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::is_blank(line)) continue;

        auto reject = [&](std::string reason) { result.rejects.push_back({line_no, std::move(reason), line}); };

        auto doc = json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            reject("not a JSON object");
            continue;
        }
        std::string error;
        CulturalStatement s;
        if (mapping.id.empty()) {
            s.id = id_prefix(mapping) + std::to_string(line_no);
        } else if (auto v = string_field(doc, mapping.id, error)) {
            s.id = *v;
        } else {
            reject(error);
            continue;
        }
        auto group = string_field(doc, mapping.cultural_group, error);
        if (!group) { reject(error); continue; }
        auto topic = string_field(doc, mapping.topic, error);
        if (!topic) { reject(error); continue; }
        auto statement = string_field(doc, mapping.statement, error);
        if (!statement) { reject(error); continue; }
        if (mapping.source.empty()) {
            s.source = mapping.fixed_source;
        } else if (auto v = string_field(doc, mapping.source, error)) {
            s.source = *v;
        } else {
            reject(error);
            continue;
        }
        s.cultural_group = *group;
        s.topic = *topic;
        s.statement = *statement;

        if (text::is_blank(s.id)) { reject("empty id"); continue; }
        if (text::is_blank(s.statement)) { reject("empty statement"); continue; }
        if (!seen.insert(s.id).second) { reject("duplicate id '" + s.id + "'"); continue; }
        result.statements.push_back(std::move(s));
    }
    return result;
}

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::FileUnwritable, "cannot write " + path.string());
    for (const auto& r : rejects) {
        ordered_json j;
        j["line_no"] = r.line_no;
        j["reason"] = r.reason;
        j["raw"] = r.raw;
        out << j.dump() << '\n';
    }
}

std::vector<StatementGroup> group_statements(const std::vector<CulturalStatement>& statements,
                                             std::size_t max_per_passage) {
    if (max_per_passage == 0) throw Error(ErrorKind::PreconditionViolation, "chunk size must be positive");
    std::vector<std::string> order;
    std::map<std::string, std::vector<const CulturalStatement*>> by_key;
    for (const auto& s : statements) {
        auto key = text::normalize_unit(s.cultural_group) + "|" + text::normalize_unit(s.topic);
        auto [it, inserted] = by_key.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(&s);
    }
    std::vector<StatementGroup> groups;
    for (const auto& key : order) {
        const auto& members = by_key[key];
        for (std::size_t start = 0, chunk = 0; start < members.size(); start += max_per_passage, ++chunk) {
            const auto end = std::min(members.size(), start + max_per_passage);
            groups.push_back({key + "#" + std::to_string(chunk), {members.begin() + start, members.begin() + end}});
        }
    }
    return groups;
}

std::vector<KnowledgePassage> aggregate_statements(const std::vector<CulturalStatement>& statements,
                                                   backend::Backend& generator, IssueLog* issues,
                                                   std::size_t max_per_passage) {
    if (statements.empty()) throw Error(ErrorKind::PreconditionViolation, "no statements to aggregate");
    const auto groups = group_statements(statements, max_per_passage);

    auto results = parallel_map<std::optional<KnowledgePassage>>(
        groups.size(), generator.config().max_concurrency, [&](std::size_t i) -> std::optional<KnowledgePassage> {
            const auto& group = groups[i];
            const auto& first = *group.members.front();
            KnowledgePassage p;
            p.topic_key = group.topic_key;
            p.cultural_group = text::trim(first.cultural_group);
            p.topic = text::trim(first.topic);

            ordered_json payload;
            payload["cultural_group"] = p.cultural_group;
            payload["topic"] = p.topic;
            payload["statements"] = json::array();
            std::vector<std::string> sources;
            for (const auto* s : group.members) {
                payload["statements"].push_back(s->statement);
                p.statement_ids.push_back(s->id);
                if (!s->source.empty() && std::find(sources.begin(), sources.end(), s->source) == sources.end())
                    sources.push_back(s->source);
            }
            for (std::size_t k = 0; k < sources.size(); ++k) p.source += (k ? "; " : "") + sources[k];

            backend::PromptRequest req;
            req.role = backend::Role::generator;
            req.user_prompt = std::string(prompts::passage_synthesis) + "\n" + payload.dump(2);
            try {
                p.text = text::trim(generator.complete(req).text);
            } catch (const Error& e) {
                note(issues, "aggregate", group.topic_key, e.what());
                return std::nullopt;
            }
            return p;
        });

    std::vector<KnowledgePassage> passages;
    for (auto& r : results)
        if (r) passages.push_back(std::move(*r));
    return passages;
}

ordered_json to_json(const CulturalStatement& s) {
    ordered_json j;
    j["id"] = s.id;
    j["cultural_group"] = s.cultural_group;
    j["topic"] = s.topic;
    j["source"] = s.source;
    j["statement"] = s.statement;
    return j;
}

ordered_json to_json(const KnowledgePassage& p) {
    ordered_json j;
    j["topic_key"] = p.topic_key;
    j["cultural_group"] = p.cultural_group;
    j["topic"] = p.topic;
    j["source"] = p.source;
    j["text"] = p.text;
    j["statement_ids"] = p.statement_ids;
    return j;
}

CulturalStatement statement_from_json(const json& j) {
    return {j.at("id").get<std::string>(), j.at("cultural_group").get<std::string>(), j.at("topic").get<std::string>(),
            j.at("source").get<std::string>(), j.at("statement").get<std::string>()};
}

KnowledgePassage passage_from_json(const json& j) {
    KnowledgePassage p;
    p.topic_key = j.at("topic_key").get<std::string>();
    p.cultural_group = j.at("cultural_group").get<std::string>();
    p.topic = j.at("topic").get<std::string>();
    p.source = j.value("source", "");
    p.text = j.at("text").get<std::string>();
    p.statement_ids = j.at("statement_ids").get<std::vector<std::string>>();
    return p;
}

}  // namespace forge::corpus
