#include "forge/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "forge/corpus.hpp"
#include "forge/error.hpp"
#include "forge/evalharness.hpp"
#include "forge/multilingual.hpp"
#include "forge/parallel.hpp"
#include "forge/record.hpp"
#include "forge/text.hpp"

namespace forge::pipeline {

namespace fs = std::filesystem;
using backend::Role;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kPivot = "en";

struct StageInfo {
    Stage stage;
    std::string_view name;
};

constexpr StageInfo kStages[] = {
    {Stage::ingest, "ingest"},     {Stage::synthesize, "synthesize"}, {Stage::critique, "critique"},
    {Stage::localize, "localize"}, {Stage::score, "score"},           {Stage::select, "select"},
    {Stage::export_, "export"},    {Stage::evaluate, "evaluate"},     {Stage::hofstede, "hofstede"},
};

// Artifact names inside work_dir.
constexpr std::string_view kStatements = "statements.jsonl";
constexpr std::string_view kRejects = "rejects.jsonl";
constexpr std::string_view kPassages = "passages.jsonl";
constexpr std::string_view kRecords = "records.jsonl";
constexpr std::string_view kCritiqued = "critiqued.jsonl";
constexpr std::string_view kLocalized = "localized.jsonl";
constexpr std::string_view kScores = "scores.jsonl";
constexpr std::string_view kPairs = "pairs.jsonl";
constexpr std::string_view kReportText = "report.txt";
constexpr std::string_view kReportJsonl = "report.jsonl";
constexpr std::string_view kEvalItems = "eval_items.jsonl";
constexpr std::string_view kHofstede = "hofstede.jsonl";

fs::path manifest_path(const PipelineConfig& c, Stage s) {
    return c.artifact(std::string(stage_name(s)) + ".manifest.json");
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::FileUnwritable, "cannot write " + path.string());
        out << content;
        if (!out) throw Error(ErrorKind::FileUnwritable, "cannot write " + path.string());
    }
    fs::rename(tmp, path);
}

template <typename T, typename F>
std::vector<T> parse_lines(const fs::path& path, F&& from_json) {
    std::vector<T> out;
    std::size_t line = 0;
    for (const auto& j : read_jsonl(path)) {
        ++line;
        try {
            out.push_back(from_json(j));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::SchemaViolation, path.string() + " entry " + std::to_string(line) + ": " + e.what());
        }
    }
    return out;
}

backend::BackendConfig backend_config_from_json(const json& j) {
    backend::BackendConfig c;
    c.endpoint_url = j.value("endpoint_url", "");
    c.api_key_env = j.value("api_key_env", "");
    c.model_name = j.value("model_name", c.model_name);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    c.retry_limit = j.value("retry_limit", c.retry_limit);
    if (j.contains("initial_backoff_ms")) c.initial_backoff = std::chrono::milliseconds(j["initial_backoff_ms"].get<int>());
    if (j.contains("max_backoff_ms")) c.max_backoff = std::chrono::milliseconds(j["max_backoff_ms"].get<int>());
    return c;
}

std::vector<multilingual::Language> language_set(const PipelineConfig& c) {
    const auto& defaults = multilingual::default_languages();
    if (c.languages.empty()) return defaults;
    std::vector<multilingual::Language> out;
    for (const auto& tag : c.languages) {
        auto resolved = multilingual::resolve_language(tag, defaults);
        if (!resolved) {
            // Tags outside the default table are allowed; the tag doubles as the name.
            out.push_back({tag, tag});
            continue;
        }
        auto it = std::find_if(defaults.begin(), defaults.end(), [&](const auto& l) { return l.tag == *resolved; });
        out.push_back(*it);
    }
    return out;
}

// Shared state for one stage invocation.
class StageRun {
public:
    StageRun(Stage stage, const PipelineConfig& config) : stage_(stage), config_(config) {}

    fs::path input(const fs::path& path) {
        inputs_[path.filename().string()] = file_sha256(path);
        return path;
    }

    void output(const fs::path& path) { outputs_[path.filename().string()] = file_sha256(path); }

    void count(const std::string& name, std::size_t n) { counts_[name] = n; }

    IssueLog* issues() { return &issues_; }

    StageResult finish() {
        auto issues = issues_.snapshot();
        std::sort(issues.begin(), issues.end(), [](const Issue& a, const Issue& b) {
            return std::tie(a.stage, a.subject, a.reason) < std::tie(b.stage, b.subject, b.reason);
        });
        std::vector<ordered_json> lines;
        for (const auto& i : issues) lines.push_back({{"stage", i.stage}, {"subject", i.subject}, {"reason", i.reason}});
        const auto issues_path = config_.artifact(std::string(stage_name(stage_)) + ".issues.jsonl");
        write_jsonl(issues_path, lines);
        output(issues_path);

        ordered_json m;
        m["stage"] = stage_name(stage_);
        m["config_hash"] = config_.config_hash;
        m["inputs"] = inputs_;
        m["outputs"] = outputs_;
        m["counts"] = counts_;
        m["issues"] = issues.size();
        write_file(manifest_path(config_, stage_), m.dump(2) + "\n");
        return {m, std::move(issues)};
    }

private:
    Stage stage_;
    const PipelineConfig& config_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
    std::map<std::string, std::size_t> counts_;
    IssueLog issues_;
};

void check_prerequisites(Stage stage, const PipelineConfig& c) {
    for (auto pre : prerequisites(stage)) {
        const auto path = manifest_path(c, pre);
        if (!fs::exists(path))
            throw Error(ErrorKind::StageOrderViolation,
                        std::string(stage_name(stage)) + " requires a completed " + std::string(stage_name(pre)) +
                            " stage (no " + path.string() + ")");
        json m;
        try {
            m = json::parse(read_file(path));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::StageOrderViolation, path.string() + " is not a valid manifest: " + e.what());
        }
        for (const auto& [name, sum] : m.at("outputs").items()) {
            const auto artifact = c.artifact(name);
            if (!fs::exists(artifact) || file_sha256(artifact) != sum.get<std::string>())
                throw Error(ErrorKind::StageOrderViolation,
                            artifact.string() + " changed since " + std::string(stage_name(pre)) + " ran; rerun it");
        }
    }
}

// ---------------------------------------------------------------------------
// Stages

void run_ingest(const PipelineConfig& c, StageRun& run) {
    if (c.seed.empty()) throw Error(ErrorKind::ConfigError, "no seed path configured");
    corpus::FieldMapping mapping;
    if (c.seed_preset == "normalized") mapping = corpus::FieldMapping::normalized();
    else if (c.seed_preset == "candle") mapping = corpus::FieldMapping::candle();
    else if (c.seed_preset == "culture_atlas") mapping = corpus::FieldMapping::culture_atlas();
    else if (c.seed_preset == "culture_bank") mapping = corpus::FieldMapping::culture_bank();
    else throw Error(ErrorKind::ConfigError, "unknown seed preset: " + c.seed_preset);

    auto imported = corpus::import_seed(run.input(c.seed), corpus::SeedFormat::jsonl, mapping);
    std::vector<ordered_json> lines;
    for (const auto& s : imported.statements) lines.push_back(corpus::to_json(s));
    write_jsonl(c.artifact(kStatements), lines);
    corpus::write_rejects(c.artifact(kRejects), imported.rejects);
    run.output(c.artifact(kStatements));
    run.output(c.artifact(kRejects));
    run.count("statements", imported.statements.size());
    run.count("rejects", imported.rejects.size());
}

void run_synthesize(const PipelineConfig& c, const backend::BackendSet& b, StageRun& run) {
    if (c.exemplars.empty()) throw Error(ErrorKind::ConfigError, "synthesize needs at least one target exemplar");
    auto statements = parse_lines<corpus::CulturalStatement>(run.input(c.artifact(kStatements)),
                                                             corpus::statement_from_json);
    auto passages = corpus::aggregate_statements(statements, b.for_role(Role::generator), run.issues());
    std::vector<ordered_json> lines;
    for (const auto& p : passages) lines.push_back(corpus::to_json(p));
    write_jsonl(c.artifact(kPassages), lines);
    run.output(c.artifact(kPassages));

    const auto n = std::min(c.target_exemplars, c.exemplars.size());
    auto records = synthesis::synthesize(passages, b, std::span(c.exemplars.data(), n), run.issues());
    lines.clear();
    for (const auto& r : records) lines.push_back(synthesis::to_json(r));
    write_jsonl(c.artifact(kRecords), lines);
    run.output(c.artifact(kRecords));
    run.count("passages", passages.size());
    run.count("records", records.size());
}

void run_critique(const PipelineConfig& c, const backend::BackendSet& b, StageRun& run) {
    auto records =
        parse_lines<synthesis::SynthesisRecord>(run.input(c.artifact(kRecords)), synthesis::synthesis_record_from_json);
    auto critiqued = parallel_map<std::optional<KnowledgeRecord>>(
        records.size(), b.for_role(Role::generator).config().max_concurrency,
        [&](std::size_t i) -> std::optional<KnowledgeRecord> {
            try {
                return critique_record(records[i], b, run.issues());
            } catch (const Error& e) {
                note(run.issues(), "critique", records[i].question.id, e.what());
                return std::nullopt;
            }
        });
    std::vector<ordered_json> lines;
    for (const auto& r : critiqued)
        if (r) lines.push_back(to_json(*r));
    write_jsonl(c.artifact(kCritiqued), lines);
    run.output(c.artifact(kCritiqued));
    run.count("records", lines.size());
}

void run_localize(const PipelineConfig& c, const backend::BackendSet& b, StageRun& run) {
    auto records = parse_lines<KnowledgeRecord>(run.input(c.artifact(kCritiqued)), knowledge_record_from_json);
    const auto languages = language_set(c);

    struct Job {
        std::size_t record;
        std::string language;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (c.localize_mode == LocalizeMode::all) {
            for (const auto& l : languages)
                if (l.tag != kPivot) jobs.push_back({i, l.tag});
            continue;
        }
        const auto& lang = records[i].golden.language;
        auto tag = multilingual::resolve_language(lang, languages);
        if (!tag) {
            note(run.issues(), "localize", records[i].record_id, "language not in configured set: " + lang);
            continue;
        }
        if (*tag != kPivot) jobs.push_back({i, *tag});
    }

    auto localized = parallel_map<std::optional<multilingual::LocalizedRecord>>(
        jobs.size(), b.for_role(Role::generator).config().max_concurrency,
        [&](std::size_t k) -> std::optional<multilingual::LocalizedRecord> {
            const auto& r = records[jobs[k].record];
            try {
                return multilingual::localize(multilingual::RecordFields::of(r), r.record_id, jobs[k].language,
                                              languages, b, run.issues());
            } catch (const Error& e) {
                note(run.issues(), "localize", r.record_id + "@" + jobs[k].language, e.what());
                return std::nullopt;
            }
        });
    std::vector<ordered_json> lines;
    std::size_t passed = 0, failed = 0;
    for (const auto& l : localized) {
        if (!l) continue;
        (l->alignment == multilingual::Alignment::passed ? passed : failed)++;
        lines.push_back(multilingual::to_json(*l));
    }
    write_jsonl(c.artifact(kLocalized), lines);
    run.output(c.artifact(kLocalized));
    run.count("localized", lines.size());
    run.count("passed", passed);
    run.count("failed", failed);
}

void run_score(const PipelineConfig& c, const backend::BackendSet& b, StageRun& run) {
    auto records = parse_lines<KnowledgeRecord>(run.input(c.artifact(kCritiqued)), knowledge_record_from_json);
    auto matcher = reward::make_matcher(c.matcher, &b.for_role(Role::judge));
    std::vector<ordered_json> lines;
    for (const auto& r : records) {
        reward::ExtendedUnits target{r.target_units, reward::ContextualUnits::of(r.target)};
        reward::ExtendedUnits golden{r.golden_units, reward::ContextualUnits::of(r.golden)};
        lines.push_back(reward::score_to_json(r.record_id, reward::score_answer(target, golden, *matcher, run.issues())));
    }
    write_jsonl(c.artifact(kScores), lines);
    run.output(c.artifact(kScores));
    run.count("scored", lines.size());
}

void run_select(const PipelineConfig& c, StageRun& run) {
    auto records = parse_lines<KnowledgeRecord>(run.input(c.artifact(kCritiqued)), knowledge_record_from_json);
    std::map<std::string, const KnowledgeRecord*> by_id;
    for (const auto& r : records) by_id[r.record_id] = &r;

    std::vector<reward::ScoredRecord> scored;
    for (const auto& j : read_jsonl(run.input(c.artifact(kScores)))) {
        const auto id = j.at("record_id").get<std::string>();
        auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorKind::SchemaViolation, "score for unknown record " + id);
        const auto& r = *it->second;
        scored.push_back({id, r.question, r.golden.text, r.target.text, reward::score_from_json(j)});
    }
    auto pairs = reward::select_preference_pairs(scored, c.dpo_threshold);
    std::vector<ordered_json> lines;
    for (const auto& p : pairs) {
        ordered_json j;
        j["record_id"] = p.record_id;
        j["prompt"] = p.prompt;
        j["chosen"] = p.chosen;
        j["rejected"] = p.rejected;
        j["s_f1"] = p.s_f1;
        lines.push_back(std::move(j));
    }
    write_jsonl(c.artifact(kPairs), lines);
    run.output(c.artifact(kPairs));
    run.count("scored", scored.size());
    run.count("pairs", pairs.size());
}

void run_export(const PipelineConfig& c, StageRun& run) {
    auto records = parse_lines<KnowledgeRecord>(run.input(c.artifact(kCritiqued)), knowledge_record_from_json);
    auto localized =
        parse_lines<multilingual::LocalizedRecord>(run.input(c.artifact(kLocalized)), multilingual::localized_from_json);
    std::erase_if(localized, [](const auto& l) { return l.alignment != multilingual::Alignment::passed; });
    auto pairs = parse_lines<reward::PreferencePair>(run.input(c.artifact(kPairs)), [](const json& j) {
        return reward::PreferencePair{j.at("record_id").get<std::string>(), j.at("prompt").get<std::string>(),
                                      j.at("chosen").get<std::string>(), j.at("rejected").get<std::string>(),
                                      j.at("s_f1").get<double>()};
    });

    const auto sft = datasets::export_sft(records, localized, c.sft_path);
    const auto dpo = datasets::export_dpo(pairs, c.dpo_path);
    datasets::emit_training_config({c.sft_path, c.dpo_path}, c.training, c.train_config_path);
    for (const auto& p : {c.sft_path, c.dpo_path, c.train_config_path}) {
        // Exports may live outside work_dir; the manifest keys them by file name.
        run.output(p);
    }
    run.count("sft", sft);
    run.count("dpo", dpo);
}

std::map<std::string, std::string> item_attributes(const json& j, std::string_view task) {
    std::map<std::string, std::string> out{{"task", std::string(task)}};
    for (const auto& [k, v] : j.items())
        if (v.is_string() && k != "id" && k != "question" && k != "golden_answer") out[k] = v.get<std::string>();
    return out;
}

void run_evaluate(const PipelineConfig& c, const backend::BackendSet& b, StageRun& run) {
    const auto& e = c.eval;
    if (e.open_ended.empty() && e.mcq.empty() && e.containment.empty())
        throw Error(ErrorKind::ConfigError, "evaluate needs at least one benchmark file");
    auto& target = b.for_role(Role::target);
    const auto workers = target.config().max_concurrency;
    auto ask = [&](const std::string& prompt, double temperature) {
        backend::PromptRequest req;
        req.role = Role::target;
        req.user_prompt = prompt;
        req.temperature = temperature;
        return target.complete(req).text;
    };
    std::vector<std::optional<eval::ItemScore>> scores;

    if (!e.open_ended.empty()) {
        auto raw = read_jsonl(run.input(e.open_ended));
        auto matcher = reward::make_matcher(c.matcher, &b.for_role(Role::judge));
        auto part = parallel_map<std::optional<eval::ItemScore>>(
            raw.size(), workers, [&](std::size_t i) -> std::optional<eval::ItemScore> {
                std::string id = raw[i].value("id", "#" + std::to_string(i + 1));
                try {
                    auto item = eval::open_ended_from_json(raw[i]);
                    const auto reply =
                        ask(eval::open_ended_prompt(item, e.one_shot ? &*e.one_shot : nullptr), 0.7);
                    auto s = eval::score_open_ended(item, reply, b.for_role(Role::generator), *matcher, run.issues());
                    return eval::ItemScore{item.id, item_attributes(raw[i], "open_ended"),
                                           {{"s_p", s.s_p}, {"s_r", s.s_r}, {"s_f1", s.s_f1}}};
                } catch (const std::exception& ex) {
                    note(run.issues(), "evaluate", id, ex.what());
                    return std::nullopt;
                }
            });
        scores.insert(scores.end(), part.begin(), part.end());
    }
    if (!e.mcq.empty()) {
        auto raw = read_jsonl(run.input(e.mcq));
        auto part = parallel_map<std::optional<eval::ItemScore>>(
            raw.size(), workers, [&](std::size_t i) -> std::optional<eval::ItemScore> {
                std::string id = raw[i].value("id", "#" + std::to_string(i + 1));
                try {
                    auto item = eval::mcq_from_json(raw[i]);
                    auto outcome = eval::score_mcq(item, ask(eval::mcq_prompt(item), 0.0), run.issues());
                    return eval::ItemScore{item.id, item_attributes(raw[i], "mcq"),
                                           {{"mcq_precision", outcome.correct ? 1.0 : 0.0}}};
                } catch (const std::exception& ex) {
                    note(run.issues(), "evaluate", id, ex.what());
                    return std::nullopt;
                }
            });
        scores.insert(scores.end(), part.begin(), part.end());
    }
    if (!e.containment.empty()) {
        auto raw = read_jsonl(run.input(e.containment));
        auto part = parallel_map<std::optional<eval::ItemScore>>(
            raw.size(), workers, [&](std::size_t i) -> std::optional<eval::ItemScore> {
                std::string id = raw[i].value("id", "#" + std::to_string(i + 1));
                try {
                    auto item = eval::containment_from_json(raw[i]);
                    const bool ok = eval::score_containment(item, ask(eval::containment_prompt(item), 0.0));
                    return eval::ItemScore{item.id, item_attributes(raw[i], "containment"),
                                           {{"containment_accuracy", ok ? 1.0 : 0.0}}};
                } catch (const std::exception& ex) {
                    note(run.issues(), "evaluate", id, ex.what());
                    return std::nullopt;
                }
            });
        scores.insert(scores.end(), part.begin(), part.end());
    }

    std::vector<eval::ItemScore> kept;
    for (auto& s : scores)
        if (s) kept.push_back(std::move(*s));
    if (kept.empty()) throw Error(ErrorKind::PreconditionViolation, "no evaluation item could be scored");

    std::vector<ordered_json> lines;
    for (const auto& s : kept) {
        ordered_json j;
        j["id"] = s.item_id;
        j["attributes"] = s.attributes;
        j["metrics"] = s.metrics;
        lines.push_back(std::move(j));
    }
    write_jsonl(c.artifact(kEvalItems), lines);
    auto report = eval::aggregate_report(std::move(kept), e.grouping);
    write_file(c.artifact(kReportText), report.render_table());
    report.write_jsonl(c.artifact(kReportJsonl));
    for (auto name : {kEvalItems, kReportText, kReportJsonl}) run.output(c.artifact(name));
    run.count("items", report.per_item.size());
}

void run_hofstede(const PipelineConfig& c, const backend::BackendSet& b, StageRun& run) {
    const auto& h = c.survey;
    if (h.survey.empty()) throw Error(ErrorKind::ConfigError, "hofstede needs a survey file");
    if (h.cultures.empty()) throw Error(ErrorKind::ConfigError, "hofstede needs at least one culture");
    const auto survey = hofstede::load_survey(run.input(h.survey));
    std::map<std::string, hofstede::DimensionScores> reference;
    if (!h.reference.empty()) reference = hofstede::load_reference_scores(run.input(h.reference));

    std::vector<ordered_json> lines;
    std::size_t with_distance = 0;
    for (const auto& culture : h.cultures) {
        hofstede::DimensionScores scores;
        try {
            auto responses =
                hofstede::collect_vsm_responses(b.for_role(Role::target), culture, survey, h.repetitions, run.issues());
            scores = hofstede::score_dimensions(responses, h.constants);
        } catch (const Error& e) {
            note(run.issues(), "hofstede", culture, e.what());
            continue;
        }
        ordered_json j;
        j["culture"] = culture;
        j["scores"] = hofstede::scores_to_json(scores);
        if (auto it = reference.find(culture); it != reference.end()) {
            const double d = hofstede::cultural_distance(scores, it->second);
            j["distance"] = d;
            ++with_distance;
        } else {
            j["distance"] = nullptr;
        }
        lines.push_back(std::move(j));
    }
    if (lines.empty()) throw Error(ErrorKind::IncompleteSurvey, "no culture produced a complete survey");
    write_jsonl(c.artifact(kHofstede), lines);
    run.output(c.artifact(kHofstede));
    run.count("cultures", lines.size());
    run.count("with_reference", with_distance);
}

}  // namespace

std::string_view stage_name(Stage s) {
    for (const auto& i : kStages)
        if (i.stage == s) return i.name;
    return "?";
}

Stage parse_stage(std::string_view name) {
    for (const auto& i : kStages)
        if (i.name == name) return i.stage;
    throw Error(ErrorKind::ConfigError, "unknown stage: " + std::string(name));
}

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> stages = [] {
        std::vector<Stage> v;
        for (const auto& i : kStages) v.push_back(i.stage);
        return v;
    }();
    return stages;
}

std::vector<Stage> prerequisites(Stage s) {
    switch (s) {
        case Stage::synthesize: return {Stage::ingest};
        case Stage::critique: return {Stage::synthesize};
        case Stage::localize: return {Stage::critique};
        case Stage::score: return {Stage::critique};
        case Stage::select: return {Stage::score};
        case Stage::export_: return {Stage::localize, Stage::select};
        default: return {};
    }
}

void PipelineConfig::validate() const {
    if (!(dpo_threshold > 0.0 && dpo_threshold <= 1.0))
        throw Error(ErrorKind::ConfigError, "dpo_threshold must lie in (0, 1]");
    if (work_dir.empty()) throw Error(ErrorKind::ConfigError, "no work_dir configured");
    for (const auto role : {Role::generator, Role::target, Role::judge})
        if (!backends.count(role))
            throw Error(ErrorKind::ConfigError, "no backend configured for " + std::string(backend::role_name(role)));
    if (survey.repetitions < 1) throw Error(ErrorKind::ConfigError, "hofstede repetitions must be >= 1");

    std::vector<fs::path> paths{seed, sft_path, dpo_path, train_config_path};
    for (auto name : {kStatements, kRejects, kPassages, kRecords, kCritiqued, kLocalized, kScores, kPairs, kReportText,
                      kReportJsonl, kEvalItems, kHofstede})
        paths.push_back(artifact(name));
    std::set<std::string> seen;
    for (const auto& p : paths) {
        if (p.empty()) continue;
        const auto key = fs::weakly_canonical(p).string();
        if (!seen.insert(key).second) throw Error(ErrorKind::ConfigError, "artifact path used twice: " + p.string());
    }
    // Exported files are checksummed by name next to work_dir artifacts.
    std::set<std::string> names;
    for (const auto& p : {sft_path, dpo_path, train_config_path})
        if (!names.insert(p.filename().string()).second)
            throw Error(ErrorKind::ConfigError, "export file names must differ: " + p.filename().string());
}

std::string interpolate_env(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '$' && s.substr(i, 3) == "$${") {
            out += "${";
            i += 2;
            continue;
        }
        if (s[i] == '$' && i + 1 < s.size() && s[i + 1] == '{') {
            const auto close = s.find('}', i + 2);
            if (close == std::string_view::npos)
                throw Error(ErrorKind::ConfigError, "unterminated ${ in config value");
            const std::string name(s.substr(i + 2, close - i - 2));
            const char* value = std::getenv(name.c_str());
            if (!value) throw Error(ErrorKind::ConfigError, "environment variable not set: " + name);
            out += value;
            i = close;
            continue;
        }
        out += s[i];
    }
    return out;
}

json interpolate_config(const json& j) {
    if (j.is_string()) return interpolate_env(j.get_ref<const std::string&>());
    if (j.is_object()) {
        json out = json::object();
        for (const auto& [k, v] : j.items()) out[k] = interpolate_config(v);
        return out;
    }
    if (j.is_array()) {
        json out = json::array();
        for (const auto& v : j) out.push_back(interpolate_config(v));
        return out;
    }
    return j;
}

PipelineConfig config_from_json(const json& raw_in, const Overrides& overrides, const fs::path& base_dir) {
    json raw = raw_in;
    if (!raw.is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
    if (overrides.threshold) raw["dpo_threshold"] = *overrides.threshold;
    if (!overrides.languages.empty()) raw["languages"] = overrides.languages;
    if (overrides.matcher) raw["matcher"] = *overrides.matcher == reward::MatcherKind::judge ? "judge" : "exact";
    if (!overrides.mock_script.empty()) raw["mock_script"] = fs::absolute(overrides.mock_script).string();

    PipelineConfig c;
    c.config_hash = text::sha256_hex(raw.dump());
    const json j = interpolate_config(raw);
    try {
        auto path = [&](const json& obj, const char* key) { return resolve(base_dir, obj.value(key, "")); };

        const json backends = j.value("backends", json::object());
        const json fallback = backends.value("default", json::object());
        for (const auto role : {Role::generator, Role::target, Role::judge}) {
            json merged = fallback;
            merged.update(backends.value(std::string(backend::role_name(role)), json::object()));
            RoleBackend rb;
            rb.config = backend_config_from_json(merged);
            rb.config.cache_dir = path(merged, "cache_dir");
            rb.mock_script = path(merged, "mock_script");
            if (j.contains("mock_script")) rb.mock_script = path(j, "mock_script");
            c.backends[role] = std::move(rb);
        }

        if (j.contains("languages")) c.languages = j["languages"].get<std::vector<std::string>>();
        const auto mode = j.value("localize_mode", "culture");
        if (mode == "culture") c.localize_mode = LocalizeMode::culture;
        else if (mode == "all") c.localize_mode = LocalizeMode::all;
        else throw Error(ErrorKind::ConfigError, "unknown localize_mode: " + mode);
        c.dpo_threshold = j.value("dpo_threshold", reward::kDefaultDpoThreshold);
        c.matcher = reward::parse_matcher(j.value("matcher", "exact"));

        const json seed = j.value("seed", json::object());
        c.seed = path(seed, "path");
        c.seed_preset = seed.value("preset", "normalized");

        c.work_dir = path(j, "work_dir");
        const json exports = j.value("exports", json::object());
        auto export_path = [&](const char* key, const char* fallback_name) {
            auto p = path(exports, key);
            return p.empty() ? c.work_dir / fallback_name : p;
        };
        c.sft_path = export_path("sft", "sft.jsonl");
        c.dpo_path = export_path("dpo", "dpo.jsonl");
        c.train_config_path = export_path("train_config", "train_config.txt");

        for (const auto& e : j.value("exemplars", json::array()))
            c.exemplars.push_back({e.at("question").get<std::string>(), e.at("answer").get<std::string>()});
        c.target_exemplars = j.value("target_exemplars", c.target_exemplars);
        if (c.target_exemplars == 0) throw Error(ErrorKind::ConfigError, "target_exemplars must be >= 1");

        const json t = j.value("training", json::object());
        c.training.sft_learning_rate = t.value("sft_learning_rate", c.training.sft_learning_rate);
        c.training.dpo_learning_rate = t.value("dpo_learning_rate", c.training.dpo_learning_rate);
        c.training.warmup_ratio = t.value("warmup_ratio", c.training.warmup_ratio);
        c.training.batch_size = t.value("batch_size", c.training.batch_size);
        c.training.max_steps = t.value("max_steps", c.training.max_steps);
        c.training.lora_rank = t.value("lora_rank", c.training.lora_rank);

        const json ev = j.value("evaluate", json::object());
        c.eval.open_ended = path(ev, "open_ended");
        c.eval.mcq = path(ev, "mcq");
        c.eval.containment = path(ev, "containment");
        if (ev.contains("grouping")) c.eval.grouping = ev["grouping"].get<std::string>();
        if (ev.contains("one_shot"))
            c.eval.one_shot = synthesis::Exemplar{ev["one_shot"].at("question").get<std::string>(),
                                                  ev["one_shot"].at("answer").get<std::string>()};

        const json h = j.value("hofstede", json::object());
        c.survey.survey = path(h, "survey");
        c.survey.reference = path(h, "reference");
        if (h.contains("cultures")) c.survey.cultures = h["cultures"].get<std::vector<std::string>>();
        c.survey.repetitions = h.value("repetitions", 1);
        if (h.contains("constants")) c.survey.constants = hofstede::constants_from_json(h["constants"]);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigError, e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigError) throw;
        throw Error(ErrorKind::ConfigError, e.what());
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const fs::path& path, const Overrides& overrides) {
    std::string content;
    try {
        content = read_file(path);
    } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, e.what());
    }
    json raw;
    try {
        raw = json::parse(content);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigError, path.string() + ": " + e.what());
    }
    return config_from_json(raw, overrides, path.parent_path());
}

backend::BackendSet make_backends(const PipelineConfig& config) {
    std::map<fs::path, std::shared_ptr<backend::MockTransport>> mocks;
    auto make = [&](Role role) {
        const auto& rb = config.backends.at(role);
        std::shared_ptr<backend::Transport> transport;
        if (!rb.mock_script.empty()) {
            auto& m = mocks[rb.mock_script];
            if (!m) m = backend::MockTransport::from_file(rb.mock_script);
            transport = m;
        } else if (!rb.config.endpoint_url.empty()) {
            transport = std::make_shared<backend::HttpTransport>();
        } else {
            throw Error(ErrorKind::ConfigError,
                        std::string(backend::role_name(role)) + " backend needs endpoint_url or mock_script");
        }
        return std::make_shared<backend::Backend>(rb.config, transport);
    };
    return {make(Role::generator), make(Role::target), make(Role::judge)};
}

StageResult run_stage(Stage stage, const PipelineConfig& config, const backend::BackendSet& backends) {
    check_prerequisites(stage, config);
    fs::create_directories(config.work_dir);
    StageRun run(stage, config);
    switch (stage) {
        case Stage::ingest: run_ingest(config, run); break;
        case Stage::synthesize: run_synthesize(config, backends, run); break;
        case Stage::critique: run_critique(config, backends, run); break;
        case Stage::localize: run_localize(config, backends, run); break;
        case Stage::score: run_score(config, backends, run); break;
        case Stage::select: run_select(config, run); break;
        case Stage::export_: run_export(config, run); break;
        case Stage::evaluate: run_evaluate(config, backends, run); break;
        case Stage::hofstede: run_hofstede(config, backends, run); break;
    }
    return run.finish();
}

StageResult run_stage(Stage stage, const PipelineConfig& config) {
    const bool needs_model = stage != Stage::ingest && stage != Stage::select && stage != Stage::export_;
    check_prerequisites(stage, config);
    return run_stage(stage, config, needs_model ? make_backends(config) : backend::BackendSet{});
}

std::string file_sha256(const fs::path& path) { return text::sha256_hex(read_file(path)); }

std::vector<json> read_jsonl(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot read " + path.string());
    std::vector<json> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (text::is_blank(line)) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::SchemaViolation, path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

void write_jsonl(const fs::path& path, const std::vector<ordered_json>& lines) {
    std::string content;
    for (const auto& l : lines) content += l.dump() + "\n";
    write_file(path, content);
}

}  // namespace forge::pipeline
