#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/backend.hpp"
#include "forge/datasets.hpp"
#include "forge/hofstede.hpp"
#include "forge/issues.hpp"
#include "forge/reward.hpp"
#include "forge/synthesis.hpp"

namespace forge::pipeline {

enum class Stage { ingest, synthesize, critique, localize, score, select, export_, evaluate, hofstede };

std::string_view stage_name(Stage s);
// Unknown names raise ConfigError.
Stage parse_stage(std::string_view name);
const std::vector<Stage>& all_stages();

// Stages whose manifests must exist (with unchanged outputs) before `s` runs.
std::vector<Stage> prerequisites(Stage s);

struct RoleBackend {
    backend::BackendConfig config;
    std::filesystem::path mock_script;  // when set, replaces the HTTP transport
};

struct EvalSettings {
    std::filesystem::path open_ended;
    std::filesystem::path mcq;
    std::filesystem::path containment;
    std::optional<std::string> grouping;
    std::optional<synthesis::Exemplar> one_shot;
};

struct HofstedeSettings {
    std::filesystem::path survey;
    std::vector<std::string> cultures;
    int repetitions = 1;
    std::filesystem::path reference;  // optional reference-scores JSONL
    hofstede::VsmConstants constants;
};

enum class LocalizeMode {
    culture,  // each record into the language of its cultural group
    all,      // each record into every configured non-pivot language
};

struct PipelineConfig {
    std::map<backend::Role, RoleBackend> backends;
    std::vector<std::string> languages;  // tags; empty = the default set
    LocalizeMode localize_mode = LocalizeMode::culture;
    double dpo_threshold = reward::kDefaultDpoThreshold;
    reward::MatcherKind matcher = reward::MatcherKind::exact;
    std::filesystem::path seed;
    std::string seed_preset = "normalized";
    std::filesystem::path work_dir;
    std::filesystem::path sft_path;
    std::filesystem::path dpo_path;
    std::filesystem::path train_config_path;
    std::vector<synthesis::Exemplar> exemplars;
    std::size_t target_exemplars = 1;
    datasets::TrainingHyperparams training;
    EvalSettings eval;
    HofstedeSettings survey;
    std::string config_hash;  // sha256 of the effective config before interpolation

    // Threshold range, distinct artifact paths. Raises ConfigError.
    void validate() const;
    std::filesystem::path artifact(std::string_view name) const { return work_dir / std::string(name); }
};

struct Overrides {
    std::optional<double> threshold;
    std::vector<std::string> languages;
    std::optional<reward::MatcherKind> matcher;
    std::filesystem::path mock_script;
};

// Replaces ${NAME} with the environment value. Unset variables raise
// ConfigError; "$${" escapes a literal "${".
std::string interpolate_env(std::string_view s);
nlohmann::json interpolate_config(const nlohmann::json& j);

// Relative paths resolve against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& raw, const Overrides& overrides = {},
                                 const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

backend::BackendSet make_backends(const PipelineConfig& config);

struct StageResult {
    nlohmann::ordered_json manifest;
    std::vector<Issue> issues;  // sorted
};

// Checks prerequisites, runs the stage, writes its artifacts, then
// <work_dir>/<stage>.manifest.json. `backends` is only consulted by stages
// that call a model.
StageResult run_stage(Stage stage, const PipelineConfig& config, const backend::BackendSet& backends);
StageResult run_stage(Stage stage, const PipelineConfig& config);

std::string file_sha256(const std::filesystem::path& path);

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::ordered_json>& lines);

}  // namespace forge::pipeline
