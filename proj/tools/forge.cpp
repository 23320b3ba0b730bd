// forge <stage> --config <path> [--threshold f] [--language tag...]
//       [--matcher exact|judge] [--mock-script path]
//
// Exit codes: 0 success, 1 stage error, 2 config error. Failures print a JSON
// error report on stderr and, when the work dir is known, to error.json.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "forge/error.hpp"
#include "forge/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

int report_failure(std::string_view stage, forge::ErrorKind kind, const std::string& message,
                   const std::optional<fs::path>& work_dir) {
    const int code = kind == forge::ErrorKind::ConfigError ? 2 : 1;
    nlohmann::ordered_json j;
    j["stage"] = stage;
    j["kind"] = forge::error_kind_name(kind);
    j["message"] = message;
    j["exit_code"] = code;
    std::cerr << j.dump() << '\n';
    if (work_dir) {
        std::error_code ec;
        fs::create_directories(*work_dir, ec);
        std::ofstream(*work_dir / "error.json") << j.dump(2) << '\n';
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cultural fine-tuning data pipeline"};
    std::string stage_arg;
    std::string config_path;
    std::optional<double> threshold;
    std::vector<std::string> languages;
    std::optional<std::string> matcher;
    std::string mock_script;

    std::vector<std::string> stage_names;
    for (auto s : forge::pipeline::all_stages()) stage_names.emplace_back(forge::pipeline::stage_name(s));

    app.add_option("stage", stage_arg, "Pipeline stage")->required()->check(CLI::IsMember(stage_names));
    app.add_option("--config", config_path, "Pipeline config (JSON)")->required();
    app.add_option("--threshold", threshold, "DPO selection threshold, in (0,1]");
    app.add_option("--language", languages, "Target language tag (repeatable)");
    app.add_option("--matcher", matcher, "Unit matcher")->check(CLI::IsMember({"exact", "judge"}));
    app.add_option("--mock-script", mock_script, "Serve every role from this mock script");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::optional<fs::path> work_dir;
    try {
        forge::pipeline::Overrides overrides;
        overrides.threshold = threshold;
        overrides.languages = languages;
        if (matcher) overrides.matcher = forge::reward::parse_matcher(*matcher);
        overrides.mock_script = mock_script;

        const auto stage = forge::pipeline::parse_stage(stage_arg);
        const auto config = forge::pipeline::load_config(config_path, overrides);
        work_dir = config.work_dir;
        std::error_code ec;
        fs::remove(config.work_dir / "error.json", ec);

        const auto result = forge::pipeline::run_stage(stage, config);
        std::cout << result.manifest.dump(2) << '\n';
        for (const auto& issue : result.issues)
            std::cerr << "issue [" << issue.stage << "] " << issue.subject << ": " << issue.reason << '\n';
        return 0;
    } catch (const forge::Error& e) {
        return report_failure(stage_arg, e.kind(), e.what(), work_dir);
    } catch (const std::exception& e) {
        return report_failure(stage_arg, forge::ErrorKind::InvariantViolation, e.what(), work_dir);
    }
}
