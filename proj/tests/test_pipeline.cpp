#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "forge/error.hpp"
#include "forge/pipeline.hpp"
#include "support/sim.hpp"

using namespace forge;
using namespace forge::pipeline;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = FORGE_FIXTURE_DIR;

nlohmann::json base_config(const fs::path& dir) {
    nlohmann::json j;
    j["backends"]["default"] = {{"mock_script", "unused.json"}};
    j["seed"] = {{"path", (dir / "seed.jsonl").string()}};
    j["work_dir"] = (dir / "work").string();
    j["exemplars"] = {{{"question", "What is hanbok?"},
                       {"answer", "{\"answer\": \"Traditional clothing.\", \"cultural_group\": \"Korea\", "
                                  "\"language\": \"Korean\", \"topic\": \"clothing\"}"}}};
    return j;
}

// Sim world plus replies for the evaluation prompts.
backend::BackendSet eval_aware_backends(sim::World& w) {
    auto responder = [&w](const backend::PromptRequest& r, std::string_view) -> std::optional<std::string> {
        if (auto reply = w.reply(r)) return reply;
        const auto& u = r.user_prompt;
        if (u.find("Answer with the letter of the correct option.") != std::string::npos) return std::string("(B)");
        if (u.find("Answer with a short phrase only.") != std::string::npos) return std::string("Kimchi.");
        if (sim::starts_with(u, "Answer the cultural question in JSON format"))
            return nlohmann::json{{"answer", "Tteokguk is eaten. Elders receive bows."},
                                  {"cultural_group", "Korea"},
                                  {"topic", "new year"},
                                  {"language", "Korean"}}
                .dump();
        return std::nullopt;
    };
    backend::BackendConfig cfg;
    cfg.max_concurrency = 4;
    auto b = std::make_shared<backend::Backend>(
        cfg, std::make_shared<backend::MockTransport>(std::map<std::string, std::string>{}, responder));
    return {b, b, b};
}

void write_lines(const fs::path& p, const std::vector<nlohmann::json>& lines) {
    std::ofstream out(p);
    for (const auto& l : lines) out << l.dump() << "\n";
}

std::map<std::string, std::string> artifact_sums(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.find("manifest") != std::string::npos) continue;
        out[name] = file_sha256(e.path());
    }
    return out;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FORGE_BINARY) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(pipeline, env_interpolation) {
    ::setenv("FORGE_TEST_TOKEN", "s3cret", 1);
    ::unsetenv("FORGE_TEST_UNSET");
    EXPECT_EQ(interpolate_env("Bearer ${FORGE_TEST_TOKEN}!"), "Bearer s3cret!");
    EXPECT_EQ(interpolate_env("literal $${FORGE_TEST_TOKEN}"), "literal ${FORGE_TEST_TOKEN}");
    EXPECT_EQ(interpolate_env("no variables"), "no variables");
    try {
        interpolate_env("${FORGE_TEST_UNSET}");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    }
    auto j = interpolate_config(nlohmann::json{{"a", {"${FORGE_TEST_TOKEN}", 3}}});
    EXPECT_EQ(j["a"][0], "s3cret");
    EXPECT_EQ(j["a"][1], 3);
}

TEST(pipeline, config_parsing_and_overrides) {
    auto dir = sim::fresh_dir("pipeline_config");
    auto raw = base_config(dir);
    raw["backends"]["judge"] = {{"model_name", "judge-model"}, {"max_concurrency", 7}};
    raw["seed"]["path"] = "seed.jsonl";
    auto c = config_from_json(raw, {}, dir);
    EXPECT_EQ(c.seed, dir / "seed.jsonl");
    EXPECT_EQ(c.backends.at(backend::Role::judge).config.model_name, "judge-model");
    EXPECT_EQ(c.backends.at(backend::Role::judge).config.max_concurrency, 7u);
    EXPECT_EQ(c.backends.at(backend::Role::generator).mock_script, dir / "unused.json");
    EXPECT_EQ(c.dpo_threshold, 0.7);
    EXPECT_EQ(c.sft_path, dir / "work" / "sft.jsonl");

    Overrides o;
    o.threshold = 0.5;
    o.matcher = reward::MatcherKind::judge;
    o.languages = {"en", "ko"};
    auto overridden = config_from_json(raw, o, dir);
    EXPECT_EQ(overridden.dpo_threshold, 0.5);
    EXPECT_EQ(overridden.matcher, reward::MatcherKind::judge);
    EXPECT_EQ(overridden.languages, (std::vector<std::string>{"en", "ko"}));
    EXPECT_NE(overridden.config_hash, c.config_hash);
    EXPECT_EQ(config_from_json(raw, {}, dir).config_hash, c.config_hash);
}

TEST(pipeline, invalid_configs) {
    auto dir = sim::fresh_dir("pipeline_bad_config");
    auto expect_config_error = [&](nlohmann::json raw) {
        try {
            config_from_json(raw, {}, dir);
            ADD_FAILURE() << raw.dump();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::ConfigError) << raw.dump();
        }
    };
    auto raw = base_config(dir);
    raw["dpo_threshold"] = 0.0;
    expect_config_error(raw);
    raw = base_config(dir);
    raw["dpo_threshold"] = 1.2;
    expect_config_error(raw);
    raw = base_config(dir);
    raw.erase("work_dir");
    expect_config_error(raw);
    raw = base_config(dir);
    raw["matcher"] = "fuzzy";
    expect_config_error(raw);
    raw = base_config(dir);
    raw["exports"] = {{"sft", "same.jsonl"}, {"dpo", "same.jsonl"}};
    expect_config_error(raw);
    EXPECT_THROW(parse_stage("train"), Error);
    EXPECT_THROW(load_config(dir / "missing.json"), Error);
}

TEST(pipeline, ingest_counts_fixture_lines) {
    auto dir = sim::fresh_dir("pipeline_ingest");
    auto raw = base_config(dir);
    raw["seed"]["path"] = (kFixtures / "seed3.jsonl").string();
    auto c = config_from_json(raw, {}, dir);
    auto result = run_stage(Stage::ingest, c);
    EXPECT_EQ(result.manifest["counts"]["statements"], 3);
    EXPECT_EQ(result.manifest["config_hash"], c.config_hash);
    EXPECT_TRUE(fs::exists(c.artifact("ingest.manifest.json")));
    EXPECT_EQ(read_jsonl(c.artifact("statements.jsonl")).size(), 3u);
}

TEST(pipeline, stage_order_is_enforced) {
    auto dir = sim::fresh_dir("pipeline_order");
    auto raw = base_config(dir);
    raw["seed"]["path"] = (kFixtures / "seed3.jsonl").string();
    auto c = config_from_json(raw, {}, dir);
    for (auto s : {Stage::select, Stage::synthesize, Stage::export_}) {
        try {
            run_stage(s, c);
            ADD_FAILURE() << stage_name(s);
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::StageOrderViolation) << stage_name(s);
        }
    }
}

TEST(pipeline, edited_artifact_invalidates_downstream) {
    auto dir = sim::fresh_dir("pipeline_stale");
    sim::write_seed(dir / "seed.jsonl", 2);
    auto c = config_from_json(base_config(dir), {}, dir);
    sim::World w;
    auto b = sim::world_backends(w);
    run_stage(Stage::ingest, c, b);
    std::ofstream(c.artifact("statements.jsonl"), std::ios::app) << "\n";
    try {
        run_stage(Stage::synthesize, c, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::StageOrderViolation);
    }
}

TEST(pipeline, full_run_is_deterministic) {
    std::vector<std::map<std::string, std::string>> sums;
    std::vector<nlohmann::json> counts;
    for (int run = 0; run < 2; ++run) {
        auto dir = sim::fresh_dir("pipeline_full");
        sim::write_seed(dir / "seed.jsonl", 12);
        write_lines(dir / "mcq.jsonl", {{{"id", "m1"}, {"question", "q"}, {"options", {"a", "b"}}, {"answer_index", 1}, {"country", "KR"}},
                                        {{"id", "m2"}, {"question", "q2"}, {"options", {"a", "b", "c"}}, {"answer_index", 0}, {"country", "JP"}}});
        write_lines(dir / "contain.jsonl", {{{"id", "c1"}, {"question", "food?"}, {"annotator_answers", {"kimchi"}}, {"country", "KR"}}});
        write_lines(dir / "open.jsonl",
                    {{{"id", "o1"},
                      {"question", "How is Seollal celebrated?"},
                      {"golden_answer", "Tteokguk is eaten. Elders receive bows. Games are played."},
                      {"cultural_group", "Korea"},
                      {"topic", "new year"},
                      {"language", "Korean"},
                      {"country", "KR"}}});
        nlohmann::json survey{{"options", {"1", "2", "3", "4", "5"}}};
        for (int q = 1; q <= 24; ++q) survey["questions"].push_back("Question " + std::to_string(q));
        std::ofstream(dir / "survey.json") << survey.dump();
        auto raw = base_config(dir);
        raw["evaluate"] = {{"mcq", "mcq.jsonl"}, {"containment", "contain.jsonl"}, {"open_ended", "open.jsonl"}, {"grouping", "country"}};
        raw["hofstede"] = {{"survey", "survey.json"}, {"cultures", {"Korea", "Japan"}}, {"repetitions", 2}};
        auto c = config_from_json(raw, {}, dir);
        sim::World w;
        auto b = eval_aware_backends(w);
        nlohmann::json run_counts;
        for (auto s : all_stages()) run_counts[std::string(stage_name(s))] = run_stage(s, c, b).manifest["counts"];
        sums.push_back(artifact_sums(c.work_dir));
        counts.push_back(run_counts);

        EXPECT_EQ(run_counts["ingest"]["statements"], 36);
        EXPECT_EQ(run_counts["critique"]["records"], 12);
        EXPECT_GT(run_counts["select"]["pairs"].get<int>(), 0);
        EXPECT_LT(run_counts["select"]["pairs"].get<int>(), 12);
        EXPECT_TRUE(fs::exists(c.sft_path));
        EXPECT_TRUE(fs::exists(c.dpo_path));
        EXPECT_TRUE(fs::exists(c.train_config_path));
        EXPECT_TRUE(fs::exists(c.artifact("report.txt")));
        EXPECT_EQ(read_jsonl(c.artifact("hofstede.jsonl")).size(), 2u);
    }
    EXPECT_EQ(sums[0], sums[1]);
    EXPECT_EQ(counts[0], counts[1]);
}

TEST(pipeline, cli_exit_codes) {
    auto dir = sim::fresh_dir("pipeline_cli");
    ::setenv("FORGE_FIXTURE_WORK_DIR", (dir / "work").c_str(), 1);
    const auto config = "--config " + (kFixtures / "pipeline.json").string();

    EXPECT_EQ(run_cli("ingest " + config), 0);
    EXPECT_TRUE(fs::exists(dir / "work" / "ingest.manifest.json"));
    EXPECT_FALSE(fs::exists(dir / "work" / "error.json"));

    EXPECT_EQ(run_cli("select " + config), 1);
    ASSERT_TRUE(fs::exists(dir / "work" / "error.json"));
    std::ifstream in(dir / "work" / "error.json");
    auto err = nlohmann::json::parse(in);
    EXPECT_EQ(err["stage"], "select");
    EXPECT_EQ(err["kind"], "StageOrderViolation");
    EXPECT_EQ(err["exit_code"], 1);

    EXPECT_EQ(run_cli("synthesize " + config), 0);
    EXPECT_FALSE(fs::exists(dir / "work" / "error.json"));
    auto records = read_jsonl(dir / "work" / "records.jsonl");
    ASSERT_EQ(records.size(), 1u);
    EXPECT_EQ(records[0]["question"], "How do Koreans celebrate Seollal?");

    EXPECT_EQ(run_cli("ingest " + config + " --threshold 1.5"), 2);
    EXPECT_EQ(run_cli("ingest --config " + (dir / "nope.json").string()), 2);
    EXPECT_EQ(run_cli("train " + config), 2);
    EXPECT_EQ(run_cli("ingest"), 2);
}
