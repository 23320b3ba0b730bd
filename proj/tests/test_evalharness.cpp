#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <random>

#include "forge/error.hpp"
#include "forge/evalharness.hpp"
#include "support/sim.hpp"

using namespace forge;
using namespace forge::eval;

namespace {

McqItem four_options(std::size_t answer) {
    return {"m1", "Which festival marks the lunar new year in Korea?", {"Chuseok", "Dano", "Seollal", "Hansik"}, answer};
}

OpenEndedItem kimchi_item() {
    OpenEndedItem item;
    item.id = "o1";
    item.question = "How is kimchi made?";
    item.golden_answer = "Kimchi is fermented cabbage. It is seasoned with chili. It is stored in jars. It is eaten daily.";
    item.contextual = {"Korea", "food", "Korean"};
    item.language = "en";
    return item;
}

std::string as_json_answer(const std::string& text) {
    return nlohmann::json{{"answer", text}, {"cultural_group", "Korea"}, {"topic", "food"}, {"language", "Korean"}}
        .dump();
}

}  // namespace

TEST(evalharness, mcq_response_corpus) {
    // Hand-labeled replies for a 4-option item; -1 marks "no letter".
    const std::vector<std::pair<std::string, int>> corpus{
        {"B", 1},
        {"(C)", 2},
        {"A.", 0},
        {"Answer: D", 3},
        {"The answer is (C) because it falls on the first day of the lunar calendar.", 2},
        {"answer: b", 1},
        {"I think the correct option is B.", 1},
        {"C) Seollal", 2},
        {"Between (A) and (B), I pick (B).", 0},
        {"I am not sure", -1},
        {"The answer is E.", -1},
        {"D. It is celebrated in spring.", 3},
    };
    for (const auto& [reply, expected] : corpus) {
        auto got = parse_choice(reply, 4);
        if (expected < 0)
            EXPECT_FALSE(got) << reply;
        else
            EXPECT_EQ(got, std::optional<std::size_t>(static_cast<std::size_t>(expected))) << reply;
    }
}

TEST(evalharness, mcq_scoring) {
    EXPECT_TRUE(score_mcq(four_options(1), "B").correct);
    EXPECT_TRUE(score_mcq(four_options(2), "The answer is (C) because of the calendar.").correct);
    EXPECT_FALSE(score_mcq(four_options(2), "A").correct);
    IssueLog issues;
    auto out = score_mcq(four_options(0), "I am not sure", &issues);
    EXPECT_FALSE(out.correct);
    EXPECT_FALSE(out.choice);
    EXPECT_EQ(issues.size(), 1u);
}

TEST(evalharness, mcq_item_schema) {
    EXPECT_THROW(mcq_from_json({{"id", "x"}, {"question", "q"}, {"options", {"a"}}, {"answer_index", 0}}), Error);
    EXPECT_THROW(mcq_from_json({{"id", "x"}, {"question", "q"}, {"options", {"a", "b"}}, {"answer_index", 2}}), Error);
    auto item = mcq_from_json({{"id", "x"}, {"question", "q"}, {"options", {"a", "b"}}, {"answer_index", 1}});
    EXPECT_EQ(item.answer_index, 1u);
    EXPECT_NE(mcq_prompt(item).find("B. b"), std::string::npos);
}

TEST(evalharness, containment_examples) {
    ContainmentItem item{"c1", "Most popular food?", {"kimchi", "kimchi stew"}, "en"};
    EXPECT_TRUE(score_containment(item, "Kimchi"));
    EXPECT_TRUE(score_containment({"c2", "", {"Rice"}, "en"}, "rice."));
    EXPECT_FALSE(score_containment({"c3", "", {"rice", "kimchi"}, "en"}, "noodles"));
    EXPECT_TRUE(score_containment({"c4", "", {"spicy kimchi stew"}, "en"}, "kimchi  stew"));
    EXPECT_TRUE(score_containment({"c5", "", {"stew"}, "en"}, "Kimchi stew!"));
    EXPECT_FALSE(score_containment({"c6", "", {"kimchi fried stew"}, "en"}, "kimchi stew"));
    EXPECT_THROW(score_containment(item, "   "), Error);
}

TEST(evalharness, containment_normalizer_hook) {
    TokenNormalizer strip_s = [](std::string_view tok, std::string_view) {
        std::string t(tok);
        if (t.size() > 3 && t.back() == 's') t.pop_back();
        return t;
    };
    ContainmentItem item{"c1", "", {"noodle soup"}, "en"};
    EXPECT_FALSE(score_containment(item, "Noodles"));
    EXPECT_TRUE(score_containment(item, "Noodles", strip_s));
}

TEST(evalharness, containment_is_reflexive) {
    std::mt19937 rng(9);
    const std::vector<std::string> words{"Rice", "kimchi,", "STEW", "the", "spicy!", "bulgogi", "tea."};
    for (int trial = 0; trial < 300; ++trial) {
        std::string answer;
        for (std::size_t n = 1 + rng() % 4; n > 0; --n) answer += words[rng() % words.size()] + " ";
        ContainmentItem item{"c", "", {"unrelated", answer}, "en"};
        EXPECT_TRUE(score_containment(item, answer)) << answer;
    }
}

TEST(evalharness, open_ended_golden_vs_golden_is_one) {
    sim::World w;
    auto gen = sim::world_backend(w);
    reward::ExactMatcher m;
    auto item = kimchi_item();
    auto s = score_open_ended(item, as_json_answer(item.golden_answer), *gen, m);
    EXPECT_EQ(s.s_p, 1.0);
    EXPECT_EQ(s.s_r, 1.0);
    EXPECT_EQ(s.s_f1, 1.0);
    ASSERT_TRUE(item.golden_units);
    EXPECT_EQ(item.golden_units->size(), 4u);
}

TEST(evalharness, open_ended_partial_coverage) {
    sim::World w;
    auto t = std::make_shared<backend::MockTransport>(std::map<std::string, std::string>{}, w.responder());
    auto gen = std::make_shared<backend::Backend>(backend::BackendConfig{}, t);
    reward::ExactMatcher m;
    auto item = kimchi_item();
    const auto candidate = as_json_answer("Kimchi is fermented cabbage. It is stored in jars. It is sold in markets.");
    auto s = score_open_ended(item, candidate, *gen, m);
    EXPECT_EQ(s.precision_bits, (std::vector<int>{1, 1, 0, 1, 1, 1}));
    EXPECT_EQ(s.recall_bits, (std::vector<int>{1, 0, 1, 0, 1, 1, 1}));
    EXPECT_DOUBLE_EQ(s.s_p, 5.0 / 6.0);
    EXPECT_DOUBLE_EQ(s.s_r, 5.0 / 7.0);
    const double p = 5.0 / 6.0, r = 5.0 / 7.0;
    EXPECT_NEAR(s.s_f1, 2 * p * r / (p + r), 1e-15);
    EXPECT_NEAR(s.s_f1, 0.7692, 1e-4);

    // Golden units are decomposed once and reused.
    const auto before = t->calls();
    score_open_ended(item, as_json_answer("Kimchi is fermented cabbage. Another line here."), *gen, m);
    EXPECT_EQ(t->calls(), before + 1);
}

TEST(evalharness, open_ended_plain_text_candidate_has_no_context) {
    sim::World w;
    auto gen = sim::world_backend(w);
    reward::ExactMatcher m;
    auto item = kimchi_item();
    auto s = score_open_ended(item, "Kimchi is fermented cabbage.", *gen, m);
    EXPECT_EQ(s.precision_bits, (std::vector<int>{1, 0, 0, 0}));
    EXPECT_DOUBLE_EQ(s.s_p, 0.25);
}

TEST(evalharness, open_ended_empty_candidate) {
    sim::World w;
    auto gen = sim::world_backend(w);
    reward::ExactMatcher m;
    auto item = kimchi_item();
    EXPECT_THROW(score_open_ended(item, "  ", *gen, m), Error);
    EXPECT_THROW(score_open_ended(item, as_json_answer(""), *gen, m), Error);
}

TEST(evalharness, open_ended_prompt_one_shot) {
    auto item = kimchi_item();
    synthesis::Exemplar ex{"What is hanbok?", "{\"answer\": \"Traditional clothing.\"}"};
    auto p = open_ended_prompt(item, &ex);
    EXPECT_LT(p.find("What is hanbok?"), p.find("How is kimchi made?"));
    EXPECT_EQ(open_ended_prompt(item).find("hanbok"), std::string::npos);
}

namespace {

ItemScore item(std::string id, double v, std::string lang = "") {
    ItemScore s{std::move(id), {}, {{"mcq_precision", v}}};
    if (!lang.empty()) s.attributes["language"] = lang;
    return s;
}

}  // namespace

TEST(evalharness, aggregate_three_of_four) {
    auto r = aggregate_report({item("a", 1), item("b", 1), item("c", 0), item("d", 1)});
    EXPECT_EQ(r.value("overall", "mcq_precision"), 0.75);
    ASSERT_EQ(r.aggregates.size(), 1u);
    EXPECT_EQ(r.aggregates[0].n, 4u);
}

TEST(evalharness, aggregate_groups_match_independent_means) {
    std::vector<ItemScore> scores{item("a", 0.2, "ko"), item("b", 0.9, "ko"), item("c", 0.1, "ja"),
                                  item("d", 0.4, "ja"), item("e", 0.7, "ja")};
    auto r = aggregate_report(scores, "language");
    std::map<std::string, std::pair<double, int>> sums;
    for (const auto& s : scores) {
        auto& [sum, n] = sums[s.attributes.at("language")];
        sum += s.metrics.at("mcq_precision");
        ++n;
    }
    for (const auto& [g, sn] : sums) EXPECT_NEAR(*r.value(g, "mcq_precision"), sn.first / sn.second, 1e-15) << g;
    EXPECT_NEAR(*r.value("overall", "mcq_precision"), (0.2 + 0.9 + 0.1 + 0.4 + 0.7) / 5, 1e-15);
    ASSERT_EQ(r.aggregates.size(), 3u);
    EXPECT_EQ(r.aggregates[0].group, "overall");
    EXPECT_EQ(r.aggregates[1].group, "ja");
    EXPECT_EQ(r.aggregates[2].group, "ko");
    EXPECT_EQ(r.aggregates[1].n, 3u);
}

TEST(evalharness, aggregate_singleton_and_missing_attribute) {
    auto r = aggregate_report({item("a", 0.37)});
    EXPECT_EQ(r.value("overall", "mcq_precision"), 0.37);
    auto g = aggregate_report({item("a", 1, "ko"), item("b", 0)}, "language");
    EXPECT_EQ(g.value("(none)", "mcq_precision"), 0.0);
    EXPECT_EQ(g.value("ko", "mcq_precision"), 1.0);
}

TEST(evalharness, aggregate_is_permutation_invariant) {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<ItemScore> scores;
    const std::vector<std::string> langs{"ko", "ja", "zh"};
    for (int i = 0; i < 200; ++i) scores.push_back(item("i" + std::to_string(i), u(rng), langs[rng() % 3]));
    auto base = aggregate_report(scores, "language").aggregates;
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(scores.begin(), scores.end(), rng);
        EXPECT_EQ(aggregate_report(scores, "language").aggregates, base);
    }
}

TEST(evalharness, report_outputs) {
    auto dir = sim::fresh_dir("eval_report");
    auto r = aggregate_report({item("a", 1, "ko"), item("b", 0, "ja")}, "language");
    auto table = r.render_table();
    EXPECT_NE(table.find("overall"), std::string::npos);
    EXPECT_NE(table.find("mcq_precision"), std::string::npos);
    r.write_jsonl(dir / "report.jsonl");
    std::ifstream in(dir / "report.jsonl");
    std::string line;
    std::vector<nlohmann::json> rows;
    while (std::getline(in, line)) rows.push_back(nlohmann::json::parse(line));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0]["group"], "overall");
    EXPECT_EQ(rows[0]["value"], 0.5);
    EXPECT_EQ(rows[0]["n"], 2);
}
