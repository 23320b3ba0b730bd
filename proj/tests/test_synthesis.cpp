#include <gtest/gtest.h>

#include "forge/error.hpp"
#include "forge/prompts.hpp"
#include "forge/synthesis.hpp"
#include "support/sim.hpp"

using namespace forge;
using namespace forge::synthesis;

namespace {

corpus::KnowledgePassage passage(std::string key = "china|textiles#0") {
    return {key, "China", "textiles", "src", "Silk weaving began in ancient China.", {"s1"}};
}

// Replies in order, one per call.
std::shared_ptr<backend::Backend> sequence(std::vector<std::string> replies,
                                           std::shared_ptr<backend::MockTransport>* transport = nullptr) {
    auto i = std::make_shared<std::size_t>(0);
    auto t = std::make_shared<backend::MockTransport>(
        std::map<std::string, std::string>{},
        [replies, i](const backend::PromptRequest&, std::string_view) -> std::optional<std::string> {
            if (*i >= replies.size()) return std::nullopt;
            return replies[(*i)++];
        });
    if (transport) *transport = t;
    return std::make_shared<backend::Backend>(backend::BackendConfig{}, t);
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::InvariantViolation;
}

CulturalQuestion verified() { return {"q:china|textiles#0", "china|textiles#0", "How is silk woven?", true}; }

}  // namespace

TEST(synthesis, question_echoes_mock_and_uses_generation_prompt) {
    std::shared_ptr<backend::MockTransport> t;
    auto b = sequence({"How do hijab regulations differ across regions?"}, &t);
    auto q = generate_question(passage(), *b);
    EXPECT_EQ(q.question, "How do hijab regulations differ across regions?");
    EXPECT_FALSE(q.verified);
    EXPECT_EQ(q.passage_ref, "china|textiles#0");
    EXPECT_EQ(t->captured()[0].system_prompt, prompts::question_generation);
    EXPECT_NE(t->captured()[0].user_prompt.find("\"cultural_knowledge\""), std::string::npos);
}

TEST(synthesis, blank_question_is_unparseable) {
    auto b = sequence({"   "});
    EXPECT_EQ(kind_of([&] { generate_question(passage(), *b); }), ErrorKind::UnparseableOutput);
}

TEST(synthesis, two_passages_two_questions) {
    auto b = sequence({"Question one?", "Question two?"});
    auto pa = passage("a");
    auto pb = passage("b");
    pb.text = "Porcelain was first fired in China.";
    auto q1 = generate_question(pa, *b);
    auto q2 = generate_question(pb, *b);
    EXPECT_NE(q1.question, q2.question);
    EXPECT_NE(q1.id, q2.id);
}

TEST(synthesis, labelled_or_json_question_is_extracted) {
    EXPECT_EQ(generate_question(passage(), *sequence({"Question: \"Why silk?\"\nextra"})).question, "Why silk?");
    EXPECT_EQ(generate_question(passage(), *sequence({R"({"question": "Why?"})"})).question, "Why?");
}

TEST(synthesis, verification_verdicts) {
    auto q = generate_question(passage(), *sequence({"Q?"}));
    EXPECT_TRUE(verify_answerable(q, passage(), *sequence({"Yes"})));
    EXPECT_TRUE(q.verified);
    auto q2 = q;
    q2.verified = false;
    EXPECT_FALSE(verify_answerable(q2, passage(), *sequence({"No."})));
    EXPECT_FALSE(q2.verified);
    EXPECT_EQ(kind_of([&] { verify_answerable(q2, passage(), *sequence({"maybe"})); }), ErrorKind::UnparseableVerdict);
}

TEST(synthesis, golden_answer_fields) {
    auto b = sequence({R"({"answer":"A","cultural_group":"China","language":"Chinese","topic":"textiles"})"});
    auto a = generate_golden_answer(verified(), passage(), *b);
    EXPECT_EQ(a.kind, AnswerKind::golden);
    EXPECT_EQ(a.text, "A");
    EXPECT_EQ(a.cultural_group, "China");
    EXPECT_EQ(a.language, "Chinese");
    EXPECT_EQ(a.topic, "textiles");
}

TEST(synthesis, golden_answer_reprompts_once) {
    std::shared_ptr<backend::MockTransport> t;
    auto b = sequence({"not json", R"({"answer":"A","cultural_group":"China","language":"Chinese","topic":"t"})"}, &t);
    EXPECT_EQ(generate_golden_answer(verified(), passage(), *b).text, "A");
    EXPECT_EQ(t->calls(), 2u);
    EXPECT_EQ(kind_of([&] { generate_golden_answer(verified(), passage(), *sequence({"x", "y"})); }),
              ErrorKind::UnparseableOutput);
}

TEST(synthesis, golden_answer_requires_verified_question) {
    auto q = verified();
    q.verified = false;
    EXPECT_EQ(kind_of([&] { generate_golden_answer(q, passage(), *sequence({"{}"})); }),
              ErrorKind::PreconditionViolation);
}

TEST(synthesis, target_answer_with_exemplar) {
    std::shared_ptr<backend::MockTransport> t;
    auto b = sequence({"T"}, &t);
    std::vector<Exemplar> ex{{"What is hanbok?", "Traditional Korean clothing."}};
    auto a = generate_target_answer(verified(), ex, *b);
    EXPECT_EQ(a.text, "T");
    EXPECT_EQ(a.kind, AnswerKind::target);
    const auto prompt = t->captured()[0].user_prompt;
    EXPECT_NE(prompt.find("Traditional Korean clothing."), std::string::npos);
    EXPECT_LT(prompt.find("What is hanbok?"), prompt.find("How is silk woven?"));
    EXPECT_EQ(t->captured()[0].role, backend::Role::target);
}

TEST(synthesis, target_answer_needs_exemplars) {
    EXPECT_EQ(kind_of([&] { generate_target_answer(verified(), {}, *sequence({"T"})); }),
              ErrorKind::PreconditionViolation);
}

TEST(synthesis, synthesize_is_deterministic_and_never_answers_unverified) {
    auto run = [] {
        sim::World w;
        auto set = sim::world_backends(w);
        std::vector<corpus::KnowledgePassage> ps;
        for (int i = 0; i < 6; ++i) {
            const std::string g = i % 2 ? "Korea" : "Japan";
            const std::string topic = "topic" + std::to_string(i);
            ps.push_back({g + "|" + topic + "#0", g, topic, "src", "A fact about " + topic + ". Another one.", {"s"}});
        }
        std::vector<Exemplar> ex{{"q", "a"}};
        return synthesize(ps, set, ex);
    };
    auto a = run();
    auto b = run();
    ASSERT_EQ(a.size(), 6u);
    EXPECT_EQ(a, b);
    for (const auto& r : a) {
        EXPECT_TRUE(r.question.verified);
        EXPECT_FALSE(r.golden.cultural_group.empty());
        EXPECT_FALSE(r.golden.topic.empty());
        EXPECT_FALSE(r.golden.language.empty());
    }
}

TEST(synthesis, rejected_question_is_dropped_and_reported) {
    auto b = backend::mock_backend({}, [](const backend::PromptRequest& r, std::string_view) -> std::optional<std::string> {
        if (r.system_prompt == prompts::question_generation) return "Q?";
        if (r.user_prompt.rfind(prompts::answerability_check, 0) == 0) return "No";
        return "should not be asked";
    });
    IssueLog issues;
    std::vector<Exemplar> ex{{"q", "a"}};
    auto out = synthesize({passage()}, {b, b, b}, ex, &issues);
    EXPECT_TRUE(out.empty());
    EXPECT_EQ(issues.size(), 1u);
}

TEST(synthesis, record_json_round_trip) {
    SynthesisRecord r{verified(), {AnswerKind::golden, "g", "China", "t", "Chinese"}, {AnswerKind::target, "x", "", "", ""}};
    EXPECT_EQ(synthesis_record_from_json(nlohmann::json::parse(to_json(r).dump())), r);
}
