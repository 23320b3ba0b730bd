#include <gtest/gtest.h>

#include "forge/error.hpp"
#include "forge/multilingual.hpp"
#include "forge/prompts.hpp"
#include "support/sim.hpp"

using namespace forge;
using namespace forge::multilingual;

namespace {

const RecordFields kFields{"What is Seollal?", "Seollal is the Korean new year.", "It is a holiday.",
                           "The answer misses the lunar calendar."};

std::string body_of(const backend::PromptRequest& r) { return sim::after(r.user_prompt, "Text:\n"); }

bool is_forward(const backend::PromptRequest& r) {
    return sim::starts_with(r.user_prompt, "Translate the following text into ");
}

// Forward: "<tag>:" prefix. Back: strip it, optionally corrupting one field.
std::shared_ptr<backend::Backend> prefixing(std::string tag, std::string corrupt = {},
                                            std::shared_ptr<backend::MockTransport>* tp = nullptr) {
    auto t = std::make_shared<backend::MockTransport>(
        std::map<std::string, std::string>{},
        [tag, corrupt](const backend::PromptRequest& r, std::string_view) -> std::optional<std::string> {
            auto body = body_of(r);
            if (is_forward(r)) return tag + ":" + body;
            if (!sim::starts_with(r.user_prompt, "Translate the following ")) return std::nullopt;
            body = body.substr(tag.size() + 1);
            if (!corrupt.empty() && body == corrupt) return "Something else entirely.";
            return body;
        });
    if (tp) *tp = t;
    return std::make_shared<backend::Backend>(backend::BackendConfig{}, t);
}

std::shared_ptr<backend::Backend> judge_replies(std::vector<std::string> replies,
                                                std::shared_ptr<backend::MockTransport>* tp = nullptr) {
    auto i = std::make_shared<std::size_t>(0);
    auto t = std::make_shared<backend::MockTransport>(
        std::map<std::string, std::string>{},
        [replies, i](const backend::PromptRequest&, std::string_view) -> std::optional<std::string> {
            if (*i >= replies.size()) return std::nullopt;
            return replies[(*i)++];
        });
    if (tp) *tp = t;
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

}  // namespace

TEST(multilingual, default_set_has_23_languages_with_english) {
    const auto& langs = default_languages();
    EXPECT_EQ(langs.size(), 23u);
    EXPECT_EQ(resolve_language("English", langs), "en");
    EXPECT_EQ(resolve_language("Mandarin", langs), "zh");
    EXPECT_EQ(resolve_language("ko", langs), "ko");
    EXPECT_EQ(resolve_language("Klingon", langs), std::nullopt);
}

TEST(multilingual, translation_is_per_field) {
    auto gen = prefixing("zh");
    auto l = translate_record(kFields, "r1", "zh", default_languages(), *gen);
    EXPECT_EQ(l.question, "zh:" + kFields.question);
    EXPECT_EQ(l.golden, "zh:" + kFields.golden);
    EXPECT_EQ(l.target, "zh:" + kFields.target);
    EXPECT_EQ(l.critique, "zh:" + kFields.critique);
    EXPECT_EQ(l.language, "zh");
    EXPECT_EQ(l.alignment, Alignment::pending);
}

TEST(multilingual, translation_preconditions) {
    auto gen = prefixing("zh");
    std::vector<Language> only_ko{{"ko", "Korean"}};
    EXPECT_EQ(kind_of([&] { translate_record(kFields, "r", "zh", only_ko, *gen); }), ErrorKind::PreconditionViolation);
    auto f = kFields;
    f.critique = "";
    EXPECT_EQ(kind_of([&] { translate_record(f, "r", "zh", default_languages(), *gen); }),
              ErrorKind::PreconditionViolation);
}

TEST(multilingual, identity_round_trip) {
    auto gen = prefixing("ko");
    auto l = translate_record(kFields, "r", "ko", default_languages(), *gen);
    EXPECT_EQ(back_translate(l, default_languages(), *gen), kFields);
}

TEST(multilingual, corruption_touches_exactly_one_field) {
    auto gen = prefixing("ko", kFields.golden);
    auto back = back_translate(translate_record(kFields, "r", "ko", default_languages(), *gen), default_languages(), *gen);
    EXPECT_EQ(back.question, kFields.question);
    EXPECT_NE(back.golden, kFields.golden);
    EXPECT_EQ(back.target, kFields.target);
    EXPECT_EQ(back.critique, kFields.critique);
}

TEST(multilingual, blank_back_translation_is_empty_completion) {
    auto gen = backend::mock_backend({}, [](const backend::PromptRequest& r, std::string_view) -> std::optional<std::string> {
        return is_forward(r) ? "x" : "  ";
    });
    auto l = translate_record(kFields, "r", "ko", default_languages(), *gen);
    EXPECT_EQ(kind_of([&] { back_translate(l, default_languages(), *gen); }), ErrorKind::EmptyCompletion);
}

TEST(multilingual, alignment_all_yes_passes) {
    RecordFields back{"q2", "g2", "t2", "c2"};
    LocalizedRecord rec{"r", "ko", "a", "b", "c", "d", Alignment::pending};
    auto v = check_alignment(kFields, back, *judge_replies({"Yes", "Yes", "Yes", "Yes"}), &rec);
    EXPECT_TRUE(v.passed);
    EXPECT_EQ(v.judged_fields, (std::vector<std::string>{"question", "golden", "target", "critique"}));
    EXPECT_EQ(rec.alignment, Alignment::passed);
}

TEST(multilingual, alignment_one_no_fails_and_names_field) {
    RecordFields back{"q2", "g2", "t2", "c2"};
    LocalizedRecord rec{"r", "ko", "a", "b", "c", "d", Alignment::pending};
    auto v = check_alignment(kFields, back, *judge_replies({"Yes", "Yes", "No", "Yes"}), &rec);
    EXPECT_FALSE(v.passed);
    EXPECT_EQ(v.failed_fields, (std::vector<std::string>{"target"}));
    EXPECT_NE(v.notes.find("target"), std::string::npos);
    EXPECT_EQ(rec.alignment, Alignment::failed);
    EXPECT_EQ(rec.language, "ko");
}

TEST(multilingual, unparseable_verdict_is_field_failure) {
    RecordFields back{"q2", kFields.golden, kFields.target, kFields.critique};
    auto v = check_alignment(kFields, back, *judge_replies({"perhaps"}));
    EXPECT_FALSE(v.passed);
    EXPECT_EQ(v.failed_fields, (std::vector<std::string>{"question"}));
}

TEST(multilingual, identical_text_skips_judge) {
    std::shared_ptr<backend::MockTransport> t;
    auto v = check_alignment(kFields, kFields, *judge_replies({}, &t));
    EXPECT_TRUE(v.passed);
    EXPECT_EQ(t->calls(), 0u);
}

TEST(multilingual, localize_retries_once_then_fails) {
    sim::World w;
    auto judge = sim::world_backend(w);
    // Back-translation always corrupts the critique, so both attempts fail.
    auto gen = prefixing("ko", kFields.critique);
    IssueLog issues;
    auto l = localize(kFields, "r", "ko", default_languages(), {gen, gen, judge}, &issues);
    EXPECT_EQ(l.alignment, Alignment::failed);
    EXPECT_EQ(issues.size(), 2u);
    EXPECT_EQ(l.language, "ko");
}

TEST(multilingual, localize_passes_under_identity) {
    sim::World w;
    auto b = sim::world_backend(w);
    auto l = localize(kFields, "r", "ja", default_languages(), {b, b, b});
    EXPECT_EQ(l.alignment, Alignment::passed);
    EXPECT_EQ(l.question, "[Japanese] " + kFields.question);
}

TEST(multilingual, localized_json_round_trip) {
    LocalizedRecord l{"r", "ko", "a", "b", "c", "d", Alignment::passed};
    EXPECT_EQ(localized_from_json(nlohmann::json::parse(to_json(l).dump())), l);
}
