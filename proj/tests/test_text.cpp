#include <gtest/gtest.h>

#include "forge/text.hpp"

namespace text = forge::text;

TEST(text, normalize_unit_folds_case_space_and_trailing_punctuation) {
    EXPECT_EQ(text::normalize_unit("  Kimchi  is   Fermented. "), "kimchi is fermented");
    EXPECT_EQ(text::normalize_unit("Rice!?"), "rice");
    EXPECT_EQ(text::normalize_unit(""), "");
}

TEST(text, parse_yes_no_reads_first_token_only) {
    EXPECT_EQ(text::parse_yes_no("Yes, the knowledge point matches."), true);
    EXPECT_EQ(text::parse_yes_no("  no. It is not stated"), false);
    EXPECT_EQ(text::parse_yes_no("**Yes**"), true);
    EXPECT_EQ(text::parse_yes_no("yesterday I saw"), std::nullopt);
    EXPECT_EQ(text::parse_yes_no("Maybe"), std::nullopt);
    EXPECT_EQ(text::parse_yes_no(""), std::nullopt);
}

TEST(text, extract_json_object_tolerates_fences_and_prose) {
    auto a = text::extract_json_object("Sure!\n```json\n{\"answer\": \"x\", \"n\": {\"k\": 1}}\n```");
    ASSERT_TRUE(a);
    EXPECT_EQ((*a)["answer"], "x");
    EXPECT_EQ((*a)["n"]["k"], 1);
    EXPECT_FALSE(text::extract_json_object("no json here"));
    auto arr = text::extract_json_array("list: [\"a\", \"b\"] done");
    ASSERT_TRUE(arr);
    EXPECT_EQ(arr->size(), 2u);
}

TEST(text, quoted_values_skips_keys) {
    auto v = text::quoted_values(R"({"knowledge_points": "one", "two", "th\"ree"})");
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[0], "one");
    EXPECT_EQ(v[2], "th\"ree");
}

TEST(text, sha256_of_known_vector) {
    EXPECT_EQ(text::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(text, format_number_is_compact) {
    EXPECT_EQ(text::format_number(1e-5), "1e-5");
    EXPECT_EQ(text::format_number(5e-6), "5e-6");
    EXPECT_EQ(text::format_number(0.1), "0.1");
    EXPECT_EQ(text::format_number(16), "16");
}

TEST(text, strip_punctuation_and_tokens) {
    EXPECT_EQ(text::split_tokens(text::strip_punctuation("rice, (kimchi)!")),
              (std::vector<std::string>{"rice", "kimchi"}));
    EXPECT_TRUE(text::is_blank(" \t\n"));
    EXPECT_FALSE(text::is_blank(" a "));
}
