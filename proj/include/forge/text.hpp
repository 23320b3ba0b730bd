#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace forge::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);  // ASCII only; UTF-8 bytes pass through

// Trim and fold every whitespace run into a single space.
std::string collapse_whitespace(std::string_view s);

// Lowercase, trim, collapse whitespace, then drop trailing punctuation.
// Used for exact unit matching and grouping keys.
std::string normalize_unit(std::string_view s);

// Replace every ASCII punctuation character with a space.
std::string strip_punctuation(std::string_view s);

std::vector<std::string> split_tokens(std::string_view s);

bool is_blank(std::string_view s);

// Leading yes/no token after lowercasing and punctuation stripping.
// Anything else (including "maybe", "yesterday") yields nullopt.
std::optional<bool> parse_yes_no(std::string_view reply);

// First JSON object / array embedded in a model reply. Accepts bare JSON,
// fenced code blocks and prose around the value.
std::optional<nlohmann::json> extract_json_object(std::string_view reply);
std::optional<nlohmann::json> extract_json_array(std::string_view reply);

// Every double-quoted string literal that is not an object key, in order.
// Recovers lists from "almost JSON" replies such as {"k": "a", "b", "c"}.
std::vector<std::string> quoted_values(std::string_view reply);

std::string sha256_hex(std::string_view data);

// Shortest decimal form with a compact exponent (1e-5, 5e-6, 0.1, 16).
std::string format_number(double v);

}  // namespace forge::text
