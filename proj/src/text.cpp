#include "forge/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <stdexcept>

namespace forge::text {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

// Parses the balanced value starting at `open` (either '{' or '[').
std::optional<nlohmann::json> parse_balanced(std::string_view s, std::size_t open) {
    const char opener = s[open];
    const char closer = opener == '{' ? '}' : ']';
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == opener) ++depth;
        else if (c == closer && --depth == 0) {
            auto parsed = nlohmann::json::parse(s.substr(open, i - open + 1), nullptr, false);
            if (parsed.is_discarded()) return std::nullopt;
            return parsed;
        }
    }
    return std::nullopt;
}

std::optional<nlohmann::json> extract_first(std::string_view reply, char opener) {
    auto whole = nlohmann::json::parse(reply, nullptr, false);
    if (!whole.is_discarded() && ((opener == '{' && whole.is_object()) || (opener == '[' && whole.is_array())))
        return whole;
    for (std::size_t pos = reply.find(opener); pos != std::string_view::npos; pos = reply.find(opener, pos + 1)) {
        if (auto v = parse_balanced(reply, pos)) return v;
    }
    return std::nullopt;
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending = false;
    for (char c : s) {
        if (is_space(c)) {
            pending = !out.empty();
            continue;
        }
        if (pending) out.push_back(' ');
        pending = false;
        out.push_back(c);
    }
    return out;
}

std::string normalize_unit(std::string_view s) {
    std::string out = collapse_whitespace(to_lower(s));
    while (!out.empty() && (is_punct(out.back()) || is_space(out.back()))) out.pop_back();
    return out;
}

std::string strip_punctuation(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        if (is_punct(c)) c = ' ';
    return out;
}

std::vector<std::string> split_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_space(c)) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return is_space(c); });
}

std::optional<bool> parse_yes_no(std::string_view reply) {
    auto tokens = split_tokens(strip_punctuation(to_lower(reply)));
    if (tokens.empty()) return std::nullopt;
    if (tokens.front() == "yes") return true;
    if (tokens.front() == "no") return false;
    return std::nullopt;
}

std::optional<nlohmann::json> extract_json_object(std::string_view reply) { return extract_first(reply, '{'); }

std::optional<nlohmann::json> extract_json_array(std::string_view reply) { return extract_first(reply, '['); }

std::vector<std::string> quoted_values(std::string_view reply) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < reply.size()) {
        if (reply[i] != '"') {
            ++i;
            continue;
        }
        std::string value;
        std::size_t j = i + 1;
        bool closed = false;
        for (; j < reply.size(); ++j) {
            if (reply[j] == '\\' && j + 1 < reply.size()) {
                value.push_back(reply[++j]);
            } else if (reply[j] == '"') {
                closed = true;
                break;
            } else {
                value.push_back(reply[j]);
            }
        }
        if (!closed) break;
        std::size_t k = j + 1;
        while (k < reply.size() && is_space(reply[k])) ++k;
        const bool is_key = k < reply.size() && reply[k] == ':';
        if (!is_key) out.push_back(std::move(value));
        i = j + 1;
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    std::string s(buf.data(), end);
    // to_chars writes 1e-05; drop the exponent's zero padding.
    if (auto e = s.find('e'); e != std::string::npos) {
        std::size_t digits = e + 1;
        if (digits < s.size() && (s[digits] == '-' || s[digits] == '+')) ++digits;
        std::size_t first_nonzero = digits;
        while (first_nonzero + 1 < s.size() && s[first_nonzero] == '0') ++first_nonzero;
        s.erase(digits, first_nonzero - digits);
        if (s[e + 1] == '+') s.erase(e + 1, 1);
    }
    return s;
}

}  // namespace forge::text
