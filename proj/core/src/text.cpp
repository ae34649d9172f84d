#include "lscl/text.hpp"

#include <array>
#include <cctype>

namespace lscl::text {

namespace {

bool is_ascii_alnum(unsigned char c) { return std::isalnum(c) != 0; }

std::size_t utf8_length(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    if ((lead >> 3) == 0x1E) return 4;
    return 1;  // stray continuation byte
}

// Full-width punctuation that should split rather than form tokens.
constexpr std::array<std::string_view, 16> kCjkPunctuation = {
    "，", "。", "：", "；", "？", "！", "（", "）", "、", "“", "”", "‘", "’", "《", "》", "．"};

bool is_cjk_punctuation(std::string_view cp) {
    for (auto p : kCjkPunctuation) {
        if (p == cp) return true;
    }
    return false;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view utf8) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
    };
    std::size_t i = 0;
    while (i < utf8.size()) {
        const auto c = static_cast<unsigned char>(utf8[i]);
        if (c < 0x80) {
            if (is_ascii_alnum(c)) {
                current.push_back(static_cast<char>(std::tolower(c)));
            } else {
                flush();
            }
            ++i;
            continue;
        }
        flush();
        const std::size_t n = std::min(utf8_length(c), utf8.size() - i);
        const std::string_view cp = utf8.substr(i, n);
        if (!is_cjk_punctuation(cp)) tokens.emplace_back(cp);
        i += n;
    }
    flush();
    return tokens;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::optional<std::string> boolean_from_lexicon(std::string_view word) {
    static const std::array<std::string_view, 8> kTrue = {"true", "yes", "correct", "right",
                                                          "正确", "对", "是", "√"};
    static const std::array<std::string_view, 9> kFalse = {"false", "no", "incorrect", "wrong",
                                                           "错误", "错", "否", "不对", "×"};
    const std::string lower = to_lower_ascii(word);
    for (auto w : kTrue) {
        if (lower == w) return std::string("true");
    }
    for (auto w : kFalse) {
        if (lower == w) return std::string("false");
    }
    return std::nullopt;
}

std::string normalize_answer(std::string_view answer) {
    std::string s = trim(answer);
    std::size_t b = 0;
    std::size_t e = s.size();
    auto is_strip = [](unsigned char c) { return std::ispunct(c) || std::isspace(c); };
    while (b < e && is_strip(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_strip(static_cast<unsigned char>(s[e - 1]))) --e;
    s = s.substr(b, e - b);
    if (auto boolean = boolean_from_lexicon(s)) return *boolean;
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace lscl::text
