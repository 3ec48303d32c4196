#include "streamlens/text.hpp"

#include <unicode/brkiter.h>
#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <memory>
#include <stdexcept>

namespace streamlens::text {

std::string fold_case(std::string_view utf8) {
    bool ascii = true;
    for (unsigned char c : utf8) {
        if (c >= 0x80) {
            ascii = false;
            break;
        }
    }
    if (ascii) return ascii_lower(utf8);
    auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    u.foldCase();
    std::string out;
    u.toUTF8String(out);
    return out;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

namespace {

icu::BreakIterator& word_iterator() {
    thread_local std::unique_ptr<icu::BreakIterator> it = [] {
        UErrorCode status = U_ZERO_ERROR;
        std::unique_ptr<icu::BreakIterator> bi(
            icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
        if (U_FAILURE(status)) throw std::runtime_error("ICU word break iterator unavailable");
        return bi;
    }();
    return *it;
}

}  // namespace

std::vector<std::string> word_tokens(std::string_view utf8) {
    std::vector<std::string> tokens;
    if (utf8.empty()) return tokens;
    auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    u.foldCase();
    auto& it = word_iterator();
    it.setText(u);
    int32_t start = it.first();
    for (int32_t end = it.next(); end != icu::BreakIterator::DONE; start = end, end = it.next()) {
        if (it.getRuleStatus() == UBRK_WORD_NONE) continue;
        std::string token;
        u.tempSubStringBetween(start, end).toUTF8String(token);
        tokens.push_back(std::move(token));
    }
    return tokens;
}

std::string strip_urls(std::string_view utf8) {
    std::string out;
    out.reserve(utf8.size());
    std::size_t i = 0;
    while (i < utf8.size()) {
        const auto rest = utf8.substr(i);
        if (rest.starts_with("http://") || rest.starts_with("https://")) {
            while (i < utf8.size() && utf8[i] != ' ' && utf8[i] != '\n' && utf8[i] != '\t' &&
                   utf8[i] != '\r') {
                ++i;
            }
            out.push_back(' ');
            continue;
        }
        out.push_back(utf8[i++]);
    }
    return out;
}

std::string normalize_domain(std::string_view url) {
    std::string_view rest = url;
    if (auto scheme = rest.find("://"); scheme != std::string_view::npos) {
        rest.remove_prefix(scheme + 3);
    } else if (rest.starts_with("//")) {
        rest.remove_prefix(2);
    }
    const auto end = rest.find_first_of("/?#");
    std::string_view host = rest.substr(0, end);
    if (auto at = host.rfind('@'); at != std::string_view::npos) host.remove_prefix(at + 1);
    if (auto colon = host.find(':'); colon != std::string_view::npos) host = host.substr(0, colon);
    while (!host.empty() && host.back() == '.') host.remove_suffix(1);
    std::string out = ascii_lower(host);
    if (out.starts_with("www.")) out.erase(0, 4);
    return out;
}

std::u32string decode_utf8(std::string_view utf8) {
    std::u32string out;
    const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
    const auto length = static_cast<int32_t>(utf8.size());
    int32_t i = 0;
    while (i < length) {
        UChar32 c;
        U8_NEXT(s, i, length, c);
        out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
    }
    return out;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace streamlens::text
