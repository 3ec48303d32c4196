#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace streamlens::text {

/// Unicode full case folding of UTF-8 text. Invalid sequences become U+FFFD.
std::string fold_case(std::string_view utf8);

/// ASCII-only lowercase; used for identifiers such as hostnames and hashtags
/// that the platform already restricts.
std::string ascii_lower(std::string_view s);

/// Word tokens under Unicode (UAX #29) word segmentation, case folded.
/// Segments without letters, digits, kana or ideographs are dropped, so
/// punctuation, whitespace and emoji never appear as tokens.
std::vector<std::string> word_tokens(std::string_view utf8);

/// Removes http:// and https:// URLs (up to the next whitespace).
std::string strip_urls(std::string_view utf8);

/// Host portion of a URL, lowercased with scheme, userinfo, port, path and a
/// leading "www." removed. Returns "" when no host can be extracted.
std::string normalize_domain(std::string_view url);

/// Code points of UTF-8 text; malformed bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view utf8);

std::string trim(std::string_view s);

}  // namespace streamlens::text
