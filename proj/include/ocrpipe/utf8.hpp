#pragma once

#include <string>
#include <string_view>

namespace ocrpipe {

/// Decodes UTF-8 into scalar values. Malformed sequences decode to U+FFFD.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);
std::string utf8_encode(char32_t c);

}  // namespace ocrpipe
