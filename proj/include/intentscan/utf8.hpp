#pragma once

#include <string>
#include <string_view>

namespace intentscan::utf8 {

// Offsets throughout the library count Unicode scalar values, not bytes.
// decode() rejects malformed input with ValidationError.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
std::size_t length(std::string_view text);

// Substring by scalar-value offsets [start, end).
std::string slice(std::string_view text, std::size_t start, std::size_t end);

}  // namespace intentscan::utf8
