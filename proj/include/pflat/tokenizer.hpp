#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pflat {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

/// ASCII-lowercases `text` and splits it into word pieces. A word is a
/// maximal run of ASCII alphanumerics or non-ASCII bytes; every other
/// printable ASCII character is a piece of its own; whitespace and control
/// characters separate pieces. Never fails.
std::vector<std::string> split_pieces(std::string_view text);

/// Maps each piece to stable_hash(piece) mod vocab_size.
TokenSequence hashed_tokenize(std::string_view text, int vocab_size);

/// Splits on ASCII whitespace only (instruction edits work at this level).
std::vector<std::string> split_whitespace(std::string_view text);

std::string join(const std::vector<std::string>& words, std::string_view separator);

std::string ascii_lower(std::string_view text);

}  // namespace pflat
