#include "pflat/tokenizer.hpp"

#include "pflat/random.hpp"

namespace pflat {
namespace {

bool is_space_or_control(unsigned char c) { return c <= 0x20 || c == 0x7f; }

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> split_pieces(std::string_view text) {
  const std::string lower = ascii_lower(text);
  std::vector<std::string> pieces;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) pieces.push_back(std::move(word));
    word.clear();
  };
  for (unsigned char c : lower) {
    if (is_word_byte(c)) {
      word.push_back(static_cast<char>(c));
    } else {
      flush();
      if (!is_space_or_control(c)) pieces.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return pieces;
}

TokenSequence hashed_tokenize(std::string_view text, int vocab_size) {
  TokenSequence ids;
  for (const auto& piece : split_pieces(text)) {
    ids.push_back(static_cast<TokenId>(stable_hash(piece) % static_cast<std::uint64_t>(vocab_size)));
  }
  return ids;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> words;
  std::string word;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      if (!word.empty()) words.push_back(std::move(word));
      word.clear();
    } else {
      word.push_back(c);
    }
  }
  if (!word.empty()) words.push_back(std::move(word));
  return words;
}

std::string join(const std::vector<std::string>& words, std::string_view separator) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += separator;
    out += words[i];
  }
  return out;
}

}  // namespace pflat
