#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ita {

using Token = std::uint8_t;
using TokenSeq = std::vector<Token>;

struct TokenSeqHash {
  std::size_t operator()(const TokenSeq& s) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Token t : s) {
      h ^= t;
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h ^ s.size());
  }
};

/// Finite symbol table. Token ids are dense in [0, size()).
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> symbols);

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(Token id) const { return symbols_.at(id); }
  std::optional<Token> find(std::string_view symbol) const;
  const std::vector<std::string>& symbols() const { return symbols_; }

  bool contains(std::span<const Token> seq) const;

  // Character-level (every symbol is one char) and word-level (whitespace
  // separated) codecs. Both throw std::invalid_argument on unknown symbols.
  TokenSeq encode_chars(std::string_view text) const;
  TokenSeq encode_words(std::string_view text) const;
  std::string decode_chars(std::span<const Token> seq) const;
  std::string decode_words(std::span<const Token> seq) const;

  bool operator==(const Alphabet& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, Token> index_;
};

}  // namespace ita
