#include "ita/tokens.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

#include "ita/rng.hpp"

namespace ita {

double normal01(Rng& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Alphabet::Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty() || symbols_.size() > 62)
    throw std::invalid_argument("alphabet size must be in [1, 62]");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i].empty()) throw std::invalid_argument("empty alphabet symbol");
    if (!index_.emplace(symbols_[i], static_cast<Token>(i)).second)
      throw std::invalid_argument("duplicate alphabet symbol '" + symbols_[i] + "'");
  }
}

std::optional<Token> Alphabet::find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Alphabet::contains(std::span<const Token> seq) const {
  for (Token t : seq)
    if (t >= symbols_.size()) return false;
  return true;
}

TokenSeq Alphabet::encode_chars(std::string_view text) const {
  TokenSeq out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto id = find(text.substr(i, 1));
    if (!id)
      throw std::invalid_argument("symbol '" + std::string(text.substr(i, 1)) +
                                  "' at offset " + std::to_string(i) + " is not in the alphabet");
    out.push_back(*id);
  }
  return out;
}

TokenSeq Alphabet::encode_words(std::string_view text) const {
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      auto word = text.substr(i, j - i);
      auto id = find(word);
      if (!id) throw std::invalid_argument("word '" + std::string(word) + "' is not in the alphabet");
      out.push_back(*id);
    }
    i = j;
  }
  return out;
}

std::string Alphabet::decode_chars(std::span<const Token> seq) const {
  std::string out;
  for (Token t : seq) out += symbols_.at(t);
  return out;
}

std::string Alphabet::decode_words(std::span<const Token> seq) const {
  std::string out;
  for (Token t : seq) {
    if (!out.empty()) out += ' ';
    out += symbols_.at(t);
  }
  return out;
}

}  // namespace ita
