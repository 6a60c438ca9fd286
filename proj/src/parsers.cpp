#include "til/parsers.hpp"

#include <cctype>
#include <optional>

#include <fmt/core.h>

#include "til/error.hpp"

namespace til {
namespace {

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

struct Token {
  std::size_t offset;
  std::string_view text;
};

/// Calls `visit` for every maximal run of word characters.
template <typename Visit>
void for_each_word(std::string_view text, Visit&& visit) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (!word_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && word_char(text[j])) ++j;
    visit(Token{i, text.substr(i, j - i)});
    i = j;
  }
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  }
  return true;
}

std::string preview(std::string_view text) {
  constexpr std::size_t kMax = 80;
  std::string out(text.substr(0, kMax));
  if (text.size() > kMax) out += "...";
  return out;
}

[[noreturn]] void unparseable(std::string_view what, std::string_view text) {
  throw Error(ErrorKind::Unparseable, fmt::format("no {} in response: \"{}\"", what, preview(text)));
}

}  // namespace

std::string_view to_string(InteractionVerdict verdict) noexcept {
  switch (verdict) {
    case InteractionVerdict::Contact: return "contact";
    case InteractionVerdict::Separation: return "separation";
    case InteractionVerdict::Neither: return "neither";
  }
  return "unknown";
}

std::string_view to_string(CheckVerdict verdict) noexcept {
  return verdict == CheckVerdict::Accept ? "accept" : "reject";
}

VlmVerdict parse_attribute(std::string_view text) {
  std::optional<std::pair<Token, InteractionVerdict>> last;
  for_each_word(text, [&](const Token& token) {
    if (iequals(token.text, "contact")) last = {{token, InteractionVerdict::Contact}};
    else if (iequals(token.text, "separation")) last = {{token, InteractionVerdict::Separation}};
    else if (iequals(token.text, "neither")) last = {{token, InteractionVerdict::Neither}};
  });
  if (!last) unparseable("interaction attribute", text);
  return {last->second, std::string(text), std::string(last->first.text), last->first.offset};
}

VlmVerdict parse_tile_index(std::string_view text, int n_tiles) {
  std::optional<std::pair<Token, int>> last;
  for_each_word(text, [&](const Token& token) {
    for (char c : token.text) {
      if (!digit(c)) return;
    }
    const std::size_t begin = token.offset;
    const std::size_t end = token.offset + token.text.size();
    const bool fraction_part = begin >= 2 && text[begin - 1] == '.' && digit(text[begin - 2]);
    const bool integer_part = end + 1 < text.size() && text[end] == '.' && digit(text[end + 1]);
    if (fraction_part || integer_part || token.text.size() > 9) return;
    const int value = std::stoi(std::string(token.text));
    if (value >= 1 && value <= n_tiles) last = {{token, value}};
  });
  if (!last) unparseable(fmt::format("tile index in [1, {}]", n_tiles), text);
  return {TileIndex{last->second}, std::string(text), std::string(last->first.text), last->first.offset};
}

VlmVerdict parse_check(std::string_view text) {
  std::optional<std::pair<Token, CheckVerdict>> last;
  for_each_word(text, [&](const Token& token) {
    if (iequals(token.text, "yes")) last = {{token, CheckVerdict::Accept}};
    else if (iequals(token.text, "no")) last = {{token, CheckVerdict::Reject}};
  });
  if (!last) unparseable("yes/no verdict", text);
  return {last->second, std::string(text), std::string(last->first.text), last->first.offset};
}

}  // namespace til
