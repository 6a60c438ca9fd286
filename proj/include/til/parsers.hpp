#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "til/types.hpp"

namespace til {

enum class InteractionVerdict { Contact, Separation, Neither };
enum class CheckVerdict { Accept, Reject };

struct TileIndex {
  int value = 0;
  bool operator==(const TileIndex&) const = default;
};

std::string_view to_string(InteractionVerdict verdict) noexcept;
std::string_view to_string(CheckVerdict verdict) noexcept;

/// Parsed model output with the span that decided it.
struct VlmVerdict {
  std::variant<InteractionVerdict, TileIndex, CheckVerdict> kind;
  std::string raw;
  std::string parse_trace;  ///< the matched token
  std::size_t offset = 0;   ///< byte offset of the match in `raw`
};

// All three parsers are total: they return a verdict or throw Error(Unparseable).
// The last qualifying token wins, since chain-of-thought answers conclude at the end.

/// Last standalone, case-insensitive "contact", "separation" or "neither".
VlmVerdict parse_attribute(std::string_view text);

/// Last standalone integer in [1, n_tiles]. Decimals are ignored.
VlmVerdict parse_tile_index(std::string_view text, int n_tiles);

/// Last standalone "yes" (accept) or "no" (reject).
VlmVerdict parse_check(std::string_view text);

}  // namespace til
