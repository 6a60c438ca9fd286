#pragma once

#include <span>
#include <string_view>

namespace til::detail {

struct PromptResource {
  std::string_view name;
  std::string_view text;  ///< file contents including the '#' header
};

std::span<const PromptResource> prompt_resources();

}  // namespace til::detail
