#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <opencv2/core.hpp>

#include "til/types.hpp"

namespace til {

struct PromptBundle {
  Role role = Role::Discriminator;
  std::optional<Attribute> attribute;
  int round = 1;
  std::string text;
  /// Set only on second-round localizer prompts, by the caller.
  std::optional<cv::Mat> negative_example;

  bool expects_negative_example() const noexcept {
    return role == Role::Localizer && round == 2;
  }
};

/// Template text for (role, attribute, round). Localizer and checker need an
/// attribute, the discriminator must not have one, and only the localizer has
/// a second round. Violations throw Error(Config).
PromptBundle build_prompt(Role role, std::optional<Attribute> attribute, int round,
                          int n_tiles = 4);

/// Version tag from the template resource headers.
std::string_view prompt_template_version();

/// Raw embedded resource (header stripped) by file stem, e.g. "discriminator".
std::string_view prompt_resource(std::string_view name);

}  // namespace til
