#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace til {

enum class Role { Discriminator, Localizer, Checker };

/// Interaction transition kind.
enum class Attribute { Contact, Separation };

std::string_view to_string(Role role) noexcept;
std::string_view to_string(Attribute attribute) noexcept;

/// Throw Error(Parse) on unknown names.
Role role_from_string(std::string_view name);
Attribute attribute_from_string(std::string_view name);

}  // namespace til
