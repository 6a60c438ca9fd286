#include "til/prompts.hpp"

#include <map>
#include <mutex>
#include <string>

#include <fmt/core.h>

#include "prompt_resources.hpp"
#include "til/error.hpp"

namespace til {
namespace {

struct Template {
  std::string body;
  std::string version;
};

const std::map<std::string, Template, std::less<>>& templates() {
  static const auto table = [] {
    std::map<std::string, Template, std::less<>> out;
    for (const auto& resource : detail::prompt_resources()) {
      Template t;
      std::string_view rest = resource.text;
      while (!rest.empty() && rest.front() == '#') {
        const auto eol = rest.find('\n');
        const std::string_view line = rest.substr(0, eol);
        constexpr std::string_view key = "# template-version:";
        if (line.substr(0, key.size()) == key) {
          std::string_view v = line.substr(key.size());
          while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
          t.version = std::string(v);
        }
        rest = eol == std::string_view::npos ? std::string_view{} : rest.substr(eol + 1);
      }
      while (!rest.empty() && (rest.back() == '\n' || rest.back() == '\r')) rest.remove_suffix(1);
      t.body = std::string(rest);
      out.emplace(std::string(resource.name), std::move(t));
    }
    return out;
  }();
  return table;
}

const std::string& body(std::string_view name) {
  const auto& table = templates();
  const auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorKind::Config, fmt::format("missing prompt template '{}'", name));
  return it->second.body;
}

void replace_all(std::string& text, std::string_view key, std::string_view value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
}

}  // namespace

std::string_view prompt_resource(std::string_view name) { return body(name); }

std::string_view prompt_template_version() {
  static const std::string version = [] {
    std::string out;
    for (const auto& [name, t] : templates()) {
      if (!out.empty()) out += ',';
      out += name + "=" + (t.version.empty() ? "?" : t.version);
    }
    return out;
  }();
  return version;
}

PromptBundle build_prompt(Role role, std::optional<Attribute> attribute, int round, int n_tiles) {
  if (round != 1 && round != 2) throw Error(ErrorKind::Config, fmt::format("round must be 1 or 2, got {}", round));
  if (n_tiles < 1) throw Error(ErrorKind::Config, "n_tiles must be positive");

  PromptBundle bundle;
  bundle.role = role;
  bundle.attribute = attribute;
  bundle.round = round;

  switch (role) {
    case Role::Discriminator:
      if (attribute) throw Error(ErrorKind::Config, "the discriminator prompt takes no attribute");
      if (round != 1) throw Error(ErrorKind::Config, "the discriminator has a single round");
      bundle.text = body("discriminator");
      return bundle;
    case Role::Localizer:
      if (!attribute) throw Error(ErrorKind::Config, "the localizer prompt needs an attribute");
      bundle.text = body("localizer");
      if (round == 2) bundle.text += "\n\n" + body("localizer_feedback");
      break;
    case Role::Checker:
      if (!attribute) throw Error(ErrorKind::Config, "the checker prompt needs an attribute");
      if (round != 1) throw Error(ErrorKind::Config, "the checker has a single round");
      bundle.text = body("checker");
      break;
  }
  const std::string word(to_string(*attribute));
  replace_all(bundle.text, "{definition}", body("definition_" + word));
  replace_all(bundle.text, "{attribute}", word);
  replace_all(bundle.text, "{n_tiles}", std::to_string(n_tiles));
  return bundle;
}

}  // namespace til
