#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace eqalign::prompts {

/// Version tag of the compiled-in template set (the data/templates/<version> directory).
inline constexpr std::string_view kTemplateVersion = "v1";

std::vector<std::string> template_names();
std::string_view template_text(std::string_view name);

/// Substitute {{key}} placeholders. Unknown or unfilled placeholders are an error.
std::string render(std::string_view name, const std::map<std::string, std::string>& vars);

}  // namespace eqalign::prompts
