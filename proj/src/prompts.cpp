#include "eqalign/prompts.hpp"

#include <fmt/format.h>

#include "eqalign/error.hpp"

namespace eqalign::prompts {

namespace {

struct Template {
    const char* name;
    const char* body;
};

constexpr Template kTemplates[] = {
#include "templates.inc"
};

}  // namespace

std::vector<std::string> template_names() {
    std::vector<std::string> out;
    for (const auto& t : kTemplates) out.emplace_back(t.name);
    return out;
}

std::string_view template_text(std::string_view name) {
    for (const auto& t : kTemplates) {
        if (name == t.name) return t.body;
    }
    throw validation_error(fmt::format("unknown prompt template '{}'", name));
}

std::string render(std::string_view name, const std::map<std::string, std::string>& vars) {
    const std::string_view tpl = template_text(name);
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto open = tpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tpl.substr(pos));
            break;
        }
        const auto close = tpl.find("}}", open + 2);
        if (close == std::string_view::npos) throw validation_error(fmt::format("template '{}' has an unclosed placeholder", name));
        out.append(tpl.substr(pos, open - pos));
        const std::string key(tpl.substr(open + 2, close - open - 2));
        const auto it = vars.find(key);
        if (it == vars.end()) throw validation_error(fmt::format("template '{}' needs a value for '{}'", name, key));
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

}  // namespace eqalign::prompts
