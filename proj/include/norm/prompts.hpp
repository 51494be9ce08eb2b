#pragma once

#include <map>
#include <string>

namespace norm {

/// Named prompt sections with {placeholder} substitution. Built-in
/// defaults can be overridden from a plain-text file of the form
///
///   [section.name]
///   template text with {placeholders}
///
/// Sections used by the pipeline: alternates.system, alternates.user,
/// prune.system, prune.multiple_choice.user, prune.binary.user,
/// prune.cot_instruction.
class PromptTemplates {
public:
    PromptTemplates();  // defaults only
    static PromptTemplates load(const std::string& path);

    const std::string& section(const std::string& name) const;

    static std::string render(const std::string& tmpl,
                              const std::map<std::string, std::string>& vars);

private:
    std::map<std::string, std::string> sections_;
};

}  // namespace norm
