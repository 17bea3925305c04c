#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace latentface {

struct PromptTemplateSet {
  std::vector<std::string> templates;

  std::size_t size() const { return templates.size(); }
  void validate() const; // non-empty, no empty template
};

struct PromptBatch {
  std::vector<std::string> prompts;
  std::vector<std::string> sources;
};

/// The 74 sentence prefixes used for prompt augmentation, in table reading
/// order (left column then right column, row by row). Kept verbatim,
/// including the trailing periods on the "video game." entries.
const PromptTemplateSet& default_templates();

/// Every "template text" pair joined by one space, template-major:
/// all texts for template 0, then all texts for template 1, ...
/// Texts are trimmed of surrounding whitespace; an empty list or an empty
/// text throws InvalidArgument.
PromptBatch expand_prompt(const std::vector<std::string>& texts, const PromptTemplateSet& templates);

/// One template per non-blank line (UTF-8).
PromptTemplateSet load_templates(const std::filesystem::path& path);

} // namespace latentface
