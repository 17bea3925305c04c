#include "latentface/prompts.hpp"

#include <fstream>

#include "latentface/error.hpp"
#include "latentface/kv.hpp"

namespace latentface {

void PromptTemplateSet::validate() const {
  require(!templates.empty(), "template set is empty");
  for (std::size_t i = 0; i < templates.size(); ++i) {
    require(!templates[i].empty(), "template " + std::to_string(i) + " is empty");
  }
}

const PromptTemplateSet& default_templates() {
  static const PromptTemplateSet set{{
      "a bad photo of a",
      "a sculpture of a",
      "a photo of the hard to see",
      "a low resolution photo of the",
      "a rendering of a",
      "graffiti of a",
      "a bad photo of the",
      "a cropped photo of the",
      "a photo of a hard to see",
      "a bright photo of a",
      "a photo of a clean",
      "a photo of a dirty",
      "a dark photo of the",
      "a drawing of a",
      "a photo of my",
      "the plastic",
      "a photo of the cool",
      "a close-up photo of a",
      "a painting of the",
      "a painting of a",
      "a pixelated photo of the",
      "a sculpture of the",
      "a bright photo of the",
      "a cropped photo of a",
      "a plastic",
      "a photo of the dirty",
      "a blurry photo of the",
      "a photo of the",
      "a good photo of the",
      "a rendering of the",
      "a in a video game.",
      "a photo of one",
      "a doodle of a",
      "a close-up photo of the",
      "a photo of a",
      "the in a video game.",
      "a sketch of a",
      "a face of the",
      "a doodle of the",
      "a low resolution photo of a",
      "the toy",
      "a rendition of the",
      "a photo of the clean",
      "a photo of a large",
      "a rendition of a",
      "a photo of a nice",
      "a photo of a weird",
      "a blurry photo of a",
      "a cartoon",
      "art of a",
      "a sketch of the",
      "a pixelated photo of a",
      "itap of the",
      "a good photo of a",
      "a plushie",
      "a photo of the nice",
      "a photo of the small",
      "a photo of the weird",
      "the cartoon",
      "art of the",
      "a drawing of the",
      "a photo of the large",
      "the plushie",
      "a dark photo of a",
      "itap of a",
      "graffiti of the",
      "a toy",
      "itap of my",
      "a photo of a cool",
      "a photo of a small",
      "a 3d object of the",
      "a 3d object of a",
      "a 3d face of a",
      "a 3d face of the",
  }};
  return set;
}

PromptBatch expand_prompt(const std::vector<std::string>& texts, const PromptTemplateSet& templates) {
  require(!texts.empty(), "expand_prompt: at least one text prompt is required");
  templates.validate();
  PromptBatch batch;
  for (const auto& text : texts) {
    std::string cleaned = trim(text);
    require(!cleaned.empty(), "expand_prompt: text prompts must not be empty");
    batch.sources.push_back(std::move(cleaned));
  }
  batch.prompts.reserve(templates.size() * batch.sources.size());
  for (const auto& prefix : templates.templates) {
    for (const auto& source : batch.sources) {
      batch.prompts.push_back(prefix + " " + source);
    }
  }
  return batch;
}

PromptTemplateSet load_templates(const std::filesystem::path& path) {
  std::ifstream in(path);
  require<IoError>(static_cast<bool>(in), "cannot open template file " + path.string());
  PromptTemplateSet set;
  std::string line;
  while (std::getline(in, line)) {
    std::string cleaned = trim(line);
    if (!cleaned.empty()) {
      set.templates.push_back(std::move(cleaned));
    }
  }
  set.validate();
  return set;
}

} // namespace latentface
