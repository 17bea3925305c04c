#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "latentface/embed.hpp"
#include "latentface/latent.hpp"
#include "latentface/losses.hpp"
#include "latentface/optimizer.hpp"
#include "latentface/prompts.hpp"
#include "latentface/render.hpp"

namespace latentface {

/// Persisted Direction. Doubles are written in shortest round-trip form, so
/// save -> load -> save reproduces the file byte for byte.
struct DirectionRecord {
  Direction direction;
  std::string tool_version = LATENTFACE_VERSION;

  std::string serialize() const;
  static DirectionRecord deserialize(const std::string& text);

  void save(const std::filesystem::path& path) const;
  static DirectionRecord load(const std::filesystem::path& path);
};

/// One JSON object per line: {"step", "l_clip", "l_id", "l_l2", "total"}.
void write_trace(const std::vector<LossRecord>& trace, const std::filesystem::path& path);
std::vector<LossRecord> read_trace(const std::filesystem::path& path);

/// Automated proxies for identity preservation and prompt adherence. These
/// are not human ratings.
struct EvalReport {
  double identity_similarity = 0.0; // mean cosine of identity embeddings, original vs manipulated
  double semantic_before = 0.0;     // mean D over (original render, prompt) pairs
  double semantic_after = 0.0;      // mean D over (manipulated render, prompt) pairs
  int views = 0;
  int prompts = 0;

  std::string serialize() const;
  void save(const std::filesystem::path& path) const;
};

EvalReport evaluate_renders(
    const RenderSet& original,
    const RenderSet& manipulated,
    const PromptBatch& batch,
    const JointEmbedder& embedder,
    const IdentityEmbedder& identity_embedder);

// Same report against an arbitrary semantic target (prompts or a target image).
EvalReport evaluate_renders(
    const RenderSet& original,
    const RenderSet& manipulated,
    const ClipTarget& target,
    const JointEmbedder& embedder,
    const IdentityEmbedder& identity_embedder);

} // namespace latentface
