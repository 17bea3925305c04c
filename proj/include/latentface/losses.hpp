#pragma once

#include <vector>

#include <Eigen/Core>

#include "latentface/embed.hpp"
#include "latentface/latent.hpp"
#include "latentface/prompts.hpp"
#include "latentface/render.hpp"

namespace latentface {

struct LossWeights {
  double lambda_id = 0.01;
  double lambda_l2 = 0.001;

  void validate() const; // finite and non-negative
};

// An image-space loss value with (optionally) dL/dimage for every render.
struct ImageLoss {
  double value = 0.0;
  std::vector<Image> grads;
};

/// Embedding-space target of the semantic loss: either K prompt embeddings
/// or one target-image embedding, computed once and held constant.
class ClipTarget {
 public:
  static ClipTarget from_prompts(const PromptBatch& batch, const JointEmbedder& embedder);
  static ClipTarget from_image(const Image& target, const JointEmbedder& embedder);

  /// Mean of D(I_i, t_j) over all N x K (render, target) pairs.
  ImageLoss evaluate(const RenderSet& renders, const JointEmbedder& embedder, bool with_grad) const;

  const std::vector<EmbeddingVector>& embeddings() const { return targets_; }

 private:
  std::vector<EmbeddingVector> targets_;
};

/// Frozen identity embeddings of the original renders. The loss is
/// 1 - mean_i <R(orig_i), R(manip_i)> over the aligned views; gradients flow
/// only into the manipulated renders.
class IdentityAnchor {
 public:
  IdentityAnchor(const RenderSet& original, const IdentityEmbedder& embedder);

  ImageLoss evaluate(const RenderSet& manipulated, const IdentityEmbedder& embedder, bool with_grad) const;
  const std::vector<EmbeddingVector>& embeddings() const { return anchors_; }

 private:
  std::vector<EmbeddingVector> anchors_;
};

double clip_text_loss(const RenderSet& renders, const PromptBatch& batch, const JointEmbedder& embedder);
double clip_image_loss(const RenderSet& renders, const Image& target, const JointEmbedder& embedder);
double identity_loss(const RenderSet& original, const RenderSet& manipulated, const IdentityEmbedder& embedder);

double l2_loss(const Eigen::VectorXd& delta);
double l2_loss(const Direction& dir);
// Subgradient of |delta| (zero at the origin).
Eigen::VectorXd l2_loss_gradient(const Eigen::VectorXd& delta);

double total_loss(double l_clip, double l_id, double l_l2, const LossWeights& weights);

} // namespace latentface
