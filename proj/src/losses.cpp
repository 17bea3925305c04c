#include "latentface/losses.hpp"

#include <cmath>

#include "latentface/error.hpp"

namespace latentface {

void LossWeights::validate() const {
  require(std::isfinite(lambda_id) && lambda_id >= 0.0, "lambda_id must be finite and non-negative");
  require(std::isfinite(lambda_l2) && lambda_l2 >= 0.0, "lambda_l2 must be finite and non-negative");
}

ClipTarget ClipTarget::from_prompts(const PromptBatch& batch, const JointEmbedder& embedder) {
  require(!batch.prompts.empty(), "clip loss: prompt batch is empty");
  ClipTarget target;
  target.targets_.reserve(batch.prompts.size());
  for (const auto& prompt : batch.prompts) {
    target.targets_.push_back(embedder.embed_text(prompt));
  }
  return target;
}

ClipTarget ClipTarget::from_image(const Image& image, const JointEmbedder& embedder) {
  ClipTarget target;
  target.targets_.push_back(embedder.embed_image(image));
  return target;
}

ImageLoss ClipTarget::evaluate(const RenderSet& renders, const JointEmbedder& embedder, bool with_grad) const {
  require(!renders.images.empty(), "clip loss: no renders");
  require(!targets_.empty(), "clip loss: no targets");
  const double n = static_cast<double>(renders.size());
  const double k = static_cast<double>(targets_.size());

  std::vector<EmbeddingVector> embedded;
  embedded.reserve(renders.size());
  for (const auto& image : renders.images) {
    embedded.push_back(embedder.embed_image(image));
  }

  ImageLoss loss;
  double sum = 0.0;
  for (const auto& t : targets_) {
    for (const auto& u : embedded) {
      sum += cosine_distance(u, t);
    }
  }
  loss.value = sum / (k * n);

  if (with_grad) {
    Eigen::VectorXd mean_target = Eigen::VectorXd::Zero(embedded.front().dim());
    for (const auto& t : targets_) {
      mean_target += t.values;
    }
    mean_target /= k;
    for (std::size_t i = 0; i < renders.size(); ++i) {
      // d/du of mean_j |u - t_j|^2 / 2, scaled by 1/N
      const Eigen::VectorXd g = (embedded[i].values - mean_target) / n;
      loss.grads.push_back(embedder.embed_image_vjp(renders.images[i], g));
    }
  }
  return loss;
}

IdentityAnchor::IdentityAnchor(const RenderSet& original, const IdentityEmbedder& embedder) {
  require(!original.images.empty(), "identity loss: no original renders");
  for (const auto& image : original.images) {
    anchors_.push_back(embedder.embed_identity(image));
  }
}

ImageLoss IdentityAnchor::evaluate(const RenderSet& manipulated, const IdentityEmbedder& embedder, bool with_grad) const {
  require(manipulated.size() == anchors_.size(),
          "identity loss: " + std::to_string(manipulated.size()) + " manipulated renders vs " +
              std::to_string(anchors_.size()) + " originals");
  const double n = static_cast<double>(anchors_.size());
  ImageLoss loss;
  double sum = 0.0;
  std::vector<EmbeddingVector> embedded;
  for (std::size_t i = 0; i < anchors_.size(); ++i) {
    embedded.push_back(embedder.embed_identity(manipulated.images[i]));
    sum += cosine_distance(anchors_[i], embedded.back());
  }
  loss.value = sum / n;
  if (with_grad) {
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
      const Eigen::VectorXd g = (embedded[i].values - anchors_[i].values) / n;
      loss.grads.push_back(embedder.embed_identity_vjp(manipulated.images[i], g));
    }
  }
  return loss;
}

double clip_text_loss(const RenderSet& renders, const PromptBatch& batch, const JointEmbedder& embedder) {
  require(!renders.images.empty() && !batch.prompts.empty(), "clip_text_loss: empty renders or prompts");
  return ClipTarget::from_prompts(batch, embedder).evaluate(renders, embedder, false).value;
}

double clip_image_loss(const RenderSet& renders, const Image& target, const JointEmbedder& embedder) {
  require(!renders.images.empty(), "clip_image_loss: empty renders");
  return ClipTarget::from_image(target, embedder).evaluate(renders, embedder, false).value;
}

double identity_loss(const RenderSet& original, const RenderSet& manipulated, const IdentityEmbedder& embedder) {
  require(original.size() == manipulated.size(), "identity_loss: render sets are not view-aligned");
  return IdentityAnchor(original, embedder).evaluate(manipulated, embedder, false).value;
}

double l2_loss(const Eigen::VectorXd& delta) { return delta.norm(); }

double l2_loss(const Direction& dir) { return l2_loss(dir.delta); }

Eigen::VectorXd l2_loss_gradient(const Eigen::VectorXd& delta) {
  const double norm = delta.norm();
  if (norm == 0.0) {
    return Eigen::VectorXd::Zero(delta.size());
  }
  return delta / norm;
}

double total_loss(double l_clip, double l_id, double l_l2, const LossWeights& weights) {
  return l_clip + weights.lambda_id * l_id + weights.lambda_l2 * l_l2;
}

} // namespace latentface
