#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "latentface/image.hpp"
#include "latentface/kernels.hpp"

namespace latentface {

struct EmbeddingVector {
  Eigen::VectorXd values;
  bool normalized = false;

  // Scales `raw` to unit length; throws InvalidData on a zero or non-finite vector.
  static EmbeddingVector unit(Eigen::VectorXd raw);
  int dim() const { return static_cast<int>(values.size()); }
};

/// 1 - <a, b> for unit vectors, in [0, 2].
///
/// Evaluated as |a - b|^2 / 2, which equals 1 - <a, b> for unit vectors but
/// is exactly 0 when a == b bit for bit.
double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b);
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Shared text/image embedding space. Image embeddings are differentiable
/// with respect to pixels through embed_image_vjp; text embeddings are
/// treated as constants.
class JointEmbedder {
 public:
  virtual ~JointEmbedder() = default;
  virtual int dim() const = 0;
  virtual EmbeddingVector embed_text(std::string_view text) const = 0;
  virtual EmbeddingVector embed_image(const Image& image) const = 0;
  // dL/dimage given dL/d(normalized embedding).
  virtual Image embed_image_vjp(const Image& image, const Eigen::VectorXd& grad_embedding) const = 0;
};

class IdentityEmbedder {
 public:
  virtual ~IdentityEmbedder() = default;
  virtual int dim() const = 0;
  virtual EmbeddingVector embed_identity(const Image& image) const = 0;
  virtual Image embed_identity_vjp(const Image& image, const Eigen::VectorXd& grad_embedding) const = 0;
};

/// Seeded Gaussian projection of flattened pixels, normalized. Each row has
/// most of its per-channel mean removed, so the embedding responds to image
/// structure rather than overall brightness. Images whose side differs from
/// `input_side` are bilinearly resampled first. Linear with no offset, so
/// scaling every pixel by k > 0 leaves the embedding unchanged.
class LinearImageProjector {
 public:
  LinearImageProjector(std::uint64_t seed, int dim, int input_side, Execution exec = Execution::parallel);

  int dim() const { return dim_; }
  int input_side() const { return side_; }
  EmbeddingVector embed(const Image& image) const;
  Image embed_vjp(const Image& image, const Eigen::VectorXd& grad_embedding) const;

 private:
  Eigen::VectorXd project(const Image& resized) const;

  int dim_;
  int side_;
  Execution exec_;
  std::vector<double> weights_; // dim x (side * side * 3), row-major
};

class ReferenceJointEmbedder final : public JointEmbedder {
 public:
  ReferenceJointEmbedder(std::uint64_t seed, int dim, int input_side = 224);

  int dim() const override { return projector_.dim(); }
  EmbeddingVector embed_text(std::string_view text) const override;
  EmbeddingVector embed_image(const Image& image) const override { return projector_.embed(image); }
  Image embed_image_vjp(const Image& image, const Eigen::VectorXd& grad) const override {
    return projector_.embed_vjp(image, grad);
  }

 private:
  std::uint64_t seed_;
  LinearImageProjector projector_;
};

class ReferenceIdentityEmbedder final : public IdentityEmbedder {
 public:
  ReferenceIdentityEmbedder(std::uint64_t seed, int dim, int input_side = 224);

  int dim() const override { return projector_.dim(); }
  EmbeddingVector embed_identity(const Image& image) const override { return projector_.embed(image); }
  Image embed_identity_vjp(const Image& image, const Eigen::VectorXd& grad) const override {
    return projector_.embed_vjp(image, grad);
  }

 private:
  LinearImageProjector projector_;
};

// Throw InvalidArgument when dim < 2.
std::unique_ptr<JointEmbedder> reference_joint_embedder(std::uint64_t seed, int dim, int input_side = 224);
std::unique_ptr<IdentityEmbedder> reference_identity_embedder(std::uint64_t seed, int dim, int input_side = 224);

/// Adapter manifest: `kind` (reference), `dim`, `seed`, `input_side`, plus
/// optional preprocessing (`mean`, `std`) and `weights` entries that
/// external adapters would consume.
struct EmbedderManifest {
  std::string kind = "reference";
  int dim = 64;
  std::uint64_t seed = 0;
  int input_side = 224;

  static EmbedderManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

std::unique_ptr<JointEmbedder> load_joint_embedder(const std::filesystem::path& manifest_path);
std::unique_ptr<IdentityEmbedder> load_identity_embedder(const std::filesystem::path& manifest_path);

} // namespace latentface
