#include "latentface/embed.hpp"

#include <cmath>
#include <string>

#include "latentface/error.hpp"
#include "latentface/kv.hpp"
#include "latentface/rng.hpp"

namespace latentface {

namespace {
constexpr double kDcLeak = 0.05;
} // namespace

EmbeddingVector EmbeddingVector::unit(Eigen::VectorXd raw) {
  const double norm = raw.norm();
  require<InvalidData>(std::isfinite(norm) && norm > 0.0, "cannot normalize a zero or non-finite embedding");
  return {raw / norm, true};
}

namespace {

void check_pair(const EmbeddingVector& a, const EmbeddingVector& b) {
  require(a.dim() == b.dim(), "embedding dimensions differ: " + std::to_string(a.dim()) + " vs " +
                                  std::to_string(b.dim()));
  require(a.normalized && b.normalized, "cosine distance needs normalized embeddings");
  require(std::abs(a.values.norm() - 1.0) <= 1e-6 && std::abs(b.values.norm() - 1.0) <= 1e-6,
          "embedding flagged normalized but is not unit length");
}

} // namespace

double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  check_pair(a, b);
  return 0.5 * (a.values - b.values).squaredNorm();
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) { return 1.0 - cosine_distance(a, b); }

LinearImageProjector::LinearImageProjector(std::uint64_t seed, int dim, int input_side, Execution exec)
    : dim_(dim), side_(input_side), exec_(exec) {
  require(dim >= 2, "embedding dimension must be at least 2");
  require(input_side >= 1, "embedder input side must be positive");
  const std::size_t cols = static_cast<std::size_t>(side_) * side_ * 3;
  weights_.resize(static_cast<std::size_t>(dim_) * cols);
  GaussianStream stream(mix_seed(seed, 0x656d62));
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  for (double& w : weights_) {
    w = scale * stream.next();
  }
  // Remove most of each row's per-channel mean so a flat gray background
  // does not dominate every embedding; a small remainder keeps uniform
  // images embeddable.
  const std::size_t pixels = static_cast<std::size_t>(side_) * side_;
  for (int k = 0; k < dim_; ++k) {
    double* row = weights_.data() + static_cast<std::size_t>(k) * cols;
    for (int ch = 0; ch < 3; ++ch) {
      double mean = 0.0;
      for (std::size_t p = 0; p < pixels; ++p) {
        mean += row[3 * p + ch];
      }
      mean /= static_cast<double>(pixels);
      for (std::size_t p = 0; p < pixels; ++p) {
        row[3 * p + ch] -= (1.0 - kDcLeak) * mean;
      }
    }
  }
}

Eigen::VectorXd LinearImageProjector::project(const Image& resized) const {
  Eigen::VectorXd raw(dim_);
  kernels::matvec(exec_, dim_, side_ * side_ * 3, weights_, resized.pixels, {raw.data(), static_cast<std::size_t>(dim_)});
  return raw;
}

EmbeddingVector LinearImageProjector::embed(const Image& image) const {
  require(image.channels == 3, "embedder expects RGB images");
  return EmbeddingVector::unit(project(resize_bilinear(image, side_, side_)));
}

Image LinearImageProjector::embed_vjp(const Image& image, const Eigen::VectorXd& grad_embedding) const {
  require(grad_embedding.size() == dim_, "embedding gradient has the wrong dimension");
  const Eigen::VectorXd raw = project(resize_bilinear(image, side_, side_));
  const double norm = raw.norm();
  const Eigen::VectorXd unit = raw / norm;
  // d(x/|x|) = (I - u u^T) / |x|
  const Eigen::VectorXd grad_raw = (grad_embedding - unit * unit.dot(grad_embedding)) / norm;
  Image grad_resized(side_, side_, 3);
  kernels::matvec_transposed(exec_, dim_, side_ * side_ * 3, weights_, {grad_raw.data(), static_cast<std::size_t>(dim_)},
                             grad_resized.pixels);
  return resize_bilinear_adjoint(grad_resized, image.height, image.width);
}

ReferenceJointEmbedder::ReferenceJointEmbedder(std::uint64_t seed, int dim, int input_side)
    : seed_(seed), projector_(mix_seed(seed, 1), dim, input_side) {}

EmbeddingVector ReferenceJointEmbedder::embed_text(std::string_view text) const {
  GaussianStream stream(mix_seed(mix_seed(seed_, 2), fnv1a(text)));
  Eigen::VectorXd raw(dim());
  for (int i = 0; i < dim(); ++i) {
    raw[i] = stream.next();
  }
  return EmbeddingVector::unit(std::move(raw));
}

ReferenceIdentityEmbedder::ReferenceIdentityEmbedder(std::uint64_t seed, int dim, int input_side)
    : projector_(mix_seed(seed, 3), dim, input_side) {}

std::unique_ptr<JointEmbedder> reference_joint_embedder(std::uint64_t seed, int dim, int input_side) {
  return std::make_unique<ReferenceJointEmbedder>(seed, dim, input_side);
}

std::unique_ptr<IdentityEmbedder> reference_identity_embedder(std::uint64_t seed, int dim, int input_side) {
  return std::make_unique<ReferenceIdentityEmbedder>(seed, dim, input_side);
}

EmbedderManifest EmbedderManifest::load(const std::filesystem::path& path) {
  require(std::filesystem::is_regular_file(path), "embedder manifest not found: " + path.string());
  const auto doc = KeyValueDocument::load(path);
  EmbedderManifest m;
  m.kind = doc.get("kind").value_or("reference");
  m.dim = static_cast<int>(doc.require_int("dim"));
  m.seed = static_cast<std::uint64_t>(doc.get_int("seed", 0));
  m.input_side = static_cast<int>(doc.get_int("input_side", 224));
  require(m.kind == "reference", "embedder kind '" + m.kind + "' is not built in; only 'reference' is available");
  require(m.dim >= 2, "embedder dim must be at least 2");
  require(m.input_side >= 8, "embedder input_side must be at least 8");
  return m;
}

void EmbedderManifest::save(const std::filesystem::path& path) const {
  KeyValueDocument doc;
  doc.set("kind", kind);
  doc.set("dim", dim);
  doc.set("seed", static_cast<long long>(seed));
  doc.set("input_side", input_side);
  doc.save(path);
}

std::unique_ptr<JointEmbedder> load_joint_embedder(const std::filesystem::path& manifest_path) {
  const auto m = EmbedderManifest::load(manifest_path);
  return reference_joint_embedder(m.seed, m.dim, m.input_side);
}

std::unique_ptr<IdentityEmbedder> load_identity_embedder(const std::filesystem::path& manifest_path) {
  const auto m = EmbedderManifest::load(manifest_path);
  return reference_identity_embedder(m.seed, m.dim, m.input_side);
}

} // namespace latentface
