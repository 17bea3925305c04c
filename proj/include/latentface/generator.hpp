#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "latentface/image.hpp"
#include "latentface/latent.hpp"

namespace latentface {

/// Aligned shape / normal / texture UV maps. Shape pixels hold object-space
/// positions, normal pixels (unnormalized) normals, texture pixels linear RGB.
struct UVMapSet {
  Image shape;
  Image normal;
  Image texture;

  int height() const { return shape.height; }
  int width() const { return shape.width; }

  // Throws InvalidArgument on shape mismatch, InvalidData on non-finite entries.
  void validate() const;
};

struct LayerInfo {
  std::string name;
  int width = 0;
};

struct LatentGradient {
  Eigen::VectorXd z;
  Eigen::Matrix<double, kExpressionSlots, 1> e;
};

/// Trunk + branch generator contract. The trunk is a chain of named layers;
/// any of them can serve as the tap where edits are made. Everything after
/// the tap (remaining trunk layers, then the three modality branches) is run
/// by forward_from_intermediate.
///
/// Implementations are immutable after construction and safe for concurrent
/// const calls.
class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;

  virtual int latent_dim() const = 0;
  virtual int uv_resolution() const = 0;
  virtual const std::vector<LayerInfo>& layers() const = 0;

  virtual IntermediateCode partial_forward(
      const LatentCode& z,
      const ExpressionVector& e,
      std::string_view tap) const = 0;

  virtual UVMapSet forward_from_intermediate(const IntermediateCode& c) const = 0;

  // Vector-Jacobian products of the two stages.
  virtual LatentGradient partial_forward_vjp(
      const LatentCode& z,
      const ExpressionVector& e,
      std::string_view tap,
      const Eigen::VectorXd& grad_c) const = 0;

  virtual Eigen::VectorXd forward_from_intermediate_vjp(
      const IntermediateCode& c,
      const UVMapSet& grad_maps) const = 0;

  // Runs every trunk layer then the branches.
  virtual UVMapSet forward(const LatentCode& z, const ExpressionVector& e) const = 0;

  std::string default_tap() const { return layers().front().name; }
  int layer_width(std::string_view tap) const; // throws on unknown layer
};

enum class Activation { tanh, linear };

struct ReferenceGeneratorConfig {
  int latent_dim = 32;
  std::vector<LayerInfo> layers = {{"dense", 64}, {"mid", 48}};
  int uv_resolution = 16;
  Activation activation = Activation::tanh;
  std::uint64_t seed = 1234;
  // Amplitudes of the learned part of each branch on top of its template bias.
  double shape_scale = 0.1;
  double normal_scale = 0.2;
  double texture_scale = 0.2;
};

/// Fixed-seed synthetic stand-in for a pretrained generator: dense trunk
/// layers (tanh or identity) on z||e, then three independent dense branches.
/// The shape branch bias is a cylindrical face patch, so an untouched
/// generator already yields a plausible frontal surface.
class ReferenceGenerator final : public GeneratorBackend {
 public:
  explicit ReferenceGenerator(const ReferenceGeneratorConfig& config);

  int latent_dim() const override { return config_.latent_dim; }
  int uv_resolution() const override { return config_.uv_resolution; }
  const std::vector<LayerInfo>& layers() const override { return config_.layers; }
  const ReferenceGeneratorConfig& config() const { return config_; }

  IntermediateCode partial_forward(const LatentCode& z, const ExpressionVector& e, std::string_view tap) const override;
  UVMapSet forward_from_intermediate(const IntermediateCode& c) const override;
  LatentGradient partial_forward_vjp(
      const LatentCode& z,
      const ExpressionVector& e,
      std::string_view tap,
      const Eigen::VectorXd& grad_c) const override;
  Eigen::VectorXd forward_from_intermediate_vjp(const IntermediateCode& c, const UVMapSet& grad_maps) const override;
  UVMapSet forward(const LatentCode& z, const ExpressionVector& e) const override;

  void save_weights(const std::filesystem::path& path) const;
  void load_weights(const std::filesystem::path& path);

 private:
  int layer_index(std::string_view tap) const;
  Eigen::VectorXd input_vector(const LatentCode& z, const ExpressionVector& e) const;
  Eigen::VectorXd activate(const Eigen::VectorXd& pre) const;
  UVMapSet run_branches(const Eigen::VectorXd& trunk_out) const;

  ReferenceGeneratorConfig config_;
  std::vector<Eigen::MatrixXd> trunk_weights_;
  std::vector<Eigen::VectorXd> trunk_bias_;
  std::array<Eigen::MatrixXd, 3> branch_weights_;
  std::array<Eigen::VectorXd, 3> branch_bias_;
};

/// Reads a key-value backend manifest (`backend`, `latent_dim`, `layers`,
/// `uv_resolution`, `activation`, `weights`). Only `backend = reference` is
/// built in; anything else is rejected with InvalidArgument.
std::unique_ptr<GeneratorBackend> load_generator(const std::filesystem::path& manifest_path);

/// Writes `<dir>/<stem>.manifest` and `<dir>/<stem>.weights` for a reference
/// generator and returns the manifest path.
std::filesystem::path write_reference_backend(
    const ReferenceGeneratorConfig& config,
    const std::filesystem::path& dir,
    const std::string& stem = "generator");

} // namespace latentface
