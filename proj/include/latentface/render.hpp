#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "latentface/image.hpp"
#include "latentface/kernels.hpp"
#include "latentface/mesh.hpp"

namespace latentface {

enum class Projection { orthographic, perspective };

struct CameraParams {
  double yaw_degrees = 0.0; // mesh rotation about the vertical axis
  double distance = 3.0;    // camera on +z looking at the origin
  int image_size = 224;
  Projection projection = Projection::orthographic;
  double view_extent = 1.25; // half-width of the visible square at the origin plane, model units

  void validate() const;
};

// Mesh y-axis rotations of the three default views.
inline const std::vector<double> kDefaultYaws = {-30.0, 3.0, 30.0};

struct RenderConfig {
  // Rasterizer settings carried for soft-rasterizing backends; the reference
  // splat renderer does not read them.
  double blur_radius = 0.0;
  int faces_per_pixel = 2;

  Eigen::Vector3d light_position{0.0, 0.0, 3.0};
  double splat_sigma = 1.5; // pixels
  double ambient = 0.3;
  double background = 0.5;
  double background_weight = 0.05;
  bool shade_normals = true;
  CameraParams camera;
  Execution execution = Execution::parallel;

  void validate() const;
};

struct RenderSet {
  std::vector<Image> images;
  std::vector<CameraParams> cameras;

  std::size_t size() const { return images.size(); }
};

/// Lambertian point-light shading with a fixed ambient term:
///   base * min(1, max(0, <n, normalize(light - point)>) + ambient), clamped to [0,1].
Eigen::Vector3d shade(
    const Eigen::Vector3d& normal,
    const Eigen::Vector3d& base_color,
    const Eigen::Vector3d& light_position,
    const Eigen::Vector3d& point,
    double ambient = 0.3);

struct ShadeGradient {
  Eigen::Vector3d normal;
  Eigen::Vector3d base_color;
  Eigen::Vector3d point;
};

ShadeGradient shade_vjp(
    const Eigen::Vector3d& normal,
    const Eigen::Vector3d& base_color,
    const Eigen::Vector3d& light_position,
    const Eigen::Vector3d& point,
    double ambient,
    const Eigen::Vector3d& grad_color);

// Rotation applied to the mesh for a given yaw.
Eigen::Matrix3d yaw_rotation(double yaw_degrees);

// Rotates vertices and normals of a copy of `mesh`.
TexturedMesh rotate_mesh(const TexturedMesh& mesh, double yaw_degrees);

/// Everything the backward pass needs from a forward render.
struct RenderTape {
  struct View {
    CameraParams camera;
    Eigen::Matrix3d rotation;
    VertexMatrix positions; // rotated
    VertexMatrix normals;   // rotated
    VertexMatrix base_colors;
    std::vector<double> screen; // V x 2
    std::vector<double> colors; // V x 3, shaded
    std::vector<double> denominator;
    Image image;
  };
  std::vector<View> views;
  std::vector<int> texels;
  int texture_height = 0;
  int texture_width = 0;
  RenderConfig config;
};

/// Renders one image per yaw. Throws InvalidArgument on an empty yaw list.
RenderSet render_views(
    const TexturedMesh& mesh,
    std::span<const double> yaws,
    const RenderConfig& config,
    RenderTape* tape = nullptr);

/// Pulls per-view image gradients back onto the mesh (vertices, normals,
/// texture). `image_grads` must align with the taped views.
MeshGradient render_views_vjp(const RenderTape& tape, std::span<const Image> image_grads);

struct GradientProbe {
  enum class Parameter { vertex, normal, texture } parameter;
  int index;   // vertex index, or texel index for texture probes
  int channel; // coordinate / color channel
  int view;
  int row;
  int col;
  double analytic;
  double numeric;
  double relative_error;
};

struct GradientCheckReport {
  std::vector<GradientProbe> probes;
  double max_relative_error = 0.0;
};

/// Samples `probes` random (pixel, parameter) pairs and compares the analytic
/// pixel gradient against central differences. Pixels are drawn near the
/// probed vertex's projection so the pair actually interacts. Texture values
/// within `step` of zero use a forward difference, because colors are clamped
/// at zero.
GradientCheckReport gradient_check(
    const TexturedMesh& mesh,
    const RenderConfig& config,
    int probes,
    std::uint64_t seed = 0,
    std::span<const double> yaws = kDefaultYaws,
    double step = 1e-3);

// |a - n| / max(|a|, |n|), with both below `floor` counted as agreement.
double relative_error(double analytic, double numeric, double floor = 1e-8);

} // namespace latentface
