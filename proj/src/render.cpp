#include "latentface/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "latentface/error.hpp"
#include "latentface/rng.hpp"

namespace latentface {

void CameraParams::validate() const {
  require(image_size >= 8, "camera image size must be at least 8x8");
  require(distance > 0.0, "camera distance must be positive");
  require(view_extent > 0.0, "camera view extent must be positive");
}

void RenderConfig::validate() const {
  camera.validate();
  require(blur_radius >= 0.0, "blur_radius must be non-negative");
  require(faces_per_pixel >= 1, "faces_per_pixel must be at least 1");
  require(splat_sigma > 0.0, "splat_sigma must be positive");
  require(background_weight > 0.0, "background_weight must be positive");
  require(light_position.allFinite(), "light position must be finite");
}

Eigen::Vector3d shade(
    const Eigen::Vector3d& normal,
    const Eigen::Vector3d& base_color,
    const Eigen::Vector3d& light_position,
    const Eigen::Vector3d& point,
    double ambient) {
  const Eigen::Vector3d to_light = (light_position - point).normalized();
  const double diffuse = std::max(0.0, normal.dot(to_light));
  const double factor = std::min(1.0, diffuse + ambient);
  return (base_color * factor).cwiseMax(0.0).cwiseMin(1.0);
}

ShadeGradient shade_vjp(
    const Eigen::Vector3d& normal,
    const Eigen::Vector3d& base_color,
    const Eigen::Vector3d& light_position,
    const Eigen::Vector3d& point,
    double ambient,
    const Eigen::Vector3d& grad_color) {
  const Eigen::Vector3d offset = light_position - point;
  const double dist = offset.norm();
  const Eigen::Vector3d to_light = offset / dist;
  const double cosine = normal.dot(to_light);
  const double diffuse = std::max(0.0, cosine);
  const double factor = std::min(1.0, diffuse + ambient);

  ShadeGradient g{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
  double grad_factor = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    const double raw = base_color[ch] * factor;
    if (raw < 0.0 || raw > 1.0) {
      continue; // clamped
    }
    g.base_color[ch] = grad_color[ch] * factor;
    grad_factor += grad_color[ch] * base_color[ch];
  }
  if (cosine > 0.0 && diffuse + ambient < 1.0) {
    g.normal = grad_factor * to_light;
    // d<n, l>/dp with l = (L - p)/|L - p|
    g.point = -grad_factor * (normal - cosine * to_light) / dist;
  }
  return g;
}

Eigen::Matrix3d yaw_rotation(double yaw_degrees) {
  const double a = yaw_degrees * std::numbers::pi / 180.0;
  Eigen::Matrix3d r;
  r << std::cos(a), 0.0, std::sin(a), 0.0, 1.0, 0.0, -std::sin(a), 0.0, std::cos(a);
  return r;
}

TexturedMesh rotate_mesh(const TexturedMesh& mesh, double yaw_degrees) {
  const Eigen::Matrix3d r = yaw_rotation(yaw_degrees);
  TexturedMesh out = mesh;
  out.vertices = mesh.vertices * r.transpose();
  out.normals = mesh.normals * r.transpose();
  return out;
}

namespace {

kernels::SplatParams splat_params(const RenderConfig& config) {
  kernels::SplatParams params;
  params.size = config.camera.image_size;
  params.sigma = config.splat_sigma;
  params.background = config.background;
  params.background_weight = config.background_weight;
  return params;
}

// Model-space point to pixel coordinates (x = column, y = row).
Eigen::Vector2d project(const CameraParams& camera, const Eigen::Vector3d& p) {
  const double half = 0.5 * camera.image_size;
  const double scale = half / camera.view_extent;
  double k = 1.0;
  if (camera.projection == Projection::perspective) {
    require<InvalidData>(p.z() < camera.distance, "vertex behind the perspective camera");
    k = camera.distance / (camera.distance - p.z());
  }
  return {half + scale * k * p.x(), half - scale * k * p.y()};
}

// Transposed Jacobian of `project` applied to a screen-space gradient.
Eigen::Vector3d project_vjp(const CameraParams& camera, const Eigen::Vector3d& p, double gx, double gy) {
  const double scale = 0.5 * camera.image_size / camera.view_extent;
  if (camera.projection == Projection::orthographic) {
    return {gx * scale, -gy * scale, 0.0};
  }
  const double depth = camera.distance - p.z();
  const double k = camera.distance / depth;
  return {gx * scale * k, -gy * scale * k, (gx * scale * p.x() - gy * scale * p.y()) * k / depth};
}

} // namespace

RenderSet render_views(
    const TexturedMesh& mesh,
    std::span<const double> yaws,
    const RenderConfig& config,
    RenderTape* tape) {
  require(!yaws.empty(), "render_views: at least one view is required");
  config.validate();
  const int count = mesh.vertex_count();
  require(count > 0 && mesh.normals.rows() == count && mesh.uvs.rows() == count,
          "render_views: mesh attributes are inconsistent");
  require(mesh.texture.channels == 3 && mesh.texture.size() > 0, "render_views: mesh has no texture");
  require<InvalidData>(mesh.vertices.allFinite() && mesh.normals.allFinite(), "render_views: mesh is not finite");

  std::vector<int> texels(count);
  VertexMatrix base(count, 3);
  for (int v = 0; v < count; ++v) {
    texels[v] = vertex_texel(mesh, v);
    for (int ch = 0; ch < 3; ++ch) {
      base(v, ch) = mesh.texture.pixels[3 * static_cast<std::size_t>(texels[v]) + ch];
    }
  }

  const auto params = splat_params(config);
  const int size = config.camera.image_size;
  RenderSet result;
  if (tape) {
    tape->views.clear();
    tape->texels = texels;
    tape->texture_height = mesh.texture.height;
    tape->texture_width = mesh.texture.width;
    tape->config = config;
  }

  for (double yaw : yaws) {
    CameraParams camera = config.camera;
    camera.yaw_degrees = yaw;
    const Eigen::Matrix3d rotation = yaw_rotation(yaw);
    VertexMatrix positions = mesh.vertices * rotation.transpose();
    VertexMatrix normals = mesh.normals * rotation.transpose();

    std::vector<double> screen(2 * static_cast<std::size_t>(count));
    std::vector<double> colors(3 * static_cast<std::size_t>(count));
    for (int v = 0; v < count; ++v) {
      const Eigen::Vector3d p = positions.row(v).transpose();
      const Eigen::Vector2d s = project(camera, p);
      screen[2 * v] = s.x();
      screen[2 * v + 1] = s.y();
      const Eigen::Vector3d b = base.row(v).transpose();
      const Eigen::Vector3d c = config.shade_normals
          ? shade(normals.row(v).transpose(), b, config.light_position, p, config.ambient)
          : Eigen::Vector3d(b.cwiseMax(0.0).cwiseMin(1.0));
      for (int ch = 0; ch < 3; ++ch) {
        colors[3 * v + ch] = c[ch];
      }
    }

    Image image(size, size, 3);
    std::vector<double> denominator(static_cast<std::size_t>(size) * size);
    kernels::splat_forward(config.execution, params, screen, colors, image.pixels, denominator);

    result.images.push_back(image);
    result.cameras.push_back(camera);
    if (tape) {
      tape->views.push_back({camera, rotation, std::move(positions), std::move(normals), base, std::move(screen),
                             std::move(colors), std::move(denominator), std::move(image)});
    }
  }
  return result;
}

MeshGradient render_views_vjp(const RenderTape& tape, std::span<const Image> image_grads) {
  require(image_grads.size() == tape.views.size(), "render_views_vjp: one gradient image per view is required");
  require(!tape.views.empty(), "render_views_vjp: empty tape");
  const int count = static_cast<int>(tape.texels.size());
  const auto& config = tape.config;
  const auto params = splat_params(config);

  MeshGradient grad;
  grad.vertices = VertexMatrix::Zero(count, 3);
  grad.normals = VertexMatrix::Zero(count, 3);
  grad.texture = Image(tape.texture_height, tape.texture_width, 3);

  std::vector<double> g_screen(2 * static_cast<std::size_t>(count));
  std::vector<double> g_colors(3 * static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < tape.views.size(); ++i) {
    const auto& view = tape.views[i];
    require(image_grads[i].same_shape(view.image), "render_views_vjp: gradient image shape mismatch");
    kernels::splat_backward(config.execution, params, view.screen, view.colors, view.image.pixels, view.denominator,
                            image_grads[i].pixels, g_screen, g_colors);
    for (int v = 0; v < count; ++v) {
      const Eigen::Vector3d p = view.positions.row(v).transpose();
      const Eigen::Vector3d gc(g_colors[3 * v], g_colors[3 * v + 1], g_colors[3 * v + 2]);
      Eigen::Vector3d g_pos = project_vjp(view.camera, p, g_screen[2 * v], g_screen[2 * v + 1]);
      Eigen::Vector3d g_base;
      if (config.shade_normals) {
        const ShadeGradient sg = shade_vjp(view.normals.row(v).transpose(), view.base_colors.row(v).transpose(),
                                           config.light_position, p, config.ambient, gc);
        g_pos += sg.point;
        grad.normals.row(v) += (view.rotation.transpose() * sg.normal).transpose();
        g_base = sg.base_color;
      } else {
        for (int ch = 0; ch < 3; ++ch) {
          const double b = view.base_colors(v, ch);
          g_base[ch] = (b >= 0.0 && b <= 1.0) ? gc[ch] : 0.0;
        }
      }
      grad.vertices.row(v) += (view.rotation.transpose() * g_pos).transpose();
      for (int ch = 0; ch < 3; ++ch) {
        grad.texture.pixels[3 * static_cast<std::size_t>(tape.texels[v]) + ch] += g_base[ch];
      }
    }
  }
  return grad;
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale <= floor) {
    return 0.0;
  }
  return std::abs(analytic - numeric) / scale;
}

GradientCheckReport gradient_check(
    const TexturedMesh& mesh,
    const RenderConfig& config,
    int probes,
    std::uint64_t seed,
    std::span<const double> yaws,
    double step) {
  require(probes >= 1, "gradient_check: probes must be at least 1");
  require(step > 0.0, "gradient_check: step must be positive");

  RenderTape tape;
  const RenderSet base = render_views(mesh, yaws, config, &tape);
  const int size = config.camera.image_size;
  const int count = mesh.vertex_count();
  GaussianStream rng(mix_seed(seed, 0x67636b));
  auto pick = [&rng](int n) { return std::min(n - 1, static_cast<int>(rng.uniform() * n)); };

  GradientCheckReport report;
  for (int k = 0; k < probes; ++k) {
    GradientProbe probe{};
    probe.parameter = static_cast<GradientProbe::Parameter>(pick(3));
    const int vertex = pick(count);
    probe.channel = pick(3);
    probe.view = pick(static_cast<int>(yaws.size()));
    const auto& view = tape.views[probe.view];
    probe.row = std::clamp(static_cast<int>(std::floor(view.screen[2 * vertex + 1])) + pick(5) - 2, 0, size - 1);
    probe.col = std::clamp(static_cast<int>(std::floor(view.screen[2 * vertex])) + pick(5) - 2, 0, size - 1);
    probe.index = probe.parameter == GradientProbe::Parameter::texture ? tape.texels[vertex] : vertex;

    std::vector<Image> seeds;
    for (std::size_t i = 0; i < yaws.size(); ++i) {
      seeds.emplace_back(size, size, 3);
    }
    seeds[probe.view].at(probe.row, probe.col, probe.channel) = 1.0;
    const MeshGradient g = render_views_vjp(tape, seeds);

    // The probed pixel channel is fixed to the probe channel; parameters are
    // perturbed in the same channel/coordinate.
    double* slot = nullptr;
    TexturedMesh perturbed = mesh;
    switch (probe.parameter) {
      case GradientProbe::Parameter::vertex:
        probe.analytic = g.vertices(vertex, probe.channel);
        slot = &perturbed.vertices(vertex, probe.channel);
        break;
      case GradientProbe::Parameter::normal:
        probe.analytic = g.normals(vertex, probe.channel);
        slot = &perturbed.normals(vertex, probe.channel);
        break;
      case GradientProbe::Parameter::texture:
        probe.analytic = g.texture.pixels[3 * static_cast<std::size_t>(probe.index) + probe.channel];
        slot = &perturbed.texture.pixels[3 * static_cast<std::size_t>(probe.index) + probe.channel];
        break;
    }
    const double original = *slot;
    auto pixel_at = [&](double value) {
      *slot = value;
      const RenderSet r = render_views(perturbed, yaws, config);
      return r.images[probe.view].at(probe.row, probe.col, probe.channel);
    };
    if (probe.parameter == GradientProbe::Parameter::texture && original - step < 0.0 && original >= 0.0) {
      probe.numeric = (pixel_at(original + step) - base.images[probe.view].at(probe.row, probe.col, probe.channel)) / step;
    } else {
      probe.numeric = (pixel_at(original + step) - pixel_at(original - step)) / (2.0 * step);
    }
    probe.relative_error = relative_error(probe.analytic, probe.numeric);
    report.max_relative_error = std::max(report.max_relative_error, probe.relative_error);
    report.probes.push_back(probe);
  }
  return report;
}

} // namespace latentface
