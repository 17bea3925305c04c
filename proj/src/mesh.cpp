#include "latentface/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

#include "latentface/error.hpp"

namespace latentface {

MeshTopology MeshTopology::grid(int height, int width) {
  require(height >= 2 && width >= 2, "grid topology needs at least 2x2 vertices");
  MeshTopology topo;
  topo.height = height;
  topo.width = width;
  topo.faces.reserve(static_cast<std::size_t>(2) * (height - 1) * (width - 1));
  for (int i = 0; i + 1 < height; ++i) {
    for (int j = 0; j + 1 < width; ++j) {
      const int v00 = i * width + j;
      const int v01 = v00 + 1;
      const int v10 = v00 + width;
      const int v11 = v10 + 1;
      // Counter-clockwise seen from +z (rows grow downward in y).
      topo.faces.push_back({v00, v10, v01});
      topo.faces.push_back({v01, v10, v11});
    }
  }
  topo.uvs.resize(height * width, 2);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      topo.uvs(i * width + j, 0) = static_cast<double>(j) / (width - 1);
      topo.uvs(i * width + j, 1) = static_cast<double>(i) / (height - 1);
    }
  }
  return topo;
}

TexturedMesh assemble_mesh(const UVMapSet& maps, const MeshTopology& topo) {
  maps.validate();
  require(maps.height() == topo.height && maps.width() == topo.width,
          "assemble_mesh: topology grid " + std::to_string(topo.height) + "x" + std::to_string(topo.width) +
              " does not match maps " + std::to_string(maps.height()) + "x" + std::to_string(maps.width()));
  const int count = topo.vertex_count();
  TexturedMesh mesh;
  mesh.vertices.resize(count, 3);
  mesh.normals.resize(count, 3);
  for (int v = 0; v < count; ++v) {
    Eigen::Vector3d n;
    for (int k = 0; k < 3; ++k) {
      mesh.vertices(v, k) = maps.shape.pixels[3 * v + k];
      n[k] = maps.normal.pixels[3 * v + k];
    }
    const double len = n.norm();
    require<InvalidData>(len > 0.0, "normal map pixel " + std::to_string(v) + " is zero");
    mesh.normals.row(v) = (n / len).transpose();
  }
  mesh.faces = topo.faces;
  mesh.uvs = topo.uvs;
  mesh.texture = maps.texture;
  return mesh;
}

UVMapSet assemble_mesh_vjp(const UVMapSet& maps, const MeshGradient& grad) {
  const int count = maps.height() * maps.width();
  require(grad.vertices.rows() == count && grad.normals.rows() == count, "assemble_mesh_vjp: vertex count mismatch");
  require(grad.texture.same_shape(maps.texture), "assemble_mesh_vjp: texture gradient shape mismatch");
  UVMapSet out;
  out.shape = Image(maps.height(), maps.width(), 3);
  out.normal = Image(maps.height(), maps.width(), 3);
  out.texture = grad.texture;
  for (int v = 0; v < count; ++v) {
    Eigen::Vector3d raw;
    for (int k = 0; k < 3; ++k) {
      out.shape.pixels[3 * v + k] = grad.vertices(v, k);
      raw[k] = maps.normal.pixels[3 * v + k];
    }
    // d(n/|n|) = (I - n_hat n_hat^T) / |n|
    const double len = raw.norm();
    const Eigen::Vector3d unit = raw / len;
    const Eigen::Vector3d g = grad.normals.row(v).transpose();
    const Eigen::Vector3d g_raw = (g - unit * unit.dot(g)) / len;
    for (int k = 0; k < 3; ++k) {
      out.normal.pixels[3 * v + k] = g_raw[k];
    }
  }
  return out;
}

int MeshReport::count(ViolationKind kind) const {
  return static_cast<int>(
      std::count_if(violations.begin(), violations.end(), [kind](const MeshViolation& v) { return v.kind == kind; }));
}

MeshReport validate_mesh(const TexturedMesh& mesh) {
  MeshReport report;
  const int count = mesh.vertex_count();
  std::vector<bool> finite(count, true);
  for (int v = 0; v < count; ++v) {
    if (!mesh.vertices.row(v).allFinite()) {
      finite[v] = false;
      report.violations.push_back(
          {ViolationKind::non_finite_vertex, v, "vertex " + std::to_string(v) + " has a non-finite coordinate"});
    }
  }
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    const bool in_range = std::all_of(face.begin(), face.end(), [count](int idx) { return idx >= 0 && idx < count; });
    if (!in_range) {
      report.violations.push_back({ViolationKind::index_out_of_range, static_cast<int>(f),
                                   "face " + std::to_string(f) + " references a vertex outside [0, " +
                                       std::to_string(count) + ")"});
      continue;
    }
    if (!finite[face[0]] || !finite[face[1]] || !finite[face[2]]) {
      continue;
    }
    const Eigen::Vector3d a = mesh.vertices.row(face[0]).transpose();
    const Eigen::Vector3d b = mesh.vertices.row(face[1]).transpose();
    const Eigen::Vector3d c = mesh.vertices.row(face[2]).transpose();
    if ((b - a).cross(c - a).norm() <= 1e-12) {
      ++report.degenerate_faces;
      report.violations.push_back(
          {ViolationKind::degenerate_face, static_cast<int>(f), "face " + std::to_string(f) + " has zero area"});
    }
  }
  return report;
}

int vertex_texel(const TexturedMesh& mesh, int vertex) {
  const int th = mesh.texture.height;
  const int tw = mesh.texture.width;
  const double u = std::clamp(mesh.uvs(vertex, 0), 0.0, 1.0);
  const double v = std::clamp(mesh.uvs(vertex, 1), 0.0, 1.0);
  const int col = static_cast<int>(std::lround(u * (tw - 1)));
  const int row = static_cast<int>(std::lround(v * (th - 1)));
  return row * tw + col;
}

} // namespace latentface
