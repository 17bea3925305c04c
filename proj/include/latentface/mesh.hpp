#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "latentface/generator.hpp"
#include "latentface/image.hpp"

namespace latentface {

using Face = std::array<int, 3>;
using VertexMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using UvMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

/// Grid connectivity over an H x W vertex lattice. Vertex (i, j) has index
/// i * W + j and uv (j / (W-1), i / (H-1)). Seams are left open.
struct MeshTopology {
  int height = 0;
  int width = 0;
  std::vector<Face> faces;
  UvMatrix uvs;

  static MeshTopology grid(int height, int width);
  int vertex_count() const { return height * width; }
};

struct TexturedMesh {
  VertexMatrix vertices;
  VertexMatrix normals;
  std::vector<Face> faces;
  UvMatrix uvs;
  Image texture;

  int vertex_count() const { return static_cast<int>(vertices.rows()); }
};

/// Lifts UV maps onto the grid: vertex (i,j) takes shape_map[i,j], the
/// normalized normal_map[i,j] and the grid uv. The texture is carried by
/// reference to the texture map.
TexturedMesh assemble_mesh(const UVMapSet& maps, const MeshTopology& topo);

struct MeshGradient {
  VertexMatrix vertices;
  VertexMatrix normals;
  Image texture;
};

/// Pulls a mesh-space gradient back onto the UV maps.
UVMapSet assemble_mesh_vjp(const UVMapSet& maps, const MeshGradient& grad);

enum class ViolationKind { index_out_of_range, non_finite_vertex, degenerate_face };

struct MeshViolation {
  ViolationKind kind;
  int index; // vertex index for non_finite_vertex, face index otherwise
  std::string message;
};

struct MeshReport {
  std::vector<MeshViolation> violations;
  int degenerate_faces = 0;

  bool ok() const { return violations.empty(); }
  int count(ViolationKind kind) const;
};

MeshReport validate_mesh(const TexturedMesh& mesh);

/// Writes `path` (.obj) plus a sibling .mtl and 8-bit .png texture with the
/// same stem. Rejects meshes with out-of-range indices or non-finite
/// coordinates before touching the filesystem.
void export_mesh(const TexturedMesh& mesh, const std::filesystem::path& path);

// Texel that a vertex samples (nearest), as a pixel offset into mesh.texture.
int vertex_texel(const TexturedMesh& mesh, int vertex);

} // namespace latentface
