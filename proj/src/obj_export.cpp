#include <cstdio>
#include <fstream>

#include "latentface/error.hpp"
#include "latentface/image_io.hpp"
#include "latentface/mesh.hpp"

namespace latentface {

namespace {

std::string fmt3(const char* tag, double a, double b, double c) {
  char line[128];
  std::snprintf(line, sizeof(line), "%s %.9g %.9g %.9g\n", tag, a, b, c);
  return line;
}

} // namespace

void export_mesh(const TexturedMesh& mesh, const std::filesystem::path& path) {
  const MeshReport report = validate_mesh(mesh);
  for (const auto& violation : report.violations) {
    if (violation.kind != ViolationKind::degenerate_face) {
      throw InvalidData("export_mesh: " + violation.message);
    }
  }
  require(mesh.normals.rows() == mesh.vertices.rows() && mesh.uvs.rows() == mesh.vertices.rows(),
          "export_mesh: per-vertex attribute counts differ");

  const std::string stem = path.stem().string();
  const auto dir = path.parent_path();
  const auto mtl_path = dir / (stem + ".mtl");
  const auto png_path = dir / (stem + ".png");

  std::string obj;
  obj.reserve(static_cast<std::size_t>(mesh.vertex_count()) * 96 + mesh.faces.size() * 48);
  obj += "# latentface textured mesh\n";
  obj += "mtllib " + mtl_path.filename().string() + "\n";
  obj += "usemtl avatar\n";
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    obj += fmt3("v", mesh.vertices(v, 0), mesh.vertices(v, 1), mesh.vertices(v, 2));
  }
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    char line[96];
    // OBJ texture space has its origin at the bottom-left; ours is top-left.
    std::snprintf(line, sizeof(line), "vt %.9g %.9g\n", mesh.uvs(v, 0), 1.0 - mesh.uvs(v, 1));
    obj += line;
  }
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    obj += fmt3("vn", mesh.normals(v, 0), mesh.normals(v, 1), mesh.normals(v, 2));
  }
  for (const auto& face : mesh.faces) {
    char line[128];
    std::snprintf(line, sizeof(line), "f %d/%d/%d %d/%d/%d %d/%d/%d\n", face[0] + 1, face[0] + 1, face[0] + 1,
                  face[1] + 1, face[1] + 1, face[1] + 1, face[2] + 1, face[2] + 1, face[2] + 1);
    obj += line;
  }

  std::ofstream out(path, std::ios::binary);
  require<IoError>(static_cast<bool>(out), "cannot write " + path.string());
  out << obj;
  require<IoError>(static_cast<bool>(out), "write failed for " + path.string());

  std::ofstream mtl(mtl_path, std::ios::binary);
  require<IoError>(static_cast<bool>(mtl), "cannot write " + mtl_path.string());
  mtl << "newmtl avatar\nKa 1 1 1\nKd 1 1 1\nKs 0 0 0\nd 1\nillum 1\nmap_Kd " << png_path.filename().string() << "\n";
  require<IoError>(static_cast<bool>(mtl), "write failed for " + mtl_path.string());

  write_png(png_path, mesh.texture);
}

} // namespace latentface
