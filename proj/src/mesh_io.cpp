#include "vem/mesh.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace vem {

namespace {

using nlohmann::json;

Vec read_point(const json& p, int n) {
  require(p.is_array() && static_cast<int>(p.size()) == n, ErrorCode::MeshFormat,
          "vertex must be an array of " + std::to_string(n) + " numbers");
  Vec v(n);
  for (int i = 0; i < n; ++i) {
    require(p[i].is_number(), ErrorCode::MeshFormat, "vertex coordinate is not a number");
    v[i] = p[i].get<double>();
  }
  return v;
}

std::vector<int> read_indices(const json& a, const char* what) {
  require(a.is_array(), ErrorCode::MeshFormat, std::string(what) + " must be an array of indices");
  std::vector<int> out;
  for (const auto& x : a) {
    require(x.is_number_integer(), ErrorCode::MeshFormat, std::string(what) + " entries must be integers");
    out.push_back(x.get<int>());
  }
  return out;
}

}  // namespace

PolytopalMesh parse_mesh(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::MeshFormat, std::string("mesh file is not valid JSON: ") + e.what());
  }
  require(doc.is_object(), ErrorCode::MeshFormat, "mesh file must hold a JSON object");
  require(doc.contains("dimension") && doc["dimension"].is_number_integer(), ErrorCode::MeshFormat,
          "missing integer field 'dimension'");
  const int n = doc["dimension"].get<int>();
  require(n == 2 || n == 3, ErrorCode::MeshFormat, "dimension must be 2 or 3");
  require(doc.contains("vertices") && doc["vertices"].is_array(), ErrorCode::MeshFormat,
          "missing array field 'vertices'");
  require(doc.contains("cells") && doc["cells"].is_array(), ErrorCode::MeshFormat,
          "missing array field 'cells'");
  std::vector<Vec> vertices;
  for (const auto& p : doc["vertices"]) vertices.push_back(read_point(p, n));

  if (n == 2) {
    std::vector<std::vector<int>> loops;
    for (const auto& c : doc["cells"]) loops.push_back(read_indices(c, "2D cell"));
    return PolytopalMesh::from_polygons(std::move(vertices), loops);
  }
  require(doc.contains("faces") && doc["faces"].is_array(), ErrorCode::MeshFormat,
          "3D meshes need an array field 'faces'");
  std::vector<std::vector<int>> faces;
  for (const auto& f : doc["faces"]) faces.push_back(read_indices(f, "face"));
  std::vector<PolyhedronSpec> cells;
  for (const auto& c : doc["cells"]) {
    require(c.is_object() && c.contains("faces") && c.contains("signs"), ErrorCode::MeshFormat,
            "3D cells must be objects with 'faces' and 'signs'");
    cells.push_back({read_indices(c["faces"], "cell faces"), read_indices(c["signs"], "cell signs")});
  }
  return PolytopalMesh::from_polyhedra(std::move(vertices), faces, cells);
}

PolytopalMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open mesh file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_mesh(buf.str());
}

std::string mesh_to_json(const PolytopalMesh& mesh) {
  json doc;
  const int n = mesh.dim();
  doc["dimension"] = n;
  doc["vertices"] = json::array();
  for (const auto& v : mesh.vertices()) doc["vertices"].push_back(std::vector<double>(v.begin(), v.end()));
  doc["cells"] = json::array();
  if (n == 2) {
    for (const auto& c : mesh.cells()) doc["cells"].push_back(c.vertices);
    return doc.dump();
  }
  doc["faces"] = json::array();
  std::vector<Vec> loop_normals;
  for (int f = 0; f < mesh.num_faces(1); ++f) {
    const auto& loop = mesh.face(1, f).vertices;
    doc["faces"].push_back(loop);
    Vec nl = Vec::Zero(3);
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Vec& a = mesh.vertices()[loop[i]];
      const Vec& b = mesh.vertices()[loop[(i + 1) % loop.size()]];
      nl[0] += (a[1] - b[1]) * (a[2] + b[2]);
      nl[1] += (a[2] - b[2]) * (a[0] + b[0]);
      nl[2] += (a[0] - b[0]) * (a[1] + b[1]);
    }
    loop_normals.push_back(nl);
  }
  for (int c = 0; c < mesh.num_cells(); ++c) {
    std::vector<int> faces, signs;
    for (const auto& cf : mesh.cell(c).faces) {
      faces.push_back(cf.face);
      signs.push_back(mesh.outward_normal(c, cf.face).dot(loop_normals[cf.face]) > 0 ? 1 : -1);
    }
    doc["cells"].push_back({{"faces", faces}, {"signs", signs}});
  }
  return doc.dump();
}

}  // namespace vem
