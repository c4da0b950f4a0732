#pragma once

#include "vem/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace vem {

/// A d-simplex embedded in R^n with positive measure.
struct Simplex {
  std::array<Vec, kMaxDim + 1> vertices;
  int dim = 0;
  double measure = 0.0;
};

/// Geometry and the global normal/tangent frame of a face of codimension r.
///
/// Normals span the normal space of the affine hull; tangents span the hull
/// itself. Both are orthonormal and built deterministically (Gram-Schmidt on
/// the projected canonical axes, first nonzero component positive), so every
/// cell sharing the face sees the same frame. Vertices have measure 1, no
/// tangents, and the canonical axes as normals.
struct FaceFrame {
  int id = -1;
  int codim = 0;
  Vec centroid;
  double diameter = 0.0;
  double measure = 0.0;
  std::vector<Vec> tangents;
  std::vector<Vec> normals;

  /// I - sum_i nu_i nu_i^T, the orthogonal projector onto the tangent space.
  [[nodiscard]] Matrix tangent_projector() const;
};

/// A codim-(r+1) face on the boundary of a codim-r face, with the unit normal
/// nu_{F,e} lying in the tangent space of F and pointing out of F across e.
struct SubFace {
  int id = -1;
  Vec normal;
};

struct Face {
  FaceFrame frame;
  std::vector<int> vertices;   // ordered loop for polygons, endpoints for edges
  std::vector<SubFace> subfaces;
  std::vector<int> parents;    // codim r-1 faces containing this one; cells when r = 1
  bool boundary = false;
  std::vector<Simplex> fan;
};

/// A codim-1 face of a cell; nu_{K,F} = sign * nu_{F,1}.
struct CellFace {
  int face = -1;
  int sign = 1;
};

struct Cell {
  std::vector<int> vertices;
  std::vector<CellFace> faces;
  /// lattice[j] = F^j(K), sorted face ids of codimension j (index 0 unused).
  std::array<std::vector<int>, kMaxDim + 1> lattice;
  Vec centroid;
  double diameter = 0.0;
  double measure = 0.0;
  std::vector<Simplex> fan;
};

/// 3D cell input: codim-1 face ids and orientation signs (+1 when the face's
/// vertex loop is counterclockwise seen from outside the cell).
struct PolyhedronSpec {
  std::vector<int> faces;
  std::vector<int> signs;
};

/// Polytopal mesh with the full face lattice F^r, r = 1..n.
///
/// Immutable after construction; every query is const.
class PolytopalMesh {
 public:
  /// 2D mesh from counterclockwise vertex loops.
  static PolytopalMesh from_polygons(std::vector<Vec> vertices,
                                     const std::vector<std::vector<int>>& loops);

  /// 3D mesh from polygonal faces (vertex loops) and cells referencing them.
  static PolytopalMesh from_polyhedra(std::vector<Vec> vertices,
                                      const std::vector<std::vector<int>>& faces,
                                      const std::vector<PolyhedronSpec>& cells);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const std::vector<Vec>& vertices() const { return vertices_; }

  [[nodiscard]] int num_cells() const { return static_cast<int>(cells_.size()); }
  [[nodiscard]] const Cell& cell(int id) const { return cells_.at(id); }
  [[nodiscard]] std::span<const Cell> cells() const { return cells_; }

  [[nodiscard]] int num_faces(int codim) const;
  [[nodiscard]] const Face& face(int codim, int id) const;
  [[nodiscard]] const Face& face(DomainRef ref) const { return face(ref.codim, ref.id); }

  /// Sign sigma_{K,F} of a codim-1 face in a cell; throws if F is not a face of K.
  [[nodiscard]] int cell_face_sign(int cell, int face) const;
  /// nu_{K,F}, the unit outward normal of cell K on its codim-1 face F.
  [[nodiscard]] Vec outward_normal(int cell, int face) const;

  // Uniform access for cells (codim 0) and faces.
  [[nodiscard]] const Vec& centroid(DomainRef d) const;
  [[nodiscard]] double diameter(DomainRef d) const;
  [[nodiscard]] double measure(DomainRef d) const;
  [[nodiscard]] int intrinsic_dim(DomainRef d) const { return dim_ - d.codim; }
  [[nodiscard]] std::span<const Simplex> fan(DomainRef d) const;

  /// |Omega| from the boundary faces via the divergence theorem.
  [[nodiscard]] double domain_measure() const;
  /// Largest cell diameter.
  [[nodiscard]] double mesh_size() const;

 private:
  PolytopalMesh() = default;
  void finalize();

  int dim_ = 0;
  std::vector<Vec> vertices_;
  std::vector<Cell> cells_;
  std::array<std::vector<Face>, kMaxDim + 1> faces_;  // faces_[r], r = 1..dim_
};

// Construction steps, exposed for testing.

/// Frame of a face of codimension `codim` spanned by `points` in R^n.
/// Throws MeshGeometry when the points are rank-deficient or not coplanar.
FaceFrame build_frame(std::span<const Vec> points, int ambient_dim, int codim);

/// Fan decomposition of a polygon loop (2D cell or 3D face) from `center`.
/// `plane_normal` orients the loop in 3D and is ignored in 2D. Throws
/// MeshGeometry if any triangle has non-positive orientation.
std::vector<Simplex> fan_polygon(std::span<const Vec> loop, const Vec& center,
                                 const Vec& plane_normal);

/// Mesh file IO (JSON).
PolytopalMesh load_mesh(const std::string& path);
PolytopalMesh parse_mesh(const std::string& json_text);
std::string mesh_to_json(const PolytopalMesh& mesh);

}  // namespace vem
