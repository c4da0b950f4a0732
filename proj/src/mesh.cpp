#include "vem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace vem {

namespace {

Vec zero_vec(int n) { return Vec::Zero(n); }

Vec cross3(const Vec& a, const Vec& b) {
  Vec c(3);
  c << a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0];
  return c;
}

double cross2(const Vec& a, const Vec& b) { return a[0] * b[1] - a[1] * b[0]; }

double max_pairwise_distance(std::span<const Vec> pts) {
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, (pts[i] - pts[j]).norm());
  return d;
}

Vec average(std::span<const Vec> pts) {
  Vec c = zero_vec(static_cast<int>(pts.front().size()));
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

// Newell normal of a (planar) 3D loop; its direction follows the loop orientation.
Vec newell_normal(std::span<const Vec> loop) {
  Vec n = zero_vec(3);
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec& a = loop[i];
    const Vec& b = loop[(i + 1) % loop.size()];
    n[0] += (a[1] - b[1]) * (a[2] + b[2]);
    n[1] += (a[2] - b[2]) * (a[0] + b[0]);
    n[2] += (a[0] - b[0]) * (a[1] + b[1]);
  }
  return n;
}

// Gram-Schmidt on P e_1, P e_2, ... in coordinate order; first nonzero entry positive.
std::vector<Vec> canonical_basis(const Matrix& projector, int count) {
  const int n = static_cast<int>(projector.rows());
  std::vector<Vec> basis;
  for (int i = 0; i < n && static_cast<int>(basis.size()) < count; ++i) {
    Vec v = projector.col(i);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v -= v.dot(b) * b;
    const double len = v.norm();
    if (len < 1e-3) continue;
    v /= len;
    for (int c = 0; c < n; ++c) {
      if (std::abs(v[c]) > 1e-12) {
        if (v[c] < 0) v = -v;
        break;
      }
    }
    basis.push_back(v);
  }
  require(static_cast<int>(basis.size()) == count, ErrorCode::MeshGeometry,
          "frame construction: projector rank is too small");
  return basis;
}

// nu_{F,e}: in the tangent space of F, orthogonal to e, pointing away from x_F.
Vec relative_normal(const FaceFrame& outer, const FaceFrame& inner) {
  Vec d = inner.centroid - outer.centroid;
  Vec t = zero_vec(static_cast<int>(d.size()));
  for (const auto& tv : outer.tangents) t += d.dot(tv) * tv;
  for (const auto& tv : inner.tangents) t -= t.dot(tv) * tv;
  const double len = t.norm();
  require(len > 1e-12 * std::max(outer.diameter, 1e-300), ErrorCode::MeshGeometry,
          "face is not star-shaped with respect to its centroid");
  return t / len;
}

Simplex make_simplex(std::initializer_list<Vec> verts, double measure) {
  Simplex s;
  int i = 0;
  for (const auto& v : verts) s.vertices[i++] = v;
  s.dim = i - 1;
  s.measure = measure;
  return s;
}

struct PolygonGeometry {
  double area = 0.0;
  Vec centroid;
};

// Signed area (w.r.t. plane_normal in 3D, counterclockwise in 2D) and area centroid.
PolygonGeometry polygon_geometry(std::span<const Vec> loop, const Vec& plane_normal) {
  const Vec p0 = average(loop);
  PolygonGeometry g;
  g.centroid = zero_vec(static_cast<int>(p0.size()));
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec& a = loop[i];
    const Vec& b = loop[(i + 1) % loop.size()];
    const double ai = p0.size() == 2 ? 0.5 * cross2(a - p0, b - p0)
                                     : 0.5 * cross3(a - p0, b - p0).dot(plane_normal);
    g.area += ai;
    g.centroid += ai * (p0 + a + b) / 3.0;
  }
  if (g.area > 0) g.centroid /= g.area;
  return g;
}

}  // namespace

Matrix FaceFrame::tangent_projector() const {
  const int n = static_cast<int>(centroid.size());
  Matrix p = Matrix::Identity(n, n);
  for (const auto& nu : normals) p -= nu * nu.transpose();
  return p;
}

FaceFrame build_frame(std::span<const Vec> points, int ambient_dim, int codim) {
  require(!points.empty(), ErrorCode::MeshGeometry, "frame of an empty face");
  require(codim >= 1 && codim <= ambient_dim, ErrorCode::InvalidArgument, "invalid codimension");
  FaceFrame f;
  f.codim = codim;
  f.centroid = average(points);
  const int d = ambient_dim - codim;
  const Matrix identity = Matrix::Identity(ambient_dim, ambient_dim);
  if (d == 0) {
    f.measure = 1.0;
    f.diameter = 0.0;
    f.normals = canonical_basis(identity, ambient_dim);
    return f;
  }
  f.diameter = max_pairwise_distance(points);
  require(f.diameter > 0, ErrorCode::MeshGeometry, "degenerate face (zero diameter)");

  // Orthonormal spanning set of the affine hull, picking the largest residual each time.
  std::vector<Vec> span_basis;
  std::vector<Vec> residuals;
  for (std::size_t i = 1; i < points.size(); ++i) residuals.push_back(points[i] - points[0]);
  for (int t = 0; t < d; ++t) {
    int best = -1;
    double best_norm = 0.0;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
      const double nr = residuals[i].norm();
      if (nr > best_norm) {
        best_norm = nr;
        best = static_cast<int>(i);
      }
    }
    require(best >= 0 && best_norm > 1e-10 * f.diameter, ErrorCode::MeshGeometry,
            "rank-deficient face: vertices do not span the declared dimension");
    const Vec dir = residuals[best] / best_norm;
    span_basis.push_back(dir);
    for (auto& r : residuals) r -= r.dot(dir) * dir;
  }
  for (const auto& r : residuals)
    require(r.norm() <= 1e-8 * f.diameter, ErrorCode::MeshGeometry,
            "face vertices are not coplanar with the declared dimension");

  Matrix pt = Matrix::Zero(ambient_dim, ambient_dim);
  for (const auto& t : span_basis) pt += t * t.transpose();
  f.tangents = canonical_basis(pt, d);
  f.normals = canonical_basis(identity - pt, codim);
  return f;
}

std::vector<Simplex> fan_polygon(std::span<const Vec> loop, const Vec& center,
                                 const Vec& plane_normal) {
  const double diam = max_pairwise_distance(loop);
  std::vector<Simplex> fan;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec& a = loop[i];
    const Vec& b = loop[(i + 1) % loop.size()];
    const double area = center.size() == 2 ? 0.5 * cross2(a - center, b - center)
                                           : 0.5 * cross3(a - center, b - center).dot(plane_normal);
    require(area > 1e-14 * diam * diam, ErrorCode::MeshGeometry,
            "polygon is not star-shaped with respect to its centroid");
    fan.push_back(make_simplex({center, a, b}, area));
  }
  return fan;
}

int PolytopalMesh::num_faces(int codim) const {
  require(codim >= 1 && codim <= dim_, ErrorCode::InvalidArgument, "invalid codimension");
  return static_cast<int>(faces_[codim].size());
}

const Face& PolytopalMesh::face(int codim, int id) const {
  require(codim >= 1 && codim <= dim_, ErrorCode::InvalidArgument, "invalid codimension");
  return faces_[codim].at(id);
}

int PolytopalMesh::cell_face_sign(int cell, int face) const {
  for (const auto& cf : cells_.at(cell).faces)
    if (cf.face == face) return cf.sign;
  fail(ErrorCode::InvalidArgument, "face is not a facet of the cell");
}

Vec PolytopalMesh::outward_normal(int cell, int face) const {
  return cell_face_sign(cell, face) * faces_[1].at(face).frame.normals.front();
}

const Vec& PolytopalMesh::centroid(DomainRef d) const {
  return d.codim == 0 ? cells_.at(d.id).centroid : face(d).frame.centroid;
}

double PolytopalMesh::diameter(DomainRef d) const {
  return d.codim == 0 ? cells_.at(d.id).diameter : face(d).frame.diameter;
}

double PolytopalMesh::measure(DomainRef d) const {
  return d.codim == 0 ? cells_.at(d.id).measure : face(d).frame.measure;
}

std::span<const Simplex> PolytopalMesh::fan(DomainRef d) const {
  return d.codim == 0 ? std::span<const Simplex>(cells_.at(d.id).fan)
                      : std::span<const Simplex>(face(d).fan);
}

double PolytopalMesh::domain_measure() const {
  double total = 0.0;
  for (const auto& f : faces_[1]) {
    if (!f.boundary) continue;
    const int cell = f.parents.front();
    const Vec nu = outward_normal(cell, f.frame.id);
    total += f.frame.centroid.dot(nu) * f.frame.measure;
  }
  return total / dim_;
}

double PolytopalMesh::mesh_size() const {
  double h = 0.0;
  for (const auto& c : cells_) h = std::max(h, c.diameter);
  return h;
}

namespace {

Face make_vertex_face(const Vec& x, int n, int id) {
  Face v;
  const Vec pts[1] = {x};
  v.frame = build_frame(pts, n, n);
  v.frame.id = id;
  v.frame.centroid = x;
  v.vertices = {id};
  v.fan.push_back(make_simplex({x}, 1.0));
  return v;
}

Face make_edge_face(const std::vector<Vec>& verts, int a, int b, int n, int id) {
  Face e;
  const Vec pts[2] = {verts[a], verts[b]};
  e.frame = build_frame(pts, n, n - 1);
  e.frame.id = id;
  e.frame.centroid = 0.5 * (verts[a] + verts[b]);
  e.frame.measure = (verts[b] - verts[a]).norm();
  e.vertices = {a, b};
  e.fan.push_back(make_simplex({verts[a], verts[b]}, e.frame.measure));
  return e;
}

}  // namespace

PolytopalMesh PolytopalMesh::from_polygons(std::vector<Vec> vertices,
                                           const std::vector<std::vector<int>>& loops) {
  PolytopalMesh mesh;
  mesh.dim_ = 2;
  require(!vertices.empty() && !loops.empty(), ErrorCode::MeshFormat, "empty mesh");
  for (const auto& v : vertices)
    require(v.size() == 2, ErrorCode::MeshFormat, "2D mesh vertices must have 2 coordinates");
  mesh.vertices_ = std::move(vertices);
  const int nv = static_cast<int>(mesh.vertices_.size());

  for (int i = 0; i < nv; ++i) mesh.faces_[2].push_back(make_vertex_face(mesh.vertices_[i], 2, i));

  std::map<std::pair<int, int>, int> edge_ids;
  for (std::size_t c = 0; c < loops.size(); ++c) {
    const auto& loop = loops[c];
    require(loop.size() >= 3, ErrorCode::MeshFormat, "a 2D cell needs at least 3 vertices");
    for (int v : loop)
      require(v >= 0 && v < nv, ErrorCode::MeshFormat, "cell references an unknown vertex");
    Cell cell;
    cell.vertices = loop;
    std::vector<Vec> pts;
    for (int v : loop) pts.push_back(mesh.vertices_[v]);
    const PolygonGeometry g = polygon_geometry(pts, Vec());
    std::ostringstream where;
    where << "cell " << c << ": ";
    require(g.area > 0, ErrorCode::MeshGeometry,
            where.str() + "zero or negative area (loops must be counterclockwise)");
    cell.measure = g.area;
    cell.centroid = g.centroid;
    cell.diameter = max_pairwise_distance(pts);
    try {
      cell.fan = fan_polygon(pts, cell.centroid, Vec());
    } catch (const Error& e) {
      fail(e.code(), where.str() + e.what());
    }
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const int a = loop[i];
      const int b = loop[(i + 1) % loop.size()];
      require(a != b, ErrorCode::MeshFormat, where.str() + "repeated vertex");
      const auto key = std::minmax(a, b);
      auto it = edge_ids.find(key);
      if (it == edge_ids.end()) {
        const int id = static_cast<int>(mesh.faces_[1].size());
        mesh.faces_[1].push_back(make_edge_face(mesh.vertices_, a, b, 2, id));
        it = edge_ids.emplace(key, id).first;
      }
      const Vec d = mesh.vertices_[b] - mesh.vertices_[a];
      Vec outward(2);
      outward << d[1], -d[0];
      const Vec& nu = mesh.faces_[1][it->second].frame.normals.front();
      cell.faces.push_back({it->second, outward.dot(nu) > 0 ? 1 : -1});
    }
    mesh.cells_.push_back(std::move(cell));
  }

  // Edge boundaries are its two endpoints.
  for (auto& e : mesh.faces_[1]) {
    for (int v : e.vertices)
      e.subfaces.push_back({v, relative_normal(e.frame, mesh.faces_[2][v].frame)});
  }
  mesh.finalize();
  return mesh;
}

PolytopalMesh PolytopalMesh::from_polyhedra(std::vector<Vec> vertices,
                                            const std::vector<std::vector<int>>& faces,
                                            const std::vector<PolyhedronSpec>& cells) {
  PolytopalMesh mesh;
  mesh.dim_ = 3;
  require(!vertices.empty() && !faces.empty() && !cells.empty(), ErrorCode::MeshFormat,
          "empty mesh");
  for (const auto& v : vertices)
    require(v.size() == 3, ErrorCode::MeshFormat, "3D mesh vertices must have 3 coordinates");
  mesh.vertices_ = std::move(vertices);
  const int nv = static_cast<int>(mesh.vertices_.size());
  for (int i = 0; i < nv; ++i) mesh.faces_[3].push_back(make_vertex_face(mesh.vertices_[i], 3, i));

  std::map<std::pair<int, int>, int> edge_ids;
  std::vector<Vec> loop_normals;
  for (std::size_t fi = 0; fi < faces.size(); ++fi) {
    const auto& loop = faces[fi];
    std::ostringstream where;
    where << "face " << fi << ": ";
    require(loop.size() >= 3, ErrorCode::MeshFormat, where.str() + "needs at least 3 vertices");
    for (int v : loop)
      require(v >= 0 && v < nv, ErrorCode::MeshFormat, where.str() + "unknown vertex");
    std::vector<Vec> pts;
    for (int v : loop) pts.push_back(mesh.vertices_[v]);
    Face f;
    try {
      f.frame = build_frame(pts, 3, 1);
    } catch (const Error& e) {
      fail(e.code(), where.str() + e.what());
    }
    f.frame.id = static_cast<int>(fi);
    Vec nl = newell_normal(pts);
    require(nl.norm() > 0, ErrorCode::MeshGeometry, where.str() + "zero area");
    nl.normalize();
    const PolygonGeometry g = polygon_geometry(pts, nl);
    require(g.area > 0, ErrorCode::MeshGeometry, where.str() + "zero area");
    f.frame.measure = g.area;
    f.frame.centroid = g.centroid;
    try {
      f.fan = fan_polygon(pts, g.centroid, nl);
    } catch (const Error& e) {
      fail(e.code(), where.str() + e.what());
    }
    f.vertices = loop;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const int a = loop[i];
      const int b = loop[(i + 1) % loop.size()];
      const auto key = std::minmax(a, b);
      auto it = edge_ids.find(key);
      if (it == edge_ids.end()) {
        const int id = static_cast<int>(mesh.faces_[2].size());
        mesh.faces_[2].push_back(make_edge_face(mesh.vertices_, a, b, 3, id));
        it = edge_ids.emplace(key, id).first;
      }
      f.subfaces.push_back({it->second, Vec()});
    }
    loop_normals.push_back(nl);
    mesh.faces_[1].push_back(std::move(f));
  }
  for (auto& f : mesh.faces_[1])
    for (auto& s : f.subfaces) s.normal = relative_normal(f.frame, mesh.faces_[2][s.id].frame);
  for (auto& e : mesh.faces_[2])
    for (int v : e.vertices)
      e.subfaces.push_back({v, relative_normal(e.frame, mesh.faces_[3][v].frame)});

  const int nf = static_cast<int>(faces.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& spec = cells[c];
    std::ostringstream where;
    where << "cell " << c << ": ";
    require(spec.faces.size() >= 4 && spec.faces.size() == spec.signs.size(),
            ErrorCode::MeshFormat, where.str() + "needs >= 4 faces with one sign each");
    Cell cell;
    std::set<int> verts;
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < spec.faces.size(); ++i) {
      const int fid = spec.faces[i];
      require(fid >= 0 && fid < nf, ErrorCode::MeshFormat, where.str() + "unknown face");
      require(spec.signs[i] == 1 || spec.signs[i] == -1, ErrorCode::MeshFormat,
              where.str() + "orientation signs must be +1 or -1");
      for (int v : mesh.faces_[1][fid].vertices) verts.insert(v);
      const Vec outward = spec.signs[i] * loop_normals[fid];
      cell.faces.push_back(
          {fid, outward.dot(mesh.faces_[1][fid].frame.normals.front()) > 0 ? 1 : -1});
    }
    cell.vertices.assign(verts.begin(), verts.end());
    for (int v : cell.vertices) pts.push_back(mesh.vertices_[v]);
    cell.diameter = max_pairwise_distance(pts);

    // Volume and centroid from tetrahedra joined to the vertex average.
    auto tet_volume = [&](const Vec& apex, std::size_t i, const Simplex& tri) {
      const Vec& cf = tri.vertices[0];
      return spec.signs[i] * cross3(tri.vertices[1] - cf, tri.vertices[2] - cf).dot(cf - apex) / 6.0;
    };
    const Vec p0 = average(pts);
    double volume = 0.0;
    Vec centroid = zero_vec(3);
    for (std::size_t i = 0; i < spec.faces.size(); ++i) {
      for (const auto& tri : mesh.faces_[1][spec.faces[i]].fan) {
        const double v = tet_volume(p0, i, tri);
        volume += v;
        centroid += v * (p0 + tri.vertices[0] + tri.vertices[1] + tri.vertices[2]) / 4.0;
      }
    }
    require(volume > 0, ErrorCode::MeshGeometry,
            where.str() + "zero or negative volume (check orientation signs)");
    cell.measure = volume;
    cell.centroid = centroid / volume;
    const double tol = 1e-14 * std::pow(cell.diameter, 3);
    for (std::size_t i = 0; i < spec.faces.size(); ++i) {
      for (const auto& tri : mesh.faces_[1][spec.faces[i]].fan) {
        const double v = tet_volume(cell.centroid, i, tri);
        require(v > tol, ErrorCode::MeshGeometry,
                where.str() + "not star-shaped with respect to its centroid");
        Simplex s = spec.signs[i] > 0
                        ? make_simplex({cell.centroid, tri.vertices[0], tri.vertices[1], tri.vertices[2]}, v)
                        : make_simplex({cell.centroid, tri.vertices[0], tri.vertices[2], tri.vertices[1]}, v);
        cell.fan.push_back(s);
      }
    }
    mesh.cells_.push_back(std::move(cell));
  }
  mesh.finalize();
  return mesh;
}

void PolytopalMesh::finalize() {
  const int n = dim_;
  // Cell lattice: F^1 from the cell, deeper levels by closure.
  for (auto& cell : cells_) {
    std::set<int> level;
    for (const auto& cf : cell.faces) level.insert(cf.face);
    require(level.size() == cell.faces.size(), ErrorCode::MeshFormat, "cell repeats a face");
    cell.lattice[1].assign(level.begin(), level.end());
    for (int r = 2; r <= n; ++r) {
      std::set<int> next;
      for (int f : cell.lattice[r - 1])
        for (const auto& s : faces_[r - 1][f].subfaces) next.insert(s.id);
      cell.lattice[r].assign(next.begin(), next.end());
    }
  }

  // Parents: cells for facets, containing faces otherwise.
  for (int c = 0; c < static_cast<int>(cells_.size()); ++c)
    for (const auto& cf : cells_[c].faces) faces_[1][cf.face].parents.push_back(c);
  for (int r = 1; r < n; ++r)
    for (const auto& f : faces_[r])
      for (const auto& s : f.subfaces) faces_[r + 1][s.id].parents.push_back(f.frame.id);

  for (auto& f : faces_[1]) {
    std::ostringstream where;
    where << "facet " << f.frame.id << ": ";
    require(!f.parents.empty(), ErrorCode::MeshFormat, where.str() + "not used by any cell");
    require(f.parents.size() <= 2, ErrorCode::MeshGeometry,
            where.str() + "non-manifold incidence (more than two cells)");
    f.boundary = f.parents.size() == 1;
    if (f.parents.size() == 2) {
      const int s0 = cell_face_sign(f.parents[0], f.frame.id);
      const int s1 = cell_face_sign(f.parents[1], f.frame.id);
      require(s0 == -s1, ErrorCode::MeshGeometry,
              where.str() + "both incident cells lie on the same side (overlap or bad orientation)");
    }
  }
  for (int r = 2; r <= n; ++r) {
    for (auto& f : faces_[r]) {
      require(!f.parents.empty(), ErrorCode::MeshFormat, "unreferenced vertex or edge");
      f.boundary = std::any_of(f.parents.begin(), f.parents.end(),
                               [&](int p) { return faces_[r - 1][p].boundary; });
    }
  }

  double total = 0.0;
  for (const auto& c : cells_) total += c.measure;
  const double omega = domain_measure();
  require(std::abs(total - omega) <= 1e-10 * std::abs(omega), ErrorCode::MeshGeometry,
          "cells overlap or leave gaps (sum of cell measures differs from |Omega|)");
}

}  // namespace vem
