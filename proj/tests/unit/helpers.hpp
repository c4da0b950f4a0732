#pragma once

#include "vem/harness.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace vem::testing {

inline Vec v2(double x, double y) {
  Vec p(2);
  p << x, y;
  return p;
}

inline Vec v3(double x, double y, double z) {
  Vec p(3);
  p << x, y, z;
  return p;
}

/// Unit square cut along the diagonal (0,0)-(1,1).
inline PolytopalMesh two_triangles() {
  return PolytopalMesh::from_polygons({v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1)}, {{0, 1, 2}, {0, 2, 3}});
}

inline PolytopalMesh unit_square() {
  return PolytopalMesh::from_polygons({v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1)}, {{0, 1, 2, 3}});
}

inline PolytopalMesh regular_polygon(int sides, double radius = 1.0, double phase = 0.3) {
  std::vector<Vec> pts;
  std::vector<int> loop;
  for (int i = 0; i < sides; ++i) {
    const double t = phase + 2.0 * std::numbers::pi * i / sides;
    pts.push_back(v2(radius * std::cos(t), radius * std::sin(t)));
    loop.push_back(i);
  }
  return PolytopalMesh::from_polygons(pts, {loop});
}

inline PolytopalMesh unit_cube() { return generate_mesh(MeshFamily::HexUniform, 0); }

inline Poly random_poly(std::mt19937_64& rng, int nvars, int degree, const Vec& center, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Poly p = Poly::zero(nvars, degree, center, scale);
  for (int i = 0; i < p.coeffs.size(); ++i) p.coeffs[i] = u(rng);
  return p;
}

inline Poly random_cell_poly(std::mt19937_64& rng, const PolytopalMesh& mesh, int cell, int degree) {
  const Cell& K = mesh.cell(cell);
  return random_poly(rng, mesh.dim(), degree, K.centroid, K.diameter);
}

/// (grad^m p, grad^m q)_K by cell quadrature over all n^m tensor components.
inline double gram_by_quadrature(const PolytopalMesh& mesh, int cell, const Poly& p, const Poly& q, int m) {
  const TensorPoly a = nabla_m(p, m);
  const TensorPoly b = nabla_m(q, m);
  const QuadratureSet quad = quadrature(mesh, DomainRef{0, cell}, p.degree + q.degree + 2);
  double s = 0.0;
  for (int i = 0; i < quad.size(); ++i) s += quad.weights[i] * a.evaluate(quad.points[i]).dot(b.evaluate(quad.points[i]));
  return s;
}

}  // namespace vem::testing
