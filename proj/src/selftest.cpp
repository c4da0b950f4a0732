#include "vem/harness.hpp"

#include <cmath>
#include <ostream>
#include <random>

namespace vem {

namespace {

Poly random_poly(std::mt19937_64& rng, const PolytopalMesh& mesh, int cell, int degree) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Cell& K = mesh.cell(cell);
  Poly p = Poly::zero(mesh.dim(), degree, K.centroid, K.diameter);
  for (int i = 0; i < p.coeffs.size(); ++i) p.coeffs[i] = u(rng);
  return p;
}

double green_residual(std::mt19937_64& rng, const PolytopalMesh& mesh, int m, int k) {
  const Poly q = random_poly(rng, mesh, 0, k);
  const PolyFunction v(random_poly(rng, mesh, 0, k + 2));
  const FunctionalList list = element_green_decompose(mesh, 0, q, m);
  const double assembled = pair_with(mesh, 0, list, v, 2 * k + 4);
  const QuadratureSet quad = quadrature(mesh, DomainRef{0, 0}, 2 * k + 4);
  const TensorPoly gq = nabla_m(q, m);
  const TensorPoly gv = nabla_m(v.poly(), m);
  double direct = 0.0;
  for (int i = 0; i < quad.size(); ++i)
    direct += quad.weights[i] * gq.evaluate(quad.points[i]).dot(gv.evaluate(quad.points[i]));
  return std::abs(assembled - direct) / std::max(std::abs(direct), 1e-300);
}

}  // namespace

int run_selftest(std::ostream& out) {
  int failures = 0;
  auto report = [&](bool ok, const std::string& name, double value) {
    out << (ok ? "PASS " : "FAIL ") << name << " (" << value << ")\n";
    if (!ok) ++failures;
  };
  std::mt19937_64 rng(7);

  {
    double worst = 0.0;
    for (int d = 0; d <= 3; ++d) {
      const QuadratureRule& r = grundmann_moller(d, 9);
      double s = 0.0;
      for (double w : r.weights) s += w;
      double fact = 1.0;
      for (int i = 2; i <= d; ++i) fact *= i;
      worst = std::max(worst, std::abs(s * fact - 1.0));
    }
    report(worst <= 1e-13, "quadrature weights sum to the simplex volume", worst);
  }
  {
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      worst = std::max(worst, green_residual(rng, random_polygon(rng, 5), 1, 3));
      worst = std::max(worst, green_residual(rng, random_polygon(rng, 6), 2, 4));
      worst = std::max(worst, green_residual(rng, random_polyhedron(rng, trial % 4), 2, 3));
    }
    report(worst <= 1e-9, "generalized Green identity on random polytopes", worst);
  }
  {
    double worst = 0.0;
    const PolytopalMesh mesh = generate_mesh(MeshFamily::PolygonHex, 1);
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const ElementOperators ops = build_element(mesh, c, 2, 3);
      worst = std::max(worst, (ops.Pi_dof * ops.D - ops.D).cwiseAbs().maxCoeff());
    }
    report(worst <= 1e-9, "projector reproduces P_k (m=2, k=3, polygon-hex)", worst);
  }
  {
    double worst = 0.0;
    const PolytopalMesh mesh = random_polygon(rng, 5);
    const ElementOperators ops = build_element(mesh, 0, 2, 4);
    const Matrix consistency = ops.D.transpose() * ops.A * ops.D - ops.G_true;
    worst = consistency.cwiseAbs().maxCoeff() / std::max(1.0, ops.G_true.cwiseAbs().maxCoeff());
    report(worst <= 1e-9, "k-consistency (m=2, k=4, pentagon)", worst);
  }
  {
    bool ok = load_regime(1, 1) == LoadRegime::Projection && load_regime(1, 2) == LoadRegime::QkMinus2m &&
              load_regime(2, 3) == LoadRegime::Projection && load_regime(2, 4) == LoadRegime::QmMinus1 &&
              load_regime(2, 5) == LoadRegime::QkMinus2m && load_regime(3, 7) == LoadRegime::QmMinus1;
    report(ok, "load regime table", ok ? 0.0 : 1.0);
  }
  return failures;
}

}  // namespace vem
