#include "helpers.hpp"

#include <gtest/gtest.h>

using namespace vem;
using namespace vem::testing;

namespace {

/// Global dof vector of the interpolant of w, assembled cell by cell; shared
/// dofs must agree between neighbours.
Vector interpolate(const PolytopalMesh& mesh, const GlobalDofMap& map, const std::vector<ElementOperators>& ops,
                   const SmoothFunction& w, int exactness) {
  Vector g = Vector::Constant(map.num_global(), std::numeric_limits<double>::quiet_NaN());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Vector local = dof_values(mesh, ops[c].dofs, w, exactness);
    for (int i = 0; i < local.size(); ++i) {
      double& slot = g[map.local_to_global[c][i]];
      if (!std::isnan(slot)) EXPECT_NEAR(slot, local[i], 1e-10 * std::max(1.0, std::abs(local[i])));
      slot = local[i];
    }
  }
  return g;
}

Vector free_part(const GlobalDofMap& map, const Vector& global) {
  Vector out(map.num_free());
  for (int i = 0; i < map.num_global(); ++i)
    if (map.free_index[i] >= 0) out[map.free_index[i]] = global[i];
  return out;
}

struct Zero final : SmoothFunction {
  double derivative(const Vec&, const MultiIndex&) const override { return 0.0; }
};

}  // namespace

TEST(DofMap, TwoTrianglesCrouzeixRaviart) {
  const PolytopalMesh mesh = two_triangles();
  const GlobalDofMap map = build_dof_map(mesh, 1, 1);
  EXPECT_EQ(map.num_global(), 5);
  EXPECT_EQ(map.num_free(), 1);
  int boundary = 0;
  for (int i = 0; i < map.num_global(); ++i) boundary += map.constrained[i];
  EXPECT_EQ(boundary, 4);
  // The free dof is the shared diagonal, seen by both cells.
  const int diag = static_cast<int>(std::find(map.free_index.begin(), map.free_index.end(), 0) - map.free_index.begin());
  for (int c = 0; c < 2; ++c)
    EXPECT_EQ(std::count(map.local_to_global[c].begin(), map.local_to_global[c].end(), diag), 1);
}

TEST(DofMap, TwoTrianglesMorley) {
  // Five edge normal moments plus one value per vertex of the square.
  const GlobalDofMap map = build_dof_map(two_triangles(), 2, 2);
  EXPECT_EQ(map.num_global(), 5 + 4);
  EXPECT_EQ(map.num_free(), 1);
}

TEST(DofMap, SingleCellKeepsOnlyCellMoments) {
  const PolytopalMesh sq = unit_square();
  EXPECT_EQ(build_dof_map(sq, 1, 1).num_free(), 0);
  EXPECT_EQ(build_dof_map(sq, 1, 3).num_free(), poly_dim(2, 1));
  EXPECT_EQ(build_dof_map(sq, 2, 5).num_free(), poly_dim(2, 1));
}

TEST(DofMap, SharedFacesCountOnce) {
  const PolytopalMesh mesh = generate_mesh(MeshFamily::PolygonHex, 1);
  for (auto [m, k] : std::vector<std::pair<int, int>>{{1, 2}, {2, 3}}) {
    const GlobalDofMap map = build_dof_map(mesh, m, k);
    int expected = mesh.num_cells() * poly_dim(2, k - 2 * m);
    for (int j = 1; j <= m; ++j)
      for (int a = 0; a <= m - j; ++a)
        expected += mesh.num_faces(j) * static_cast<int>(binomial(a + j - 1, j - 1)) * poly_dim(2 - j, k - (2 * m - j - a));
    EXPECT_EQ(map.num_global(), expected);
    for (int i = 0; i < map.num_global(); ++i) {
      const auto& key = map.keys[i];
      const bool on_boundary = key.domain.codim > 0 && mesh.face(key.domain).boundary;
      EXPECT_EQ(map.constrained[i] != 0, on_boundary);
    }
  }
}

TEST(Assembly, SymmetricAndPositiveDefinite) {
  const PolytopalMesh mesh = generate_mesh(MeshFamily::QuadDistorted, 2);
  for (auto [m, k] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 2}, {2, 4}}) {
    const GlobalDofMap map = build_dof_map(mesh, m, k);
    const auto ops = build_elements(mesh, m, k, 1);
    const LinearSystem sys = assemble(mesh, map, ops, [](const Vec&) { return 1.0; }, 2 * k + 4);
    const Matrix A(sys.A);
    EXPECT_LT((A - A.transpose()).cwiseAbs().maxCoeff(), 1e-12 * A.cwiseAbs().maxCoeff());
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(A).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Assembly, ZeroLoadGivesZeroSolution) {
  const PolytopalMesh mesh = generate_mesh(MeshFamily::TriUniform, 2);
  const GlobalDofMap map = build_dof_map(mesh, 2, 3);
  const auto ops = build_elements(mesh, 2, 3, 1);
  const LinearSystem sys = assemble(mesh, map, ops, [](const Vec&) { return 0.0; }, 10);
  EXPECT_EQ(sys.b.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(solve(sys).x.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Assembly, MatchesLocalStiffnessOnPolynomials) {
  std::mt19937_64 rng(97);
  const PolytopalMesh mesh = generate_mesh(MeshFamily::QuadDistorted, 2);
  const int m = 2, k = 3;
  const GlobalDofMap map = build_dof_map(mesh, m, k);
  const auto ops = build_elements(mesh, m, k, 1);
  const LinearSystem sys = assemble(mesh, map, ops, [](const Vec&) { return 0.0; }, 10);
  // A fixed global cubic; dofs on the boundary are simply dropped.
  const Poly p = random_poly(rng, 2, k, v2(0.5, 0.5), 1.0);
  const Poly q = random_poly(rng, 2, k, v2(0.5, 0.5), 1.0);
  const Vector gp = interpolate(mesh, map, ops, PolyFunction(p), 2 * k + 2);
  const Vector gq = interpolate(mesh, map, ops, PolyFunction(q), 2 * k + 2);
  double summed = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    Vector lp = gather_local(map, c, gp), lq = gather_local(map, c, gq);
    for (int i = 0; i < lp.size(); ++i)
      if (map.constrained[map.local_to_global[c][i]]) lp[i] = lq[i] = 0.0;
    summed += lp.dot(ops[c].A * lq);
  }
  EXPECT_NEAR(free_part(map, gp).dot(sys.A * free_part(map, gq)), summed, 1e-10 * std::max(1.0, std::abs(summed)));
}

TEST(Solve, IdentityAndScalar) {
  LinearSystem id;
  id.A.resize(3, 3);
  id.A.setIdentity();
  id.b = Vector::LinSpaced(3, 1.0, 3.0);
  EXPECT_LT((solve(id).x - id.b).norm(), 1e-15);
  SolverSettings cg;
  cg.force_cg = true;
  EXPECT_LT((solve(id, cg).x - id.b).norm(), 1e-14);

  LinearSystem one;
  one.A.resize(1, 1);
  one.A.insert(0, 0) = 4.0;
  one.b = Vector::Constant(1, 3.0);
  EXPECT_DOUBLE_EQ(solve(one).x[0], 0.75);
  EXPECT_NEAR(solve(one, cg).x[0], 0.75, 1e-15);
}

TEST(Solve, CgMatchesDirect) {
  const PolytopalMesh mesh = generate_mesh(MeshFamily::TriUniform, 3);
  const GlobalDofMap map = build_dof_map(mesh, 2, 2);
  const auto ops = build_elements(mesh, 2, 2, 1);
  const auto u = manufactured_case("sin2", 2, 2);
  const LinearSystem sys = assemble(mesh, map, ops, [&](const Vec& x) { return u->load(x); }, 8);
  SolverSettings cg;
  cg.force_cg = true;
  const SolveResult a = solve(sys), b = solve(sys, cg);
  EXPECT_FALSE(a.used_cg);
  EXPECT_TRUE(b.used_cg);
  EXPECT_LE(b.residual, 1e-12);
  EXPECT_LT((a.x - b.x).norm(), 1e-9 * a.x.norm());
}

TEST(Solve, TwoTrianglePipeline) {
  const PolytopalMesh mesh = two_triangles();
  const GlobalDofMap map = build_dof_map(mesh, 1, 1);
  const auto ops = build_elements(mesh, 1, 1, 1);
  const auto u = manufactured_case("sin", 2, 1);
  SolverSettings cg;
  cg.force_cg = true;
  const SolveResult r = solve(assemble(mesh, map, ops, [&](const Vec& x) { return u->load(x); }, 6), cg);
  EXPECT_LE(r.residual, 1e-12);
  EXPECT_GT(r.x[0], 0.0);
}

TEST(Errors, PolynomialDataIsReproduced) {
  std::mt19937_64 rng(101);
  const PolytopalMesh mesh = generate_mesh(MeshFamily::PolygonHex, 1);
  for (auto [m, k] : std::vector<std::pair<int, int>>{{1, 2}, {2, 3}}) {
    const GlobalDofMap map = build_dof_map(mesh, m, k);
    const auto ops = build_elements(mesh, m, k, 1);
    const Poly p = random_poly(rng, 2, k, v2(0.5, 0.5), 1.0);
    const PolyFunction pf(p);
    const ErrorNorms e = evaluate_errors(mesh, map, ops, interpolate(mesh, map, ops, pf, 2 * k + 2), pf, 2 * k + 4);
    EXPECT_LE(e.hm, 1e-9);
    EXPECT_LE(e.l2, 1e-9);
  }
  const GlobalDofMap map = build_dof_map(mesh, 1, 1);
  const auto ops = build_elements(mesh, 1, 1, 1);
  const ErrorNorms e = evaluate_errors(mesh, map, ops, Vector::Zero(map.num_global()), Zero(), 6);
  EXPECT_EQ(e.hm, 0.0);
  EXPECT_EQ(e.l2, 0.0);
}

TEST(Errors, InterpolantErrorIsProjectionError) {
  const PolytopalMesh mesh = generate_mesh(MeshFamily::QuadDistorted, 1);
  const int m = 2, k = 3;
  const GlobalDofMap map = build_dof_map(mesh, m, k);
  const auto ops = build_elements(mesh, m, k, 1);
  const auto u = manufactured_case("sin2", 2, m);
  const Vector g = interpolate(mesh, map, ops, *u, 2 * k + 6);
  const ErrorNorms e = evaluate_errors(mesh, map, ops, g, *u, 2 * k + 4);

  // Oracle: |u - Pi u|_{m,h}; the n^m tensor entries grouped by multi-index with weight m!/beta!.
  double sum = 0.0;
  const MonomialSet& set = MonomialSet::get(2, m);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Poly pu = ops[c].projection(gather_local(map, c, g));
    const QuadratureSet q = quadrature(mesh, DomainRef{0, c}, 2 * k + 4);
    for (int b = poly_dim(2, m - 1); b < set.size(); ++b) {
      const MultiIndex& beta = set[b];
      const double weight = std::tgamma(m + 1) / (std::tgamma(beta[0] + 1) * std::tgamma(beta[1] + 1));
      const Poly d = pu.derivative(beta);
      sum += weight * integrate(q, [&](const Vec& x) { return std::pow(u->derivative(x, beta) - d(x), 2); });
    }
  }
  EXPECT_NEAR(e.hm, std::sqrt(sum), 1e-12 * std::sqrt(sum));
  EXPECT_GT(e.hm, 0.0);
}

TEST(Assembly, DeterministicAcrossThreadCounts) {
  const PolytopalMesh mesh = generate_mesh(MeshFamily::PolygonHex, 2);
  const GlobalDofMap map = build_dof_map(mesh, 2, 3);
  auto f = [](const Vec& x) { return std::sin(3 * x[0]) + x[1]; };
  const LinearSystem a = assemble(mesh, map, build_elements(mesh, 2, 3, 1), f, 10);
  const LinearSystem b = assemble(mesh, map, build_elements(mesh, 2, 3, 4), f, 10);
  EXPECT_EQ(Matrix(a.A - b.A).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((a.b - b.b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Assembly, ParallelForPropagatesErrors) {
  std::vector<int> hits(50, 0);
  parallel_for(50, [&](int i) { hits[i] += 1; }, 3);
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 50);
  EXPECT_THROW(parallel_for(10, [](int i) { require(i != 7, ErrorCode::Numerical, "boom"); }, 2), Error);
}

TEST(WeakContinuity, JumpMomentsShrink) {
  const int m = 2, k = 2;
  const auto u = manufactured_case("sin2", 2, m);
  std::vector<double> jumps;
  for (int level = 2; level <= 4; ++level) {
    const PolytopalMesh mesh = generate_mesh(MeshFamily::TriUniform, level);
    const GlobalDofMap map = build_dof_map(mesh, m, k);
    const auto ops = build_elements(mesh, m, k, 1);
    const SolveResult r = solve(assemble(mesh, map, ops, [&](const Vec& x) { return u->load(x); }, 8));
    jumps.push_back(jump_moments(mesh, map, ops, expand_solution(map, r.x)));
  }
  // Rate >= k + 1 - m with a small allowance for pre-asymptotic levels.
  for (std::size_t i = 1; i < jumps.size(); ++i) EXPECT_GE(std::log2(jumps[i - 1] / jumps[i]), (k + 1 - m) - 0.15);
}
