#include "helpers.hpp"

#include <gtest/gtest.h>

using namespace vem;
using namespace vem::testing;

namespace {

/// dim P_{k-2m}(K) + sum_j |F^j(K)| sum_{|alpha| <= m-j} #A_j(|alpha|) dim P_{k-(2m-j-|alpha|)}(F).
int dimension_formula(const PolytopalMesh& mesh, int cell, int m, int k) {
  const int n = mesh.dim();
  int total = poly_dim(n, k - 2 * m);
  for (int j = 1; j <= m; ++j) {
    const int faces = static_cast<int>(mesh.cell(cell).lattice[j].size());
    for (int a = 0; a <= m - j; ++a) {
      const int multi = static_cast<int>(binomial(a + j - 1, j - 1));  // alphas in j slots with |alpha| = a
      total += faces * multi * poly_dim(n - j, k - (2 * m - j - a));
    }
  }
  return total;
}

Vector dofs_of(const PolytopalMesh& mesh, const ElementOperators& ops, const Poly& p) {
  return dof_values(mesh, ops.dofs, PolyFunction(p), 2 * ops.k + 2);
}

class Scaled final : public SmoothFunction {
 public:
  Scaled(const SmoothFunction& f, double c) : f_(f), c_(c) {}
  double derivative(const Vec& x, const MultiIndex& beta) const override {
    return std::pow(c_, -order(beta)) * f_.derivative(x / c_, beta);
  }

 private:
  const SmoothFunction& f_;
  double c_;
};

std::vector<PolytopalMesh> sample_elements() {
  std::vector<PolytopalMesh> out;
  out.push_back(PolytopalMesh::from_polygons({v2(0, 0), v2(1, 0), v2(0.3, 0.8)}, {{0, 1, 2}}));
  out.push_back(unit_square());
  out.push_back(regular_polygon(5));
  out.push_back(regular_polygon(6, 0.4));
  return out;
}

}  // namespace

TEST(Dofs, CountsMatchTheDimensionFormula) {
  for (const auto& mesh : sample_elements())
    for (auto [m, k] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {1, 3}, {2, 2}, {2, 3}, {2, 4}, {2, 5}}) {
      const int expected = dimension_formula(mesh, 0, m, k);
      EXPECT_EQ(static_cast<int>(enumerate_dofs(mesh, 0, m, k).size()), expected);
      EXPECT_EQ(dof_count(mesh, 0, m, k), expected);
    }
  const PolytopalMesh cube = unit_cube();
  for (auto [m, k] : std::vector<std::pair<int, int>>{{1, 1}, {2, 3}, {3, 3}, {3, 4}})
    EXPECT_EQ(static_cast<int>(enumerate_dofs(cube, 0, m, k).size()), dimension_formula(cube, 0, m, k));
}

TEST(Dofs, MorleyAndCrouzeixRaviartLayouts) {
  const PolytopalMesh tri = sample_elements()[0];
  const auto morley = enumerate_dofs(tri, 0, 2, 2);
  ASSERT_EQ(morley.size(), 6u);
  int normal_moments = 0, vertex_values = 0;
  for (const auto& d : morley) {
    if (d.domain.codim == 1 && d.alpha == MultiIndex{1, 0, 0} && d.degree == 0) ++normal_moments;
    if (d.domain.codim == 2 && d.alpha == MultiIndex{0, 0, 0}) ++vertex_values;
  }
  EXPECT_EQ(normal_moments, 3);
  EXPECT_EQ(vertex_values, 3);

  const auto cr = enumerate_dofs(tri, 0, 1, 1);
  ASSERT_EQ(cr.size(), 3u);
  for (const auto& d : cr) {
    EXPECT_EQ(d.domain.codim, 1);
    EXPECT_EQ(d.degree, 0);
  }
  for (int sides : {4, 5, 7}) EXPECT_EQ(enumerate_dofs(regular_polygon(sides), 0, 2, 3).size(), 4u * sides);
}

TEST(Dofs, OrderingAndScales) {
  const PolytopalMesh mesh = regular_polygon(5, 0.7);
  const auto dofs = enumerate_dofs(mesh, 0, 2, 4);
  const Cell& K = mesh.cell(0);
  // Cell moments first, then faces by codimension and id.
  EXPECT_EQ(dofs.front().kind, DofDescriptor::Kind::CellMoment);
  for (std::size_t i = 1; i < dofs.size(); ++i) {
    const auto& a = dofs[i - 1];
    const auto& b = dofs[i];
    if (a.kind == DofDescriptor::Kind::FaceMoment) EXPECT_FALSE(b.domain < a.domain);
  }
  for (const auto& d : dofs) {
    if (d.kind == DofDescriptor::Kind::CellMoment) {
      EXPECT_DOUBLE_EQ(d.scale, 1.0 / K.measure);
      continue;
    }
    const int j = d.domain.codim;
    const double fm = mesh.face(d.domain).frame.measure;
    const double expected = j == 2 ? 1.0 : std::pow(fm, -double(2 - j - order(d.alpha)) / (2 - j));
    EXPECT_NEAR(d.scale, expected, 1e-14 * expected);
  }
  EXPECT_THROW(enumerate_dofs(mesh, 0, 3, 3), Error);
  EXPECT_THROW(enumerate_dofs(mesh, 0, 2, 1), Error);
}

TEST(Dofs, ApplyExamples) {
  const PolytopalMesh sq = unit_square();
  Poly one = Poly::zero(2, 0, Vec::Zero(2), 1.0);
  one.coeffs[0] = 1.0;
  Poly x = Poly::zero(2, 1, Vec::Zero(2), 1.0);
  x.coeffs[1] = 1.0;

  const auto dofs12 = enumerate_dofs(sq, 0, 1, 2);
  ASSERT_EQ(dofs12.front().kind, DofDescriptor::Kind::CellMoment);
  EXPECT_NEAR(dof_apply(sq, dofs12.front(), PolyFunction(one), 4), 1.0, 1e-14);

  for (const auto& d : enumerate_dofs(sq, 0, 1, 1)) {
    const Vec& c = sq.face(d.domain).frame.centroid;
    if (std::abs(c[0] - 1.0) < 1e-12) EXPECT_NEAR(dof_apply(sq, d, PolyFunction(x), 4), 1.0, 1e-14);
  }
  for (const auto& d : enumerate_dofs(sq, 0, 2, 2)) {
    if (d.domain.codim != 2) continue;
    const Vec& p = sq.face(d.domain).frame.centroid;
    if ((p - v2(1, 0)).norm() < 1e-12) EXPECT_NEAR(dof_apply(sq, d, PolyFunction(x), 4), 1.0, 1e-15);
  }
}

TEST(Dofs, ScaleHomogeneity) {
  const ManufacturedFunction u(ManufacturedFunction::Profile::Sin2, 2, 2);
  const PolytopalMesh base = regular_polygon(5, 0.2, 0.1);
  const auto base_dofs = enumerate_dofs(base, 0, 2, 4);
  const Vector ref = dof_values(base, base_dofs, u, 14);
  for (double c : {0.25, 0.5, 2.0, 4.0}) {
    std::vector<Vec> pts(base.vertices());
    for (auto& p : pts) p *= c;
    const PolytopalMesh mesh = PolytopalMesh::from_polygons(pts, {{0, 1, 2, 3, 4}});
    const Vector vals = dof_values(mesh, enumerate_dofs(mesh, 0, 2, 4), Scaled(u, c), 14);
    EXPECT_LT((vals - ref).cwiseAbs().maxCoeff(), 1e-10 * ref.cwiseAbs().maxCoeff()) << "c=" << c;
  }
}

TEST(Projector, ReproducesPolynomials) {
  std::mt19937_64 rng(61);
  for (const auto& mesh : sample_elements())
    for (auto [m, k] : std::vector<std::pair<int, int>>{{1, 1}, {1, 3}, {2, 2}, {2, 3}, {2, 4}, {2, 5}}) {
      const ElementOperators ops = build_element(mesh, 0, m, k);
      const Matrix id = Matrix::Identity(ops.num_polys(), ops.num_polys());
      EXPECT_LT((ops.Pi_star * ops.D - id).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LT((ops.Pi_dof * ops.D - ops.D).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LT((ops.Pi_dof * ops.Pi_dof - ops.Pi_dof).cwiseAbs().maxCoeff(), 1e-9);
      const Poly low = random_cell_poly(rng, mesh, 0, m - 1).with_degree(k);
      EXPECT_LT((ops.projection(dofs_of(mesh, ops, low)).coeffs - low.coeffs).norm(), 1e-10);
      // D has full column rank.
      EXPECT_EQ(Eigen::FullPivLU<Matrix>(ops.D).rank(), ops.num_polys());
    }
}

TEST(Projector, MatchesDirectConstrainedProjection) {
  const PolytopalMesh mesh = regular_polygon(6, 0.3, 0.2);
  for (auto [m, k] : std::vector<std::pair<int, int>>{{1, 2}, {2, 3}, {2, 4}}) {
    const ManufacturedFunction u(m == 1 ? ManufacturedFunction::Profile::Sin : ManufacturedFunction::Profile::Sin2, 2, m);
    const ElementOperators ops = build_element(mesh, 0, m, k);
    const Vector via_dofs = ops.Pi_star * dof_values(mesh, ops.dofs, u, 2 * k + 6);

    const Cell& K = mesh.cell(0);
    const MonomialSet& set = MonomialSet::get(2, k);
    const int np = set.size();
    Matrix G = Matrix::Zero(np, np);
    Vector rhs = Vector::Zero(np);
    const QuadratureSet q = quadrature(mesh, DomainRef{0, 0}, 2 * k + 8);
    const MonomialSet& betas = MonomialSet::get(2, m);
    for (int i = 0; i < q.size(); ++i) {
      const Vec xi = (q.points[i] - K.centroid) / K.diameter;
      for (int b = poly_dim(2, m - 1); b < betas.size(); ++b) {
        const Vector dv = monomial_derivative_values(set, xi, betas[b], K.diameter);
        double mult = 1.0;  // m! / beta!
        for (int t = 2; t <= m; ++t) mult *= t;
        for (int v = 0; v < 2; ++v)
          for (int t = 2; t <= betas[b][v]; ++t) mult /= t;
        const double du = u.derivative(q.points[i], betas[b]);
        for (int a = poly_dim(2, m - 1); a < np; ++a) {
          G.row(a) += q.weights[i] * mult * dv[a] * dv.transpose();
          rhs[a] += q.weights[i] * mult * dv[a] * du;
        }
      }
    }
    // Constraint rows: sum over F in F^r(K) of face averages of d^beta, |beta| = m - r.
    for (int r = 1; r <= m; ++r) {
      const MonomialSet& low = MonomialSet::get(2, m - r);
      for (int b = poly_dim(2, m - r - 1); b < low.size(); ++b) {
        const int row = set.index_of(low[b]);
        G.row(row).setZero();
        rhs[row] = 0.0;
        for (int f : K.lattice[r]) {
          const DomainRef d{r, f};
          const QuadratureSet fq = quadrature(mesh, d, 2 * k + 8);
          const double fm = mesh.face(d).frame.measure;
          for (int i = 0; i < fq.size(); ++i) {
            const Vec xi = (fq.points[i] - K.centroid) / K.diameter;
            G.row(row) += fq.weights[i] / fm * monomial_derivative_values(set, xi, low[b], K.diameter).transpose();
            rhs[row] += fq.weights[i] / fm * u.derivative(fq.points[i], low[b]);
          }
        }
      }
    }
    const Vector direct = G.fullPivLu().solve(rhs);
    EXPECT_LT((via_dofs - direct).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, direct.cwiseAbs().maxCoeff()))
        << "m=" << m << " k=" << k;
  }
}

TEST(Stabilization, PrefactorAndKernel) {
  std::mt19937_64 rng(67);
  for (const auto& mesh : sample_elements())
    for (auto [m, k] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 2}, {2, 4}}) {
      const ElementOperators ops = build_element(mesh, 0, m, k);
      const Matrix r = Matrix::Identity(ops.num_dofs(), ops.num_dofs()) - ops.Pi_dof;
      const Matrix base = r.transpose() * r;
      const double prefactor = std::pow(mesh.cell(0).diameter, 2 - 2 * m);
      EXPECT_LT((ops.S - prefactor * base).cwiseAbs().maxCoeff(), 1e-14 * prefactor * base.cwiseAbs().maxCoeff());
      EXPECT_LT((ops.S - ops.S.transpose()).cwiseAbs().maxCoeff(), 1e-12 * ops.S.cwiseAbs().maxCoeff());
      const Vector p = dofs_of(mesh, ops, random_cell_poly(rng, mesh, 0, k));
      EXPECT_LT((ops.S * p).norm(), 1e-9 * std::max(1.0, p.norm()));
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(ops.S).eigenvalues().minCoeff(), -1e-10);
    }
  if (true) {
    const ElementOperators ops = build_element(unit_square(), 0, 1, 1);
    const Matrix r = Matrix::Identity(ops.num_dofs(), ops.num_dofs()) - ops.Pi_dof;
    EXPECT_LT((ops.S - r.transpose() * r).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Stiffness, KConsistency) {
  std::mt19937_64 rng(71);
  for (const auto& mesh : sample_elements())
    for (auto [m, k] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 2}, {2, 3}, {2, 4}}) {
      const ElementOperators ops = build_element(mesh, 0, m, k);
      for (int trial = 0; trial < 5; ++trial) {
        const Poly p = random_cell_poly(rng, mesh, 0, k);
        const Poly q = random_cell_poly(rng, mesh, 0, k);
        const double exact = gram_by_quadrature(mesh, 0, p, q, m);
        const double discrete = dofs_of(mesh, ops, p).dot(ops.A * dofs_of(mesh, ops, q));
        EXPECT_NEAR(discrete, exact, 1e-9 * std::max(1.0, std::abs(exact)));
      }
    }
}

TEST(Stiffness, KernelIsExactlyLowDegreePolynomials) {
  for (const auto& mesh : sample_elements())
    for (auto [m, k] : std::vector<std::pair<int, int>>{{1, 1}, {2, 2}, {2, 3}}) {
      const ElementOperators ops = build_element(mesh, 0, m, k);
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(ops.A);
      const Vector ev = eig.eigenvalues();
      const double top = ev.maxCoeff();
      int zeros = 0;
      for (int i = 0; i < ev.size(); ++i) {
        EXPECT_GT(ev[i], -1e-10 * top);
        if (ev[i] < 1e-10 * top) ++zeros;
      }
      EXPECT_EQ(zeros, poly_dim(2, m - 1));
    }
}

TEST(Stiffness, LinearOnUnitSquare) {
  const PolytopalMesh sq = unit_square();
  const ElementOperators ops = build_element(sq, 0, 1, 1);
  const Poly p = Poly::monomial(2, 1, 1, sq.cell(0).centroid, sq.cell(0).diameter);
  const Vector d = dofs_of(sq, ops, p);
  EXPECT_NEAR(d.dot(ops.A * d), 0.5, 1e-14);
}

TEST(Regimes, TableForSmallOrders) {
  // Rows m = 1..3, columns k = m..8.
  using R = LoadRegime;
  const std::vector<std::vector<R>> table = {
      {R::Projection, R::QkMinus2m, R::QkMinus2m, R::QkMinus2m, R::QkMinus2m, R::QkMinus2m, R::QkMinus2m, R::QkMinus2m},
      {R::Projection, R::Projection, R::QmMinus1, R::QkMinus2m, R::QkMinus2m, R::QkMinus2m, R::QkMinus2m},
      {R::Projection, R::Projection, R::Projection, R::QmMinus1, R::QmMinus1, R::QkMinus2m},
  };
  for (int m = 1; m <= 3; ++m)
    for (int k = m; k <= 8; ++k) EXPECT_EQ(load_regime(m, k), table[m - 1][k - m]) << "m=" << m << " k=" << k;
}

TEST(Load, QmMinus1MatchesL2Projection) {
  std::mt19937_64 rng(73);
  for (const auto& mesh : {unit_square(), regular_polygon(5)}) {
    const ElementOperators ops = build_element(mesh, 0, 2, 4);
    const Cell& K = mesh.cell(0);
    const QuadratureSet q = quadrature(mesh, DomainRef{0, 0}, 10);
    for (int trial = 0; trial < 5; ++trial) {
      const Poly v = random_cell_poly(rng, mesh, 0, 4);
      // Normal equations for the best linear fit in the cell-scaled basis {1, xi, eta}.
      Matrix M = Matrix::Zero(3, 3);
      Vector b = Vector::Zero(3);
      for (int i = 0; i < q.size(); ++i) {
        const Vec xi = (q.points[i] - K.centroid) / K.diameter;
        const Eigen::Vector3d phi(1.0, xi[0], xi[1]);
        M += q.weights[i] * phi * phi.transpose();
        b += q.weights[i] * v(q.points[i]) * phi;
      }
      const Vector exact = M.ldlt().solve(b);
      EXPECT_LT((q_mminus1(ops, dofs_of(mesh, ops, v)).coeffs - exact).cwiseAbs().maxCoeff(), 1e-9);
    }
    const Poly lin = random_cell_poly(rng, mesh, 0, 1);
    EXPECT_LT((q_mminus1(ops, dofs_of(mesh, ops, lin.with_degree(4))).coeffs - lin.coeffs).norm(), 1e-10);
  }
  EXPECT_THROW(q_mminus1_matrix(build_element(unit_square(), 0, 2, 3)), Error);
}

TEST(Load, PolynomialDataIsIntegratedExactly) {
  std::mt19937_64 rng(79);
  const PolytopalMesh mesh = regular_polygon(5);
  // f of a degree every regime reproduces: (f, v) for polynomial v.
  for (auto [m, k] : std::vector<std::pair<int, int>>{{1, 1}, {1, 3}, {2, 3}, {2, 4}, {2, 6}}) {
    const ElementOperators ops = build_element(mesh, 0, m, k);
    const int fdeg = load_regime(m, k) == LoadRegime::QmMinus1 ? m - 1 : load_regime(m, k) == LoadRegime::QkMinus2m ? k - 2 * m : k;
    const Poly f = random_cell_poly(rng, mesh, 0, fdeg);
    const Poly v = random_cell_poly(rng, mesh, 0, k);
    const Vector load = local_load(mesh, ops, [&](const Vec& x) { return f(x); }, 2 * k + 4);
    const double exact = integrate(quadrature(mesh, DomainRef{0, 0}, 2 * k + 2), [&](const Vec& x) { return f(x) * v(x); });
    EXPECT_NEAR(load.dot(dofs_of(mesh, ops, v)), exact, 1e-11 * std::max(1.0, std::abs(exact))) << m << "," << k;
    const Vector zero = local_load(mesh, ops, [](const Vec&) { return 0.0; }, 2 * k + 4);
    EXPECT_EQ(zero.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Manufactured, HandLoads) {
  const double pi = std::numbers::pi;
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const ManufacturedFunction u12(ManufacturedFunction::Profile::Sin, 2, 1);
  const ManufacturedFunction u13(ManufacturedFunction::Profile::Sin, 3, 1);
  const ManufacturedFunction u22(ManufacturedFunction::Profile::Sin2, 2, 2);
  for (int t = 0; t < 20; ++t) {
    const double x = U(rng), y = U(rng), z = U(rng);
    EXPECT_NEAR(u12(v2(x, y)), std::sin(pi * x) * std::sin(pi * y), 1e-14);
    EXPECT_NEAR(u12.load(v2(x, y)), 2 * pi * pi * u12(v2(x, y)), 1e-12);
    EXPECT_NEAR(u13.load(v3(x, y, z)), 3 * pi * pi * u13(v3(x, y, z)), 1e-12);
    // s = sin^2(pi t): s'' = 2 pi^2 cos(2 pi t), s'''' = -8 pi^4 cos(2 pi t).
    auto s = [&](double a) { return std::pow(std::sin(pi * a), 2); };
    auto s2 = [&](double a) { return 2 * pi * pi * std::cos(2 * pi * a); };
    auto s4 = [&](double a) { return -8 * std::pow(pi, 4) * std::cos(2 * pi * a); };
    const double bilap = s4(x) * s(y) + 2 * s2(x) * s2(y) + s(x) * s4(y);
    EXPECT_NEAR(u22.load(v2(x, y)), bilap, 1e-9 * std::abs(bilap) + 1e-9);
  }
}

TEST(Manufactured, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> U(0.05, 0.95);
  for (auto profile : {ManufacturedFunction::Profile::Sin, ManufacturedFunction::Profile::Sin2,
                       ManufacturedFunction::Profile::Sin3})
    for (int n : {2, 3}) {
      const ManufacturedFunction u(profile, n, 1);
      const MonomialSet& set = MonomialSet::get(n, 3);
      for (int t = 0; t < 20; ++t) {
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = U(rng);
        for (int b = 0; b < set.size(); ++b)
          for (int var = 0; var < n; ++var) {
            MultiIndex up = set[b];
            up[var] += 1;
            Vec e = Vec::Zero(n);
            e[var] = 1e-5;
            const double fd = (u.derivative(x + e, set[b]) - u.derivative(x - e, set[b])) / 2e-5;
            const double exact = u.derivative(x, up);
            EXPECT_NEAR(fd, exact, 1e-6 * std::max(1.0, std::abs(exact)));
          }
      }
    }
}

TEST(Manufactured, BoundaryConditionsHold) {
  for (int m = 1; m <= 3; ++m) {
    const auto u = manufactured_case(default_case(m), 2, m);
    const MonomialSet& set = MonomialSet::get(2, m - 1);
    for (double t : {0.0, 0.13, 0.5, 0.91})
      for (const Vec& x : {v2(0, t), v2(1, t), v2(t, 0), v2(t, 1)})
        for (int b = 0; b < set.size(); ++b) EXPECT_NEAR(u->derivative(x, set[b]), 0.0, 1e-11);
  }
  EXPECT_THROW(manufactured_case("nope", 2, 1), Error);
}

TEST(ElementDump, HasOperatorMatrices) {
  const std::string json = element_to_json(build_element(unit_square(), 0, 2, 3));
  for (const char* key : {"\"D\"", "\"B\"", "\"Pi_star\"", "\"S\"", "\"A\"", "\"dofs\""})
    EXPECT_NE(json.find(key), std::string::npos) << key;
}
