#include "vem/element.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <numbers>

namespace vem {

LoadRegime load_regime(int m, int k) {
  require(m >= 1 && k >= m, ErrorCode::InvalidArgument, "load regime needs 1 <= m <= k");
  if (k <= 2 * m - 1) return LoadRegime::Projection;
  if (k <= 3 * m - 2) return LoadRegime::QmMinus1;
  return LoadRegime::QkMinus2m;
}

const char* regime_name(LoadRegime r) {
  switch (r) {
    case LoadRegime::Projection: return "projection";
    case LoadRegime::QmMinus1: return "Q_{m-1}";
    case LoadRegime::QkMinus2m: return "Q_{k-2m}";
  }
  return "?";
}

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double multinomial(const MultiIndex& b) {
  return factorial(order(b)) / (factorial(b[0]) * factorial(b[1]) * factorial(b[2]));
}

void check_orders(const PolytopalMesh& mesh, int m, int k) {
  require(m >= 1, ErrorCode::InvalidArgument, "order m must be positive");
  require(m <= mesh.dim(), ErrorCode::InvalidArgument, "order m exceeds the space dimension (m > n)");
  require(k >= m, ErrorCode::InvalidArgument, "degree k must be at least m");
}

// Consecutive dofs sharing (domain, alpha).
struct DofGroup {
  int start = 0;
  int count = 0;
  const DofDescriptor* first = nullptr;
};

std::vector<DofGroup> group_dofs(std::span<const DofDescriptor> dofs) {
  std::vector<DofGroup> groups;
  for (int i = 0; i < static_cast<int>(dofs.size()); ++i) {
    const auto& d = dofs[i];
    if (!groups.empty()) {
      const DofDescriptor& f = *groups.back().first;
      if (f.domain == d.domain && f.alpha == d.alpha) {
        ++groups.back().count;
        continue;
      }
    }
    groups.push_back({i, 1, &dofs[i]});
  }
  return groups;
}

std::vector<std::pair<MultiIndex, double>> group_expansion(const PolytopalMesh& mesh,
                                                           const DofDescriptor& d) {
  if (d.kind == DofDescriptor::Kind::CellMoment) return {{MultiIndex{}, 1.0}};
  return directional_expansion(alpha_directions(mesh.face(d.domain).frame, d.alpha), mesh.dim());
}

}  // namespace

std::vector<DofDescriptor> enumerate_dofs(const PolytopalMesh& mesh, int cell, int m, int k) {
  check_orders(mesh, m, k);
  const int n = mesh.dim();
  const Cell& K = mesh.cell(cell);
  std::vector<DofDescriptor> dofs;
  const int cell_deg = k - 2 * m;
  for (int l = 0; l < poly_dim(n, cell_deg); ++l)
    dofs.push_back({DofDescriptor::Kind::CellMoment, DomainRef{0, cell}, {}, cell_deg, l, 1.0 / K.measure});
  for (int j = 1; j <= m; ++j) {
    const MonomialSet& alphas = MonomialSet::get(j, m - j);
    for (int f : K.lattice[j]) {
      const double meas = mesh.face(j, f).frame.measure;
      for (const auto& alpha : alphas.exponents()) {
        const int deg = k - (2 * m - j - order(alpha));
        if (deg < 0) continue;
        const double scale =
            j == n ? 1.0 : std::pow(meas, -static_cast<double>(n - j - order(alpha)) / (n - j));
        for (int l = 0; l < poly_dim(n - j, deg); ++l)
          dofs.push_back({DofDescriptor::Kind::FaceMoment, DomainRef{j, f}, alpha, deg, l, scale});
      }
    }
  }
  return dofs;
}

int dof_count(const PolytopalMesh& mesh, int cell, int m, int k) {
  const int n = mesh.dim();
  const Cell& K = mesh.cell(cell);
  int count = poly_dim(n, k - 2 * m);
  for (int j = 1; j <= m; ++j) {
    int per_face = 0;
    for (int a = 0; a <= m - j; ++a)
      per_face += static_cast<int>(binomial(a + j - 1, j - 1)) * poly_dim(n - j, k - 2 * m + j + a);
    count += static_cast<int>(K.lattice[j].size()) * per_face;
  }
  return count;
}

double dof_apply(const PolytopalMesh& mesh, const DofDescriptor& dof, const SmoothFunction& w,
                 int exactness) {
  const auto expansion = group_expansion(mesh, dof);
  const ScaledMonomialBasis basis = ScaledMonomialBasis::for_domain(mesh, dof.domain, dof.degree);
  const QuadratureSet q = quadrature(mesh, dof.domain, exactness);
  return dof.scale * integrate(q, [&](const Vec& x) {
           return basis.values(x)[dof.monomial] * expanded_derivative(w, x, expansion);
         });
}

Vector dof_values(const PolytopalMesh& mesh, std::span<const DofDescriptor> dofs,
                  const SmoothFunction& w, int exactness) {
  Vector out(dofs.size());
  for (const auto& g : group_dofs(dofs)) {
    const DofDescriptor& d = *g.first;
    const auto expansion = group_expansion(mesh, d);
    const ScaledMonomialBasis basis = ScaledMonomialBasis::for_domain(mesh, d.domain, d.degree);
    const QuadratureSet q = quadrature(mesh, d.domain, exactness);
    Vector mom = Vector::Zero(basis.size());
    for (int i = 0; i < q.size(); ++i)
      mom += q.weights[i] * expanded_derivative(w, q.points[i], expansion) * basis.values(q.points[i]);
    for (int i = 0; i < g.count; ++i) out[g.start + i] = dofs[g.start + i].scale * mom[dofs[g.start + i].monomial];
  }
  return out;
}

Vector functional_row(const PolytopalMesh& /*mesh*/, int cell, std::span<const DofDescriptor> dofs,
                      const FunctionalList& list) {
  Vector row = Vector::Zero(dofs.size());
  std::map<std::pair<DomainRef, MultiIndex>, DofGroup> index;
  for (const auto& g : group_dofs(dofs)) index[{g.first->domain, g.first->alpha}] = g;
  auto scatter = [&](DomainRef d, const MultiIndex& alpha, const Vector& w, const char* what) {
    auto it = index.find({d, alpha});
    if (it == index.end()) {
      require(w.cwiseAbs().maxCoeff() <= 1e-13, ErrorCode::Numerical,
              std::string("green term without a matching dof: ") + what);
      return;
    }
    const DofGroup& g = it->second;
    require(w.size() <= g.count, ErrorCode::Numerical,
            std::string("green weight degree exceeds the dof space: ") + what);
    for (int l = 0; l < w.size(); ++l) row[g.start + l] += w[l] / dofs[g.start + l].scale;
  };
  if (list.volume && list.volume->coeffs.size() > 0)
    scatter(DomainRef{0, cell}, MultiIndex{}, list.volume->coeffs, "volume");
  for (const auto& t : list.terms) scatter(t.face, t.alpha, t.weight, "face");
  return row;
}

ElementOperators build_projector(const PolytopalMesh& mesh, int cell, int m, int k) {
  check_orders(mesh, m, k);
  const int n = mesh.dim();
  const Cell& K = mesh.cell(cell);
  ElementOperators ops;
  ops.cell = cell;
  ops.n = n;
  ops.m = m;
  ops.k = k;
  ops.h = K.diameter;
  ops.measure = K.measure;
  ops.centroid = K.centroid;
  ops.dofs = enumerate_dofs(mesh, cell, m, k);
  const MonomialSet& cell_set = MonomialSet::get(n, k);
  const int np = cell_set.size();
  const int nd = ops.num_dofs();

  // D: dof values of the cell monomials.
  ops.D = Matrix::Zero(nd, np);
  for (const auto& g : group_dofs(ops.dofs)) {
    const DofDescriptor& d = *g.first;
    const auto expansion = group_expansion(mesh, d);
    const ScaledMonomialBasis basis = ScaledMonomialBasis::for_domain(mesh, d.domain, d.degree);
    const QuadratureSet q = quadrature(mesh, d.domain, 2 * k + 2);
    Matrix block = Matrix::Zero(basis.size(), np);
    for (int i = 0; i < q.size(); ++i) {
      const Vec xi = (q.points[i] - K.centroid) / K.diameter;
      Vector deriv = Vector::Zero(np);
      for (const auto& [beta, c] : expansion)
        deriv += c * monomial_derivative_values(cell_set, xi, beta, K.diameter);
      block += q.weights[i] * basis.values(q.points[i]) * deriv.transpose();
    }
    for (int i = 0; i < g.count; ++i)
      ops.D.row(g.start + i) = ops.dofs[g.start + i].scale * block.row(ops.dofs[g.start + i].monomial);
  }

  // Gram of grad^m and the cell mass matrix.
  {
    const QuadratureSet q = quadrature(mesh, DomainRef{0, cell}, 2 * k);
    const MonomialSet& betas = MonomialSet::get(n, m);
    ops.G_true = Matrix::Zero(np, np);
    ops.mass = Matrix::Zero(np, np);
    for (int i = 0; i < q.size(); ++i) {
      const Vec xi = (q.points[i] - K.centroid) / K.diameter;
      const Vector v = monomial_values(cell_set, xi);
      ops.mass += q.weights[i] * v * v.transpose();
      for (int b = poly_dim(n, m - 1); b < betas.size(); ++b) {
        const Vector dv = monomial_derivative_values(cell_set, xi, betas[b], K.diameter);
        ops.G_true += q.weights[i] * multinomial(betas[b]) * dv * dv.transpose();
      }
    }
  }

  // B: Green rows for every monomial, then constraint rows for degrees < m.
  ProjectorCache cache(mesh);
  ops.B = Matrix::Zero(np, nd);
  for (int a = poly_dim(n, m - 1); a < np; ++a) {
    const Poly q = Poly::monomial(n, k, a, K.centroid, K.diameter);
    ops.B.row(a) = functional_row(mesh, cell, ops.dofs, element_green_decompose(mesh, cell, q, m, &cache));
  }
  for (int s = 0; s < m; ++s) {
    const int r = m - s;
    std::map<MultiIndex, Vector> rows;
    for (const auto& cm : constant_moment_functionals(mesh, cell, r, m, &cache)) {
      Vector row = functional_row(mesh, cell, ops.dofs, cm.list) / mesh.face(cm.face).frame.measure;
      auto it = rows.find(cm.beta);
      if (it == rows.end())
        rows.emplace(cm.beta, std::move(row));
      else
        it->second += row;
    }
    for (const auto& [beta, row] : rows) ops.B.row(cell_set.index_of(beta)) = row;
  }
  ops.G_tilde = ops.B * ops.D;

  // Row equilibration before the solve.
  Matrix g = ops.G_tilde;
  Matrix b = ops.B;
  for (int i = 0; i < np; ++i) {
    const double s = g.row(i).cwiseAbs().maxCoeff();
    require(s > 0, ErrorCode::Numerical, "projector matrix has a zero row");
    g.row(i) /= s;
    b.row(i) /= s;
  }
  Eigen::FullPivLU<Matrix> lu(g);
  lu.setThreshold(1e-12);
  const Vector piv = lu.matrixLU().diagonal().cwiseAbs();
  ops.pivot_ratio = piv.minCoeff() / piv.maxCoeff();
  require(lu.rank() == np, ErrorCode::Numerical,
          "singular projector matrix on cell " + std::to_string(cell) + " (check geometry and frames)");
  ops.Pi_star = lu.solve(b);
  ops.Pi_dof = ops.D * ops.Pi_star;
  return ops;
}

Matrix stabilization_matrix(const ElementOperators& ops) {
  const Matrix r = Matrix::Identity(ops.num_dofs(), ops.num_dofs()) - ops.Pi_dof;
  return std::pow(ops.h, ops.n - 2 * ops.m) * (r.transpose() * r);
}

Matrix local_stiffness(const ElementOperators& ops) {
  Matrix a = ops.Pi_star.transpose() * ops.G_true * ops.Pi_star + ops.S;
  return 0.5 * (a + a.transpose());
}

ElementOperators build_element(const PolytopalMesh& mesh, int cell, int m, int k) {
  ElementOperators ops = build_projector(mesh, cell, m, k);
  ops.S = stabilization_matrix(ops);
  ops.A = local_stiffness(ops);
  return ops;
}

Poly ElementOperators::projection(const Vector& local_dofs) const {
  Poly p = Poly::zero(n, k, centroid, h);
  p.coeffs = Pi_star * local_dofs;
  return p;
}

Matrix q_mminus1_matrix(const ElementOperators& ops) {
  require(load_regime(ops.m, ops.k) == LoadRegime::QmMinus1, ErrorCode::InvalidArgument,
          "Q_{m-1} from dofs is only available for 2m <= k <= 3m - 2");
  const int p1 = poly_dim(ops.n, ops.m - 1);
  const int p0 = poly_dim(ops.n, ops.k - 2 * ops.m);
  const int nd = ops.num_dofs();
  const Eigen::LDLT<Matrix> m00(ops.mass.topLeftCorner(p0, p0));
  const Eigen::LDLT<Matrix> m11(ops.mass.topLeftCorner(p1, p1));
  Matrix q = Matrix::Zero(p1, nd);
  // Q_{k-2m} v from the cell moments (the first p0 dofs).
  Matrix cell_part = Matrix::Zero(p0, nd);
  cell_part.leftCols(p0) = ops.measure * Matrix::Identity(p0, p0);
  q.topRows(p0) += m00.solve(cell_part);
  q += m11.solve(ops.mass.topRows(p1) * ops.Pi_star);
  q.topRows(p0) -= m00.solve(ops.mass.topRows(p0) * ops.Pi_star);
  return q;
}

Poly q_mminus1(const ElementOperators& ops, const Vector& local_dofs) {
  Poly p = Poly::zero(ops.n, ops.m - 1, ops.centroid, ops.h);
  p.coeffs = q_mminus1_matrix(ops) * local_dofs;
  return p;
}

Vector local_load(const PolytopalMesh& mesh, const ElementOperators& ops,
                  const std::function<double(const Vec&)>& f, int exactness) {
  const MonomialSet& set = MonomialSet::get(ops.n, ops.k);
  const QuadratureSet q = quadrature(mesh, DomainRef{0, ops.cell}, exactness);
  Vector fq = Vector::Zero(set.size());
  for (int i = 0; i < q.size(); ++i)
    fq += q.weights[i] * f(q.points[i]) * monomial_values(set, (q.points[i] - ops.centroid) / ops.h);
  switch (load_regime(ops.m, ops.k)) {
    case LoadRegime::Projection:
      return ops.Pi_star.transpose() * fq;
    case LoadRegime::QmMinus1: {
      const int p1 = poly_dim(ops.n, ops.m - 1);
      return q_mminus1_matrix(ops).transpose() * fq.head(p1);
    }
    case LoadRegime::QkMinus2m: {
      const int p0 = poly_dim(ops.n, ops.k - 2 * ops.m);
      Vector out = Vector::Zero(ops.num_dofs());
      out.head(p0) = ops.measure * ops.mass.topLeftCorner(p0, p0).ldlt().solve(fq.head(p0));
      return out;
    }
  }
  return {};
}

namespace {

nlohmann::json matrix_json(const Matrix& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < a.rows(); ++i) {
    std::vector<double> r(a.cols());
    for (int j = 0; j < a.cols(); ++j) r[j] = a(i, j);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

std::string element_to_json(const ElementOperators& ops) {
  nlohmann::json j;
  j["cell"] = ops.cell;
  j["n"] = ops.n;
  j["m"] = ops.m;
  j["k"] = ops.k;
  j["h"] = ops.h;
  j["measure"] = ops.measure;
  j["regime"] = regime_name(load_regime(ops.m, ops.k));
  j["dofs"] = nlohmann::json::array();
  for (const auto& d : ops.dofs) {
    j["dofs"].push_back({{"kind", d.kind == DofDescriptor::Kind::CellMoment ? "cell" : "face"},
                         {"codim", d.domain.codim},
                         {"id", d.domain.id},
                         {"alpha", std::vector<int>(d.alpha.begin(), d.alpha.begin() + d.domain.codim)},
                         {"degree", d.degree},
                         {"monomial", d.monomial},
                         {"scale", d.scale}});
  }
  j["D"] = matrix_json(ops.D);
  j["B"] = matrix_json(ops.B);
  j["G_tilde"] = matrix_json(ops.G_tilde);
  j["Pi_star"] = matrix_json(ops.Pi_star);
  if (ops.S.size() > 0) j["S"] = matrix_json(ops.S);
  if (ops.A.size() > 0) j["A"] = matrix_json(ops.A);
  return j.dump(1);
}

// --- ManufacturedFunction ---

ManufacturedFunction::ManufacturedFunction(Profile profile, int n, int m)
    : profile_(profile), n_(n), m_(m) {
  require(n >= 1 && n <= kMaxDim, ErrorCode::InvalidArgument, "manufactured solution: bad dimension");
  require(m >= 1, ErrorCode::InvalidArgument, "manufactured solution: bad order");
}

double ManufacturedFunction::profile_derivative(double t, int p) const {
  using std::numbers::pi;
  const double shift = p * pi / 2.0;
  switch (profile_) {
    case Profile::Sin:
      return std::pow(pi, p) * std::sin(pi * t + shift);
    case Profile::Sin2:
      // sin^2(pi t) = 1/2 - cos(2 pi t) / 2
      if (p == 0) return 0.5 - 0.5 * std::cos(2.0 * pi * t);
      return -0.5 * std::pow(2.0 * pi, p) * std::cos(2.0 * pi * t + shift);
    case Profile::Sin3:
      // sin^3(x) = (3 sin x - sin 3x) / 4
      return 0.25 * (3.0 * std::pow(pi, p) * std::sin(pi * t + shift) -
                     std::pow(3.0 * pi, p) * std::sin(3.0 * pi * t + shift));
  }
  return 0.0;
}

double ManufacturedFunction::derivative(const Vec& x, const MultiIndex& beta) const {
  double v = 1.0;
  for (int d = 0; d < n_; ++d) v *= profile_derivative(x[d], beta[d]);
  return v;
}

double ManufacturedFunction::load(const Vec& x) const {
  const MonomialSet& gammas = MonomialSet::get(n_, m_);
  double s = 0.0;
  for (int g = poly_dim(n_, m_ - 1); g < gammas.size(); ++g) {
    MultiIndex twice{};
    for (int d = 0; d < n_; ++d) twice[d] = 2 * gammas[g][d];
    s += multinomial(gammas[g]) * derivative(x, twice);
  }
  return m_ % 2 ? -s : s;
}

}  // namespace vem
