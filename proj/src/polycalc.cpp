#include "vem/polycalc.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace vem {

// --- MonomialSet ---

MonomialSet::MonomialSet(int nvars, int degree) : nvars_(nvars), degree_(degree) {
  MultiIndex a{};
  std::function<void(int, int)> fill = [&](int var, int remaining) {
    if (var == nvars_ - 1) {
      a[var] = remaining;
      exponents_.push_back(a);
      a[var] = 0;
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      a[var] = e;
      fill(var + 1, remaining - e);
    }
    a[var] = 0;
  };
  for (int d = 0; d <= degree; ++d) {
    if (nvars == 0) {
      if (d == 0) exponents_.push_back(MultiIndex{});
      continue;
    }
    fill(0, d);
  }
  down_.resize(exponents_.size());
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    for (int v = 0; v < kMaxDim; ++v) {
      down_[i][v] = -1;
      if (v < nvars && exponents_[i][v] > 0) {
        MultiIndex b = exponents_[i];
        --b[v];
        down_[i][v] = index_of(b);
      }
    }
  }
}

int MonomialSet::index_of(const MultiIndex& a) const {
  const int d = order(a);
  if (d > degree_) return -1;
  const int start = poly_dim(nvars_, d - 1);
  const int stop = poly_dim(nvars_, d);
  for (int i = start; i < stop; ++i)
    if (exponents_[i] == a) return i;
  return -1;
}

const MonomialSet& MonomialSet::get(int nvars, int degree) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<MonomialSet>> cache;
  require(nvars >= 0 && nvars <= kMaxDim, ErrorCode::InvalidArgument, "monomials: bad variable count");
  const std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{nvars, std::max(degree, -1)}];
  if (!slot) slot.reset(new MonomialSet(nvars, degree));
  return *slot;
}

namespace {

// pw[v][e] = xi_v^e for e <= degree.
std::array<std::array<double, 32>, kMaxDim> power_table(const Vec& xi, int nvars, int degree) {
  require(degree < 32, ErrorCode::InvalidArgument, "polynomial degree too large");
  std::array<std::array<double, 32>, kMaxDim> pw{};
  for (int v = 0; v < nvars; ++v) {
    pw[v][0] = 1.0;
    for (int e = 1; e <= degree; ++e) pw[v][e] = pw[v][e - 1] * xi[v];
  }
  return pw;
}

double falling(int a, int b) {
  double r = 1.0;
  for (int i = 0; i < b; ++i) r *= a - i;
  return r;
}

}  // namespace

Vector monomial_values(const MonomialSet& set, const Vec& xi) {
  Vector out(set.size());
  const auto pw = power_table(xi, set.nvars(), std::max(set.degree(), 0));
  for (int i = 0; i < set.size(); ++i) {
    double v = 1.0;
    for (int d = 0; d < set.nvars(); ++d) v *= pw[d][set[i][d]];
    out[i] = v;
  }
  return out;
}

Vector monomial_derivative_values(const MonomialSet& set, const Vec& xi, const MultiIndex& beta,
                                  double scale) {
  Vector out = Vector::Zero(set.size());
  const auto pw = power_table(xi, set.nvars(), std::max(set.degree(), 0));
  const double factor = std::pow(scale, -order(beta));
  for (int i = 0; i < set.size(); ++i) {
    const MultiIndex& a = set[i];
    double v = factor;
    for (int d = 0; d < set.nvars() && v != 0.0; ++d) {
      if (a[d] < beta[d]) {
        v = 0.0;
        break;
      }
      v *= falling(a[d], beta[d]) * pw[d][a[d] - beta[d]];
    }
    out[i] = v;
  }
  return out;
}

// --- Poly ---

Poly Poly::zero(int nvars, int degree, const Vec& center, double scale) {
  Poly p;
  p.nvars = nvars;
  p.degree = std::max(degree, -1);
  p.center = center;
  p.scale = scale;
  p.coeffs = Vector::Zero(poly_dim(nvars, degree));
  return p;
}

Poly Poly::monomial(int nvars, int degree, int index, const Vec& center, double scale) {
  Poly p = zero(nvars, degree, center, scale);
  p.coeffs[index] = 1.0;
  return p;
}

double Poly::operator()(const Vec& x) const {
  if (degree < 0) return 0.0;
  const Vec xi = (x - center) / scale;
  return monomial_values(MonomialSet::get(nvars, degree), xi).dot(coeffs);
}

double Poly::derivative_at(const Vec& x, const MultiIndex& beta) const {
  if (degree < order(beta)) return 0.0;
  const Vec xi = (x - center) / scale;
  return monomial_derivative_values(MonomialSet::get(nvars, degree), xi, beta, scale).dot(coeffs);
}

Poly Poly::derivative(int var) const {
  if (degree < 0) return *this;
  Poly out = zero(nvars, degree - 1, center, scale);
  const MonomialSet& set = MonomialSet::get(nvars, degree);
  for (int i = 0; i < set.size(); ++i) {
    const int j = set.lowered(i, var);
    if (j >= 0) out.coeffs[j] += coeffs[i] * set[i][var] / scale;
  }
  return out;
}

Poly Poly::derivative(const MultiIndex& beta) const {
  Poly out = *this;
  for (int v = 0; v < nvars; ++v)
    for (int e = 0; e < beta[v]; ++e) out = out.derivative(v);
  return out;
}

Poly Poly::with_degree(int d) const {
  Poly out = zero(nvars, d, center, scale);
  const int common = std::min<int>(static_cast<int>(coeffs.size()), static_cast<int>(out.coeffs.size()));
  out.coeffs.head(common) = coeffs.head(common);
  return out;
}

Poly& Poly::operator+=(const Poly& other) {
  if (other.degree < 0) return *this;
  if (degree < 0) {
    *this = other;
    return *this;
  }
  if (other.degree > degree) *this = with_degree(other.degree);
  coeffs.head(other.coeffs.size()) += other.coeffs;
  return *this;
}

Poly& Poly::operator*=(double c) {
  coeffs *= c;
  return *this;
}

// --- TensorPoly ---

int tensor_offset(std::span<const int> indices, int n) {
  int off = 0;
  for (int i : indices) off = off * n + i;
  return off;
}

std::vector<int> tensor_indices(int offset, int n, int rank) {
  std::vector<int> idx(rank);
  for (int i = rank - 1; i >= 0; --i) {
    idx[i] = offset % n;
    offset /= n;
  }
  return idx;
}

TensorPoly TensorPoly::scalar(Poly p) {
  TensorPoly t;
  t.n = p.nvars;
  t.rank = 0;
  t.comps.push_back(std::move(p));
  return t;
}

TensorPoly TensorPoly::zero(int n, int rank, int degree, const Vec& center, double scale) {
  TensorPoly t;
  t.n = n;
  t.rank = rank;
  int count = 1;
  for (int i = 0; i < rank; ++i) count *= n;
  t.comps.assign(count, Poly::zero(n, degree, center, scale));
  return t;
}

TensorPoly TensorPoly::grad() const {
  TensorPoly out;
  out.n = n;
  out.rank = rank + 1;
  out.comps.reserve(comps.size() * n);
  for (const auto& c : comps)
    for (int b = 0; b < n; ++b) out.comps.push_back(c.derivative(b));
  return out;
}

TensorPoly TensorPoly::contract_last(const Vec& nu) const {
  require(rank >= 1, ErrorCode::InvalidArgument, "contraction of a rank-0 tensor");
  TensorPoly out;
  out.n = n;
  out.rank = rank - 1;
  const int count = size() / n;
  for (int i = 0; i < count; ++i) {
    Poly acc = comps[i * n];
    acc *= nu[0];
    for (int b = 1; b < n; ++b) {
      Poly term = comps[i * n + b];
      term *= nu[b];
      acc += term;
    }
    out.comps.push_back(std::move(acc));
  }
  return out;
}

TensorPoly TensorPoly::div() const {
  require(rank >= 1, ErrorCode::InvalidArgument, "divergence of a rank-0 tensor");
  TensorPoly out;
  out.n = n;
  out.rank = rank - 1;
  const int count = size() / n;
  for (int i = 0; i < count; ++i) {
    Poly acc = comps[i * n].derivative(0);
    for (int b = 1; b < n; ++b) acc += comps[i * n + b].derivative(b);
    out.comps.push_back(std::move(acc));
  }
  return out;
}

Vector TensorPoly::evaluate(const Vec& x) const {
  Vector out(size());
  for (int i = 0; i < size(); ++i) out[i] = comps[i](x);
  return out;
}

TensorPoly& TensorPoly::operator+=(const TensorPoly& other) {
  require(other.rank == rank && other.n == n, ErrorCode::InvalidArgument, "tensor rank mismatch");
  for (int i = 0; i < size(); ++i) comps[i] += other.comps[i];
  return *this;
}

TensorPoly& TensorPoly::operator*=(double c) {
  for (auto& p : comps) p *= c;
  return *this;
}

TensorPoly nabla_m(const Poly& p, int m) {
  TensorPoly t = TensorPoly::scalar(p);
  for (int i = 0; i < m; ++i) t = t.grad();
  return t;
}

Poly laplacian(const Poly& p) {
  Poly acc = p.derivative(0).derivative(0);
  for (int i = 1; i < p.nvars; ++i) acc += p.derivative(i).derivative(i);
  return acc;
}

namespace {

Matrix projector_from_normals(std::span<const Vec> normals, int n) {
  Matrix p = Matrix::Identity(n, n);
  for (const auto& nu : normals) p -= nu * nu.transpose();
  return p;
}

// sum_c w_c * polys[c], skipping zero weights.
Poly combine(const std::vector<const Poly*>& polys, const Eigen::Ref<const Vector>& w) {
  Poly acc = *polys[0];
  acc *= w[0];
  for (std::size_t c = 1; c < polys.size(); ++c) {
    if (w[c] == 0.0) continue;
    Poly term = *polys[c];
    term *= w[c];
    acc += term;
  }
  return acc;
}

}  // namespace

TensorPoly surface_grad(const TensorPoly& p, std::span<const Vec> normals) {
  const int n = p.n;
  const Matrix proj = projector_from_normals(normals, n);
  const TensorPoly g = p.grad();
  TensorPoly out = g;
  const int count = p.size();
  std::vector<const Poly*> row(n);
  for (int i = 0; i < count; ++i) {
    for (int c = 0; c < n; ++c) row[c] = &g.comps[i * n + c];
    for (int b = 0; b < n; ++b) out.comps[i * n + b] = combine(row, proj.row(b).transpose());
  }
  return out;
}

TensorPoly surface_div(const TensorPoly& t, std::span<const Vec> normals) {
  require(t.rank >= 1, ErrorCode::InvalidArgument, "surface divergence of a rank-0 tensor");
  const int n = t.n;
  const Matrix proj = projector_from_normals(normals, n);
  TensorPoly out;
  out.n = n;
  out.rank = t.rank - 1;
  const int count = t.size() / n;
  for (int i = 0; i < count; ++i) {
    Poly acc = Poly::zero(n, -1, t.comps[0].center, t.comps[0].scale);
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        if (proj(b, c) == 0.0) continue;
        Poly term = t.comps[i * n + b].derivative(c);
        term *= proj(b, c);
        acc += term;
      }
    }
    if (acc.structurally_zero()) acc = Poly::zero(n, t.degree() - 1, t.comps[0].center, t.comps[0].scale);
    out.comps.push_back(std::move(acc));
  }
  return out;
}

std::vector<std::pair<MultiIndex, double>> directional_expansion(std::span<const Vec> directions,
                                                                 int nvars) {
  std::map<MultiIndex, double> terms{{MultiIndex{}, 1.0}};
  for (const auto& d : directions) {
    std::map<MultiIndex, double> next;
    for (const auto& [beta, c] : terms) {
      for (int i = 0; i < nvars; ++i) {
        if (d[i] == 0.0) continue;
        MultiIndex b = beta;
        ++b[i];
        next[b] += c * d[i];
      }
    }
    terms = std::move(next);
  }
  return {terms.begin(), terms.end()};
}

// --- Quadrature ---

namespace {

void compositions(int parts, int total, std::vector<int>& cur,
                  const std::function<void(const std::vector<int>&)>& visit) {
  if (static_cast<int>(cur.size()) == parts - 1) {
    cur.push_back(total);
    visit(cur);
    cur.pop_back();
    return;
  }
  for (int e = total; e >= 0; --e) {
    cur.push_back(e);
    compositions(parts, total - e, cur, visit);
    cur.pop_back();
  }
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

const QuadratureRule& grundmann_moller(int dim, int exactness) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<QuadratureRule>> cache;
  require(dim >= 0 && dim <= kMaxDim, ErrorCode::InvalidArgument, "quadrature: bad simplex dimension");
  const int s = std::max(0, (exactness) / 2);
  const std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{dim, s}];
  if (slot) return *slot;
  auto rule = std::make_unique<QuadratureRule>();
  rule->dim = dim;
  const int d = 2 * s + 1;
  rule->exactness = d;
  if (dim == 0) {
    rule->barycentric.push_back({1.0, 0.0, 0.0, 0.0});
    rule->weights.push_back(1.0);
  } else {
    for (int i = 0; i <= s; ++i) {
      const double denom = d + dim - 2 * i;
      double w = std::pow(2.0, -2 * s) * std::pow(denom, d) / factorial(i) / factorial(d + dim - i);
      if (i % 2) w = -w;
      std::vector<int> cur;
      compositions(dim + 1, s - i, cur, [&](const std::vector<int>& beta) {
        std::array<double, kMaxDim + 1> b{};
        for (int j = 0; j <= dim; ++j) b[j] = (2.0 * beta[j] + 1.0) / denom;
        rule->barycentric.push_back(b);
        rule->weights.push_back(w);
      });
    }
  }
  slot = std::move(rule);
  return *slot;
}

QuadratureSet quadrature(std::span<const Simplex> fan, int exactness) {
  QuadratureSet q;
  for (const auto& s : fan) {
    const QuadratureRule& rule = grundmann_moller(s.dim, exactness);
    const double scale = factorial(s.dim) * s.measure;
    for (std::size_t p = 0; p < rule.weights.size(); ++p) {
      Vec x = rule.barycentric[p][0] * s.vertices[0];
      for (int j = 1; j <= s.dim; ++j) x += rule.barycentric[p][j] * s.vertices[j];
      q.points.push_back(x);
      q.weights.push_back(rule.weights[p] * scale);
    }
  }
  return q;
}

QuadratureSet quadrature(const PolytopalMesh& mesh, DomainRef d, int exactness) {
  return quadrature(mesh.fan(d), exactness);
}

double integrate(const QuadratureSet& q, const std::function<double(const Vec&)>& f) {
  double s = 0.0;
  for (int i = 0; i < q.size(); ++i) s += q.weights[i] * f(q.points[i]);
  return s;
}

Vector integrate(const TensorPoly& p, const QuadratureSet& q, int exactness) {
  require(exactness >= p.degree(), ErrorCode::InvalidArgument,
          "quadrature exactness below the polynomial degree");
  Vector out = Vector::Zero(p.size());
  for (int i = 0; i < q.size(); ++i) out += q.weights[i] * p.evaluate(q.points[i]);
  return out;
}

// --- ScaledMonomialBasis ---

ScaledMonomialBasis::ScaledMonomialBasis(Vec center, double scale, std::vector<Vec> tangents,
                                         int degree)
    : center_(std::move(center)),
      scale_(scale > 0 ? scale : 1.0),
      tangents_(std::move(tangents)),
      degree_(degree),
      set_(&MonomialSet::get(static_cast<int>(tangents_.size()), degree)) {}

ScaledMonomialBasis ScaledMonomialBasis::for_domain(const PolytopalMesh& mesh, DomainRef d,
                                                    int degree) {
  if (d.codim == 0) {
    const int n = mesh.dim();
    std::vector<Vec> axes;
    for (int i = 0; i < n; ++i) axes.push_back(Vec::Unit(n, i));
    return {mesh.centroid(d), mesh.diameter(d), std::move(axes), degree};
  }
  const FaceFrame& f = mesh.face(d).frame;
  return {f.centroid, f.diameter, f.tangents, degree};
}

Vec ScaledMonomialBasis::local(const Vec& x) const {
  Vec xi(dim());
  const Vec d = x - center_;
  for (int i = 0; i < dim(); ++i) xi[i] = tangents_[i].dot(d) / scale_;
  return xi;
}

Vector ScaledMonomialBasis::values(const Vec& x) const { return monomial_values(*set_, local(x)); }

Matrix ScaledMonomialBasis::values(const QuadratureSet& q) const {
  Matrix v(size(), q.size());
  for (int i = 0; i < q.size(); ++i) v.col(i) = values(q.points[i]);
  return v;
}

Matrix mass_matrix(const ScaledMonomialBasis& basis, const QuadratureSet& q) {
  const Matrix v = basis.values(q);
  const Eigen::Map<const Vector> w(q.weights.data(), q.size());
  return v * w.asDiagonal() * v.transpose();
}

Vector moments(const ScaledMonomialBasis& basis, const QuadratureSet& q,
               const std::function<double(const Vec&)>& f) {
  Vector out = Vector::Zero(basis.size());
  for (int i = 0; i < q.size(); ++i) out += q.weights[i] * f(q.points[i]) * basis.values(q.points[i]);
  return out;
}

Vector project_L2(const ScaledMonomialBasis& basis, const QuadratureSet& q,
                  const std::function<double(const Vec&)>& f) {
  return mass_matrix(basis, q).ldlt().solve(moments(basis, q, f));
}

double expanded_derivative(const SmoothFunction& f, const Vec& x,
                           std::span<const std::pair<MultiIndex, double>> expansion) {
  double s = 0.0;
  for (const auto& [beta, c] : expansion) s += c * f.derivative(x, beta);
  return s;
}

}  // namespace vem
