#include "vem/greens.hpp"

#include <json.hpp>

#include <cmath>

namespace vem {

// --- FunctionalList ---

const FunctionalTerm* FunctionalList::find(DomainRef face, const MultiIndex& alpha) const {
  for (const auto& t : terms)
    if (t.face == face && t.alpha == alpha) return &t;
  return nullptr;
}

namespace {

Vector padded(const Vector& v, int size) {
  Vector out = Vector::Zero(std::max<int>(size, static_cast<int>(v.size())));
  out.head(v.size()) = v;
  return out;
}

bool term_less(const FunctionalTerm& a, const FunctionalTerm& b) {
  if (a.face != b.face) return a.face < b.face;
  return a.alpha < b.alpha;
}

}  // namespace

FunctionalList& FunctionalList::operator+=(const FunctionalList& other) {
  if (other.volume) {
    if (volume)
      *volume += *other.volume;
    else
      volume = other.volume;
  }
  for (const auto& t : other.terms) {
    auto it = std::find_if(terms.begin(), terms.end(), [&](const FunctionalTerm& s) {
      return s.face == t.face && s.alpha == t.alpha;
    });
    if (it == terms.end()) {
      terms.push_back(t);
      continue;
    }
    const int size = static_cast<int>(std::max(it->weight.size(), t.weight.size()));
    it->weight = padded(it->weight, size) + padded(t.weight, size);
    it->degree = std::max(it->degree, t.degree);
  }
  std::sort(terms.begin(), terms.end(), term_less);
  return *this;
}

FunctionalList& FunctionalList::operator*=(double c) {
  if (volume) *volume *= c;
  for (auto& t : terms) t.weight *= c;
  return *this;
}

// --- ProjectorCache ---

ProjectorCache::Entry& ProjectorCache::entry(DomainRef d, int degree) {
  const auto key = std::make_pair(d, degree);
  auto it = entries_.find(key);
  if (it != entries_.end()) return it->second;
  ScaledMonomialBasis basis = ScaledMonomialBasis::for_domain(mesh_, d, degree);
  QuadratureSet quad = quadrature(mesh_, d, 2 * degree);
  Matrix values = basis.values(quad);
  const Eigen::Map<const Vector> w(quad.weights.data(), quad.size());
  Matrix mass = values * w.asDiagonal() * values.transpose();
  Entry e{std::move(basis), std::move(quad), std::move(values), Eigen::LDLT<Matrix>(mass)};
  return entries_.emplace(key, std::move(e)).first->second;
}

const ScaledMonomialBasis& ProjectorCache::basis(DomainRef d, int degree) {
  return entry(d, degree).basis;
}

const QuadratureSet& ProjectorCache::rule(DomainRef d, int exactness) {
  const auto key = std::make_pair(d, exactness);
  auto it = rules_.find(key);
  if (it != rules_.end()) return it->second;
  return rules_.emplace(key, quadrature(mesh_, d, exactness)).first->second;
}

Vector ProjectorCache::project(DomainRef d, int degree, const Poly& p) {
  Entry& e = entry(d, degree);
  Vector rhs = Vector::Zero(e.basis.size());
  for (int i = 0; i < e.quad.size(); ++i) rhs += e.quad.weights[i] * p(e.quad.points[i]) * e.values.col(i);
  return e.mass.solve(rhs);
}

// --- recursion ---

namespace {

bool is_zero(const TensorPoly& t) {
  return std::all_of(t.comps.begin(), t.comps.end(),
                     [](const Poly& p) { return p.structurally_zero(); });
}

// Sums ambient polynomials per (face, alpha), then projects onto face bases.
class TermAccumulator {
 public:
  void add(DomainRef face, const MultiIndex& alpha, const Poly& p, double c = 1.0) {
    if (p.structurally_zero() || c == 0.0) return;
    Poly term = p;
    term *= c;
    auto it = polys_.find({face, alpha});
    if (it == polys_.end())
      polys_.emplace(std::make_pair(face, alpha), std::move(term));
    else
      it->second += term;
  }

  void finish(FunctionalList& out, ProjectorCache& cache) const {
    for (const auto& [key, p] : polys_) {
      FunctionalTerm t;
      t.face = key.first;
      t.alpha = key.second;
      t.degree = p.degree;
      t.weight = cache.project(key.first, p.degree, p);
      out.terms.push_back(std::move(t));
    }
    std::sort(out.terms.begin(), out.terms.end(), term_less);
  }

 private:
  std::map<std::pair<DomainRef, MultiIndex>, Poly> polys_;
};

void emit(const PolytopalMesh& mesh, const GreenPiece& piece, TermAccumulator& acc) {
  const FaceFrame& frame = mesh.face(piece.face).frame;
  const int r = frame.codim;
  std::vector<Vec> coords;
  for (const auto& d : piece.directions) {
    Vec c(r);
    for (int l = 0; l < r; ++l) {
      const double v = d.dot(frame.normals[l]);
      c[l] = std::abs(v) < 1e-14 ? 0.0 : v;
    }
    coords.push_back(c);
  }
  for (const auto& [alpha, coef] : directional_expansion(coords, r))
    acc.add(piece.face, alpha, piece.sigma.comps.front(), coef);
}

}  // namespace

std::vector<GreenPiece> face_green_step(const PolytopalMesh& mesh, const GreenPiece& piece) {
  require(piece.sigma.rank >= 1, ErrorCode::InvalidArgument, "green step needs a tensor of rank >= 1");
  require(piece.face.codim >= 1, ErrorCode::InvalidArgument, "green step acts on faces");
  const int n = mesh.dim();
  require(piece.sigma.rank <= n - piece.face.codim, ErrorCode::InvalidArgument,
          "tensor rank exceeds the face dimension (requires s <= n - r)");
  const Face& face = mesh.face(piece.face);
  std::vector<GreenPiece> out;
  for (const auto& nu : face.frame.normals) {
    GreenPiece p{piece.face, piece.sigma.contract_last(nu), piece.directions};
    p.directions.push_back(nu);
    out.push_back(std::move(p));
  }
  TensorPoly div = surface_div(piece.sigma, face.frame.normals);
  div *= -1.0;
  out.push_back({piece.face, std::move(div), piece.directions});
  for (const auto& s : face.subfaces)
    out.push_back({DomainRef{piece.face.codim + 1, s.id}, piece.sigma.contract_last(s.normal),
                   piece.directions});
  return out;
}

FunctionalList resolve_pieces(const PolytopalMesh& mesh, std::vector<GreenPiece> pieces,
                              ProjectorCache& cache) {
  TermAccumulator acc;
  while (!pieces.empty()) {
    GreenPiece p = std::move(pieces.back());
    pieces.pop_back();
    if (is_zero(p.sigma)) continue;
    if (p.sigma.rank == 0) {
      emit(mesh, p, acc);
      continue;
    }
    for (auto& next : face_green_step(mesh, p)) pieces.push_back(std::move(next));
  }
  FunctionalList out;
  acc.finish(out, cache);
  return out;
}

FunctionalList face_green_decompose(const PolytopalMesh& mesh, DomainRef face,
                                    const TensorPoly& tau, ProjectorCache* cache) {
  require(face.codim >= 1 && face.codim <= mesh.dim(), ErrorCode::InvalidArgument,
          "face decomposition needs a face");
  require(tau.rank <= mesh.dim() - face.codim, ErrorCode::InvalidArgument,
          "tensor rank exceeds the face dimension (requires s <= n - r)");
  ProjectorCache local(mesh);
  return resolve_pieces(mesh, {GreenPiece{face, tau, {}}}, cache ? *cache : local);
}

FunctionalList element_green_decompose(const PolytopalMesh& mesh, int cell, const Poly& q, int m,
                                       ProjectorCache* cache) {
  const int n = mesh.dim();
  require(m >= 1, ErrorCode::InvalidArgument, "order m must be positive");
  require(m <= n, ErrorCode::InvalidArgument, "order m exceeds the space dimension (m > n)");
  ProjectorCache local(mesh);
  const Cell& K = mesh.cell(cell);

  // powers[i] = (-Delta)^i q
  std::vector<Poly> powers{q};
  for (int i = 0; i < m; ++i) {
    Poly next = laplacian(powers.back());
    next *= -1.0;
    powers.push_back(std::move(next));
  }

  std::vector<GreenPiece> pieces;
  for (int l = m; l >= 1; --l) {
    const TensorPoly t = nabla_m(powers[m - l], l);
    if (is_zero(t)) continue;
    for (const auto& cf : K.faces) {
      const Vec nu = mesh.outward_normal(cell, cf.face);
      pieces.push_back({DomainRef{1, cf.face}, t.contract_last(nu), {}});
    }
  }
  FunctionalList out = resolve_pieces(mesh, std::move(pieces), cache ? *cache : local);
  if (!powers[m].structurally_zero()) out.volume = powers[m];
  return out;
}

FunctionalList h2_explicit(const PolytopalMesh& mesh, int cell, const Poly& q, ProjectorCache* cache) {
  ProjectorCache local(mesh);
  ProjectorCache& pc = cache ? *cache : local;
  const TensorPoly hess = nabla_m(q, 2);
  const TensorPoly div_hess = hess.div();
  TermAccumulator acc;
  for (const auto& cf : mesh.cell(cell).faces) {
    const Face& F = mesh.face(1, cf.face);
    const DomainRef fref{1, cf.face};
    const Vec nu = mesh.outward_normal(cell, cf.face);
    const Vec& nu1 = F.frame.normals.front();
    const TensorPoly h_nu = hess.contract_last(nu);
    const Poly m_nn = h_nu.contract_last(nu1).comps.front();
    TensorPoly m_nt = h_nu;
    for (int b = 0; b < mesh.dim(); ++b) {
      Poly t = m_nn;
      t *= -nu1[b];
      m_nt.comps[b] += t;
    }
    Poly q_nu = div_hess.contract_last(nu).comps.front();
    q_nu += surface_div(m_nt, F.frame).comps.front();
    acc.add(fref, MultiIndex{1, 0, 0}, m_nn);
    acc.add(fref, MultiIndex{}, q_nu, -1.0);
    for (const auto& e : F.subfaces)
      acc.add(DomainRef{2, e.id}, MultiIndex{}, m_nt.contract_last(e.normal).comps.front());
  }
  FunctionalList out;
  acc.finish(out, pc);
  Poly vol = laplacian(laplacian(q));
  if (!vol.structurally_zero()) out.volume = vol;
  return out;
}

FunctionalList h3_lowest_explicit(const PolytopalMesh& mesh, int cell, const Poly& q,
                                  ProjectorCache* cache) {
  require(mesh.dim() == 3, ErrorCode::InvalidArgument, "the m = n = 3 identity needs a 3D mesh");
  require(q.degree <= 3, ErrorCode::InvalidArgument, "the lowest-order identity needs q in P_3");
  ProjectorCache local(mesh);
  ProjectorCache& pc = cache ? *cache : local;
  const TensorPoly t3 = nabla_m(q, 3);
  TermAccumulator acc;
  for (const auto& cf : mesh.cell(cell).faces) {
    const Face& F = mesh.face(1, cf.face);
    const Vec& nu1 = F.frame.normals.front();
    const TensorPoly tau = t3.contract_last(mesh.outward_normal(cell, cf.face));
    acc.add(DomainRef{1, cf.face}, MultiIndex{2, 0, 0},
            tau.contract_last(nu1).contract_last(nu1).comps.front());
    for (const auto& es : F.subfaces) {
      const Face& e = mesh.face(2, es.id);
      const TensorPoly tau_e = tau.contract_last(es.normal);
      for (int i = 0; i < 2; ++i) {
        const Vec& nui = e.frame.normals[i];
        Poly w = tau_e.contract_last(nui).comps.front();
        Poly extra = tau_e.contract_last(nu1).comps.front();
        extra *= nui.dot(nu1);
        w += extra;
        MultiIndex alpha{};
        alpha[i] = 1;
        acc.add(DomainRef{2, es.id}, alpha, w);
      }
      for (const auto& ds : e.subfaces)
        acc.add(DomainRef{3, ds.id}, MultiIndex{}, tau_e.contract_last(ds.normal).comps.front());
    }
  }
  FunctionalList out;
  acc.finish(out, pc);
  return out;
}

TensorPoly unit_tensor(int n, const MultiIndex& beta, const Vec& center, double scale) {
  const int rank = order(beta);
  TensorPoly t = TensorPoly::zero(n, rank, 0, center, scale);
  std::vector<int> idx;
  for (int v = 0; v < n; ++v)
    for (int e = 0; e < beta[v]; ++e) idx.push_back(v);
  t.comps[tensor_offset(idx, n)].coeffs[0] = 1.0;
  return t;
}

std::vector<ConstantMoment> constant_moment_functionals(const PolytopalMesh& mesh, int cell, int r,
                                                        int m, ProjectorCache* cache) {
  const int n = mesh.dim();
  require(r >= 1 && r <= m && m <= n, ErrorCode::InvalidArgument,
          "constant moments need 1 <= r <= m <= n");
  ProjectorCache local(mesh);
  ProjectorCache& pc = cache ? *cache : local;
  const Cell& K = mesh.cell(cell);
  const int s = m - r;
  const MonomialSet& set = MonomialSet::get(n, s);
  std::vector<ConstantMoment> out;
  for (int f : K.lattice[r]) {
    for (int i = poly_dim(n, s - 1); i < set.size(); ++i) {
      const TensorPoly tau = unit_tensor(n, set[i], K.centroid, K.diameter);
      out.push_back({DomainRef{r, f}, set[i], face_green_decompose(mesh, DomainRef{r, f}, tau, &pc)});
    }
  }
  return out;
}

std::vector<Vec> alpha_directions(const FaceFrame& frame, const MultiIndex& alpha) {
  std::vector<Vec> dirs;
  for (int l = 0; l < frame.codim; ++l)
    for (int e = 0; e < alpha[l]; ++e) dirs.push_back(frame.normals[l]);
  return dirs;
}

double pair_with(const PolytopalMesh& mesh, int cell, const FunctionalList& list,
                 const SmoothFunction& v, int exactness) {
  double total = 0.0;
  if (list.volume) {
    const QuadratureSet q = quadrature(mesh, DomainRef{0, cell}, exactness);
    const Poly& vol = *list.volume;
    total += integrate(q, [&](const Vec& x) { return vol(x) * v(x); });
  }
  for (const auto& t : list.terms) {
    const FaceFrame& frame = mesh.face(t.face).frame;
    const auto expansion = directional_expansion(alpha_directions(frame, t.alpha), mesh.dim());
    const ScaledMonomialBasis basis = ScaledMonomialBasis::for_domain(mesh, t.face, t.degree);
    const QuadratureSet q = quadrature(mesh, t.face, exactness);
    total += integrate(q, [&](const Vec& x) {
      return basis.values(x).dot(t.weight) * expanded_derivative(v, x, expansion);
    });
  }
  return total;
}

std::string to_json(const FunctionalList& list) {
  nlohmann::json j;
  if (list.volume) j["volume"] = std::vector<double>(list.volume->coeffs.begin(), list.volume->coeffs.end());
  j["terms"] = nlohmann::json::array();
  for (const auto& t : list.terms) {
    std::vector<int> alpha(t.alpha.begin(), t.alpha.begin() + t.face.codim);
    j["terms"].push_back({{"codim", t.face.codim},
                          {"face", t.face.id},
                          {"alpha", alpha},
                          {"degree", t.degree},
                          {"weight", std::vector<double>(t.weight.begin(), t.weight.end())}});
  }
  return j.dump(1);
}

}  // namespace vem
