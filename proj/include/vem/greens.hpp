#pragma once

#include "vem/mesh.hpp"
#include "vem/polycalc.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vem {

/// A face functional (w, d^|alpha| v / d nu_e^alpha)_e, with w expanded in the
/// scaled monomial basis of e of the given degree and alpha indexed against
/// e's normal frame. On a vertex the pairing is w(delta) v(delta).
struct FunctionalTerm {
  DomainRef face;
  MultiIndex alpha{};
  int degree = -1;
  Vector weight;

  [[nodiscard]] int order() const { return vem::order(alpha); }
};

/// Volume part (v, volume)_K plus face terms, merged so that each
/// (face, alpha) appears once and sorted by (codim, id, alpha).
struct FunctionalList {
  std::optional<Poly> volume;
  std::vector<FunctionalTerm> terms;

  [[nodiscard]] const FunctionalTerm* find(DomainRef face, const MultiIndex& alpha) const;
  FunctionalList& operator+=(const FunctionalList& other);
  FunctionalList& operator*=(double c);
};

/// Pending piece (sigma, grad^t d_{d1} ... d_{dp} v)_e of the recursion, where
/// t = sigma.rank and the d_j are unit directions normal to e.
struct GreenPiece {
  DomainRef face;
  TensorPoly sigma;
  std::vector<Vec> directions;
};

/// Cached L2 projectors onto face and cell monomial bases.
class ProjectorCache {
 public:
  explicit ProjectorCache(const PolytopalMesh& mesh) : mesh_(mesh) {}
  /// Coefficients of the L2 projection of the restriction of p to d onto
  /// M_degree(d).
  Vector project(DomainRef d, int degree, const Poly& p);
  const ScaledMonomialBasis& basis(DomainRef d, int degree);
  const QuadratureSet& rule(DomainRef d, int exactness);

 private:
  struct Entry {
    ScaledMonomialBasis basis;
    QuadratureSet quad;
    Matrix values;
    Eigen::LDLT<Matrix> mass;
  };
  Entry& entry(DomainRef d, int degree);
  const PolytopalMesh& mesh_;
  std::map<std::pair<DomainRef, int>, Entry> entries_;
  std::map<std::pair<DomainRef, int>, QuadratureSet> rules_;
};

/// One integration-by-parts step on e: normal pieces on e, the surface
/// divergence piece on e, and flux pieces on each boundary face of e.
/// Requires sigma.rank >= 1.
std::vector<GreenPiece> face_green_step(const PolytopalMesh& mesh, const GreenPiece& piece);

/// Expresses (tau, grad^s v)_F, s = tau.rank <= n - codim(F), as face
/// functionals over the closure of F.
FunctionalList face_green_decompose(const PolytopalMesh& mesh, DomainRef face,
                                    const TensorPoly& tau, ProjectorCache* cache = nullptr);

/// Expresses (grad^m q, grad^m v)_K as ((-Delta)^m q, v)_K plus face
/// functionals on F^j(K), j = 1..m, |alpha| <= m - j.
FunctionalList element_green_decompose(const PolytopalMesh& mesh, int cell, const Poly& q, int m,
                                       ProjectorCache* cache = nullptr);

/// Runs the recursion on arbitrary pieces and merges the emitted terms.
FunctionalList resolve_pieces(const PolytopalMesh& mesh, std::vector<GreenPiece> pieces,
                              ProjectorCache& cache);

/// Plate-bending form of the m = 2 identity, written out with the bending
/// moment, twisting moment and shear force.
FunctionalList h2_explicit(const PolytopalMesh& mesh, int cell, const Poly& q,
                           ProjectorCache* cache = nullptr);

/// Written-out m = n = 3 identity for q of degree <= 3.
FunctionalList h3_lowest_explicit(const PolytopalMesh& mesh, int cell, const Poly& q,
                                  ProjectorCache* cache = nullptr);

struct ConstantMoment {
  DomainRef face;
  MultiIndex beta{};
  FunctionalList list;
};

/// For every F in F^r(K) and every sorted index tuple of rank m - r (given by
/// its exponent beta), the decomposition of (tau_0, grad^{m-r} v)_F with
/// tau_0 the unit tensor at that tuple.
std::vector<ConstantMoment> constant_moment_functionals(const PolytopalMesh& mesh, int cell, int r,
                                                        int m, ProjectorCache* cache = nullptr);

/// Unit tensor of rank sum(beta) with a single 1 at the sorted index tuple of beta.
TensorPoly unit_tensor(int n, const MultiIndex& beta, const Vec& center, double scale);

/// Directions nu_{e,l}, repeated alpha_l times.
std::vector<Vec> alpha_directions(const FaceFrame& frame, const MultiIndex& alpha);

/// Assembles the functional list against a smooth v by quadrature.
double pair_with(const PolytopalMesh& mesh, int cell, const FunctionalList& list,
                 const SmoothFunction& v, int exactness);

std::string to_json(const FunctionalList& list);

}  // namespace vem
