#pragma once

#include "vem/greens.hpp"
#include "vem/mesh.hpp"
#include "vem/polycalc.hpp"

#include <functional>
#include <string>
#include <vector>

namespace vem {

/// How the load (f, v_h) is discretized, fixed by (m, k).
enum class LoadRegime {
  Projection,   // m <= k <= 2m - 1: (f, Pi v)
  QmMinus1,     // 2m <= k <= 3m - 2: (f, Q_{m-1} v)
  QkMinus2m,    // k >= 3m - 1: (f, Q_{k-2m} v)
};

LoadRegime load_regime(int m, int k);
const char* regime_name(LoadRegime r);

struct DofDescriptor {
  enum class Kind { CellMoment, FaceMoment };
  Kind kind = Kind::CellMoment;
  DomainRef domain;      // the cell itself for cell moments
  MultiIndex alpha{};    // against the face normal frame
  int degree = 0;        // degree of the moment space
  int monomial = 0;      // index into that space
  double scale = 1.0;    // dof = scale * (d^alpha v / d nu^alpha, m)_D
};

/// Local dofs: cell moments, then faces by codimension and id, then alpha in
/// graded-lex order, then monomial index.
std::vector<DofDescriptor> enumerate_dofs(const PolytopalMesh& mesh, int cell, int m, int k);

/// Dof count from the lattice sizes alone.
int dof_count(const PolytopalMesh& mesh, int cell, int m, int k);

double dof_apply(const PolytopalMesh& mesh, const DofDescriptor& dof, const SmoothFunction& w,
                 int exactness);
Vector dof_values(const PolytopalMesh& mesh, std::span<const DofDescriptor> dofs,
                  const SmoothFunction& w, int exactness);

struct ElementOperators {
  int cell = 0;
  int n = 0;
  int m = 0;
  int k = 0;
  double h = 0.0;
  double measure = 0.0;
  Vec centroid;
  std::vector<DofDescriptor> dofs;
  Matrix D;          // dofs x polys: dof values of the cell monomials
  Matrix B;          // polys x dofs: Green rows, constraint rows replaced
  Matrix G_true;     // gram of grad^m on the monomials
  Matrix G_tilde;    // G_true with constraint rows, = B D
  Matrix Pi_star;    // polys x dofs
  Matrix Pi_dof;     // D Pi_star
  Matrix S;
  Matrix A;
  Matrix mass;       // M_k(K) mass matrix
  double pivot_ratio = 0.0;

  [[nodiscard]] int num_dofs() const { return static_cast<int>(dofs.size()); }
  [[nodiscard]] int num_polys() const { return static_cast<int>(D.cols()); }
  /// Pi v as a polynomial in the cell monomials.
  [[nodiscard]] Poly projection(const Vector& local_dofs) const;
};

/// D, B, G_true, G_tilde, Pi_star and Pi_dof.
ElementOperators build_projector(const PolytopalMesh& mesh, int cell, int m, int k);
Matrix stabilization_matrix(const ElementOperators& ops);
Matrix local_stiffness(const ElementOperators& ops);
/// Everything above plus S and A.
ElementOperators build_element(const PolytopalMesh& mesh, int cell, int m, int k);

/// Q_{m-1} of a virtual function from its dofs, as monomial coefficients of
/// degree m - 1 (one column per local dof). Only valid for 2m <= k <= 3m - 2.
Matrix q_mminus1_matrix(const ElementOperators& ops);
Poly q_mminus1(const ElementOperators& ops, const Vector& local_dofs);

Vector local_load(const PolytopalMesh& mesh, const ElementOperators& ops,
                  const std::function<double(const Vec&)>& f, int exactness);

/// Polynomial dof-to-monomial-space pairing of a Green decomposition: the row
/// r with r . dofs(v) = assembled value of the list against v.
Vector functional_row(const PolytopalMesh& mesh, int cell, std::span<const DofDescriptor> dofs,
                      const FunctionalList& list);

std::string element_to_json(const ElementOperators& ops);

/// Tensor-product manufactured solution on the unit square or cube with
/// closed-form derivatives of every order and f = (-Delta)^m u.
class ManufacturedFunction final : public SmoothFunction {
 public:
  enum class Profile { Sin, Sin2, Sin3 };
  ManufacturedFunction(Profile profile, int n, int m);

  [[nodiscard]] double derivative(const Vec& x, const MultiIndex& beta) const override;
  [[nodiscard]] double load(const Vec& x) const;
  [[nodiscard]] Profile profile() const { return profile_; }
  [[nodiscard]] int dim() const { return n_; }
  [[nodiscard]] int order() const { return m_; }

 private:
  [[nodiscard]] double profile_derivative(double t, int p) const;
  Profile profile_;
  int n_;
  int m_;
};

}  // namespace vem
