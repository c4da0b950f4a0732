#pragma once

#include "vem/common.hpp"
#include "vem/mesh.hpp"

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace vem {

/// Exponents of all monomials of total degree <= k in d variables, graded
/// lexicographic (degree first, then first variable descending). Sets of
/// lower degree are prefixes of higher ones.
class MonomialSet {
 public:
  static const MonomialSet& get(int nvars, int degree);

  [[nodiscard]] int nvars() const { return nvars_; }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] int size() const { return static_cast<int>(exponents_.size()); }
  [[nodiscard]] const MultiIndex& operator[](int i) const { return exponents_[i]; }
  [[nodiscard]] std::span<const MultiIndex> exponents() const { return exponents_; }
  /// Position of `a`, or -1 when it is not in the set.
  [[nodiscard]] int index_of(const MultiIndex& a) const;
  /// Index of a - e_var, or -1 when a[var] == 0.
  [[nodiscard]] int lowered(int i, int var) const { return down_[i][var]; }

 private:
  MonomialSet(int nvars, int degree);
  int nvars_ = 0;
  int degree_ = -1;
  std::vector<MultiIndex> exponents_;
  std::vector<std::array<int, kMaxDim>> down_;
};

/// Values of all monomials xi^a of `set`.
Vector monomial_values(const MonomialSet& set, const Vec& xi);
/// Values of d^beta/dx^beta of (x - c)^a / h^|a| at the point with local
/// coordinates xi, for every exponent a in `set`.
Vector monomial_derivative_values(const MonomialSet& set, const Vec& xi, const MultiIndex& beta,
                                  double scale);

/// Scalar polynomial in cell-scaled coordinates (x - center) / scale.
///
/// `degree` is a storage degree: derivatives lower it by exactly one and a
/// negative degree means the polynomial is structurally zero.
struct Poly {
  int nvars = 0;
  int degree = -1;
  Vec center;
  double scale = 1.0;
  Vector coeffs;

  static Poly zero(int nvars, int degree, const Vec& center, double scale);
  static Poly monomial(int nvars, int degree, int index, const Vec& center, double scale);

  [[nodiscard]] bool structurally_zero() const { return degree < 0; }
  [[nodiscard]] double operator()(const Vec& x) const;
  [[nodiscard]] double derivative_at(const Vec& x, const MultiIndex& beta) const;
  [[nodiscard]] Poly derivative(int var) const;
  [[nodiscard]] Poly derivative(const MultiIndex& beta) const;
  /// Pads with zeros or drops coefficients above `d`.
  [[nodiscard]] Poly with_degree(int d) const;

  Poly& operator+=(const Poly& other);
  Poly& operator*=(double c);
};

/// Polynomial tensor of rank s with n^s components, last index fastest.
/// Storage is dense and unsymmetrized.
struct TensorPoly {
  int n = 0;
  int rank = 0;
  std::vector<Poly> comps;

  static TensorPoly scalar(Poly p);
  static TensorPoly zero(int n, int rank, int degree, const Vec& center, double scale);

  [[nodiscard]] int degree() const { return comps.front().degree; }
  [[nodiscard]] int size() const { return static_cast<int>(comps.size()); }

  /// Appends the derivative index last: (grad T)_{I,b} = d_b T_I.
  [[nodiscard]] TensorPoly grad() const;
  /// Contracts the last index with a constant vector: (T nu)_I = sum_b T_{I,b} nu_b.
  [[nodiscard]] TensorPoly contract_last(const Vec& nu) const;
  /// (div T)_I = sum_b d_b T_{I,b}.
  [[nodiscard]] TensorPoly div() const;
  [[nodiscard]] Vector evaluate(const Vec& x) const;

  TensorPoly& operator+=(const TensorPoly& other);
  TensorPoly& operator*=(double c);
};

/// Flat component index of a rank-s index tuple in n dimensions.
int tensor_offset(std::span<const int> indices, int n);
/// Index tuple of a flat component index.
std::vector<int> tensor_indices(int offset, int n, int rank);

TensorPoly nabla_m(const Poly& p, int m);
Poly laplacian(const Poly& p);

/// Surface gradient on a face with the given normal frame: grad then project
/// the new index onto the tangent space.
TensorPoly surface_grad(const TensorPoly& p, std::span<const Vec> normals);
/// (div_F T)_I = sum_{b,c} P_{bc} d_c T_{I,b}; throws for rank 0.
TensorPoly surface_div(const TensorPoly& t, std::span<const Vec> normals);
inline TensorPoly surface_grad(const TensorPoly& p, const FaceFrame& f) {
  return surface_grad(p, f.normals);
}
inline TensorPoly surface_div(const TensorPoly& t, const FaceFrame& f) {
  return surface_div(t, f.normals);
}

/// Products of directional derivatives, prod_j (d_j . grad), expanded into
/// partial derivatives d^beta with coefficients.
std::vector<std::pair<MultiIndex, double>> directional_expansion(std::span<const Vec> directions,
                                                                 int nvars);

// --- Quadrature ---

/// Rule on the unit simplex in barycentric coordinates; weights sum to 1/d!.
struct QuadratureRule {
  int dim = 0;
  int exactness = 0;
  std::vector<std::array<double, kMaxDim + 1>> barycentric;
  std::vector<double> weights;
};

/// Grundmann-Moller rule of odd degree >= exactness (cached, thread safe).
const QuadratureRule& grundmann_moller(int dim, int exactness);

struct QuadratureSet {
  std::vector<Vec> points;
  std::vector<double> weights;
  [[nodiscard]] int size() const { return static_cast<int>(points.size()); }
};

QuadratureSet quadrature(std::span<const Simplex> fan, int exactness);
QuadratureSet quadrature(const PolytopalMesh& mesh, DomainRef d, int exactness);

double integrate(const QuadratureSet& q, const std::function<double(const Vec&)>& f);
/// Integrates every component; rejects rules below the polynomial degree.
Vector integrate(const TensorPoly& p, const QuadratureSet& q, int exactness);

// --- Scaled monomial bases ---

/// Scaled monomials on a cell or face. Face variables are
/// xi_i = t_i . (x - x_F) / h_F; a vertex carries the single function 1.
class ScaledMonomialBasis {
 public:
  ScaledMonomialBasis(Vec center, double scale, std::vector<Vec> tangents, int degree);
  static ScaledMonomialBasis for_domain(const PolytopalMesh& mesh, DomainRef d, int degree);

  [[nodiscard]] int dim() const { return static_cast<int>(tangents_.size()); }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] int size() const { return set_->size(); }
  [[nodiscard]] const MonomialSet& monomials() const { return *set_; }
  [[nodiscard]] const Vec& center() const { return center_; }
  [[nodiscard]] double scale() const { return scale_; }

  [[nodiscard]] Vec local(const Vec& x) const;
  [[nodiscard]] Vector values(const Vec& x) const;
  /// Values at every quadrature point, one column per point.
  [[nodiscard]] Matrix values(const QuadratureSet& q) const;

 private:
  Vec center_;
  double scale_ = 1.0;
  std::vector<Vec> tangents_;
  int degree_ = 0;
  const MonomialSet* set_ = nullptr;
};

Matrix mass_matrix(const ScaledMonomialBasis& basis, const QuadratureSet& q);
/// Moments (f, phi_i) for every basis function.
Vector moments(const ScaledMonomialBasis& basis, const QuadratureSet& q,
               const std::function<double(const Vec&)>& f);
/// Coefficients of the L2 projection of f onto the basis span.
Vector project_L2(const ScaledMonomialBasis& basis, const QuadratureSet& q,
                  const std::function<double(const Vec&)>& f);

// --- Smooth functions with analytic derivatives ---

class SmoothFunction {
 public:
  virtual ~SmoothFunction() = default;
  [[nodiscard]] virtual double derivative(const Vec& x, const MultiIndex& beta) const = 0;
  [[nodiscard]] double operator()(const Vec& x) const { return derivative(x, MultiIndex{}); }
};

class PolyFunction final : public SmoothFunction {
 public:
  explicit PolyFunction(Poly p) : p_(std::move(p)) {}
  [[nodiscard]] double derivative(const Vec& x, const MultiIndex& beta) const override {
    return p_.derivative_at(x, beta);
  }
  [[nodiscard]] const Poly& poly() const { return p_; }

 private:
  Poly p_;
};

/// sum_beta c_beta d^beta f(x) for an expansion from directional_expansion.
double expanded_derivative(const SmoothFunction& f, const Vec& x,
                           std::span<const std::pair<MultiIndex, double>> expansion);

}  // namespace vem
