#pragma once

#include "vem/element.hpp"
#include "vem/mesh.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <vector>

namespace vem {

/// Global identity of a dof: (domain, alpha, monomial) in the global face frame.
struct GlobalDofKey {
  DomainRef domain;
  MultiIndex alpha{};
  int monomial = 0;
  auto operator<=>(const GlobalDofKey&) const = default;
};

/// Face dofs first (codim, id, alpha, monomial), then cell moments by cell.
/// Dofs on boundary faces are constrained to zero and eliminated.
struct GlobalDofMap {
  int m = 0;
  int k = 0;
  std::vector<GlobalDofKey> keys;
  std::vector<char> constrained;
  std::vector<int> free_index;  // -1 for constrained dofs
  std::vector<std::vector<int>> local_to_global;

  [[nodiscard]] int num_global() const { return static_cast<int>(keys.size()); }
  [[nodiscard]] int num_free() const;
};

GlobalDofMap build_dof_map(const PolytopalMesh& mesh, int m, int k);

/// Runs fn(i) for i in [0, count) on a pool of threads; rethrows the first error.
void parallel_for(int count, const std::function<void(int)>& fn, int threads = 0);

std::vector<ElementOperators> build_elements(const PolytopalMesh& mesh, int m, int k, int threads = 0);

using SparseMatrix = Eigen::SparseMatrix<double>;

struct LinearSystem {
  SparseMatrix A;  // free dofs only
  Vector b;
};

LinearSystem assemble(const PolytopalMesh& mesh, const GlobalDofMap& map,
                      const std::vector<ElementOperators>& ops,
                      const std::function<double(const Vec&)>& f, int load_exactness);

struct SolverSettings {
  double rel_tol = 1e-12;
  int max_iterations = 0;     // 0: 10 * size + 100
  int dense_threshold = 2000; // dense factorization below this size
  bool force_cg = false;
};

struct SolveResult {
  Vector x;
  int iterations = 0;
  double residual = 0.0;  // ||b - A x|| / ||b||
  bool used_cg = false;
};

SolveResult solve(const LinearSystem& system, const SolverSettings& settings = {});

/// Full global vector (constrained entries zero) from the free solution.
Vector expand_solution(const GlobalDofMap& map, const Vector& free);
Vector gather_local(const GlobalDofMap& map, int cell, const Vector& global);

struct ErrorNorms {
  double hm = 0.0;  // broken H^m seminorm of u - Pi_h u_h
  double l2 = 0.0;
};

ErrorNorms evaluate_errors(const PolytopalMesh& mesh, const GlobalDofMap& map,
                           const std::vector<ElementOperators>& ops, const Vector& global,
                           const SmoothFunction& u, int exactness);

/// Largest normalized L2 norm over interior facets of the projected jumps
/// Q_{k-(2m-1-s)} [d^beta Pi_h u_h], |beta| = s < m.
double jump_moments(const PolytopalMesh& mesh, const GlobalDofMap& map,
                    const std::vector<ElementOperators>& ops, const Vector& global);

}  // namespace vem
