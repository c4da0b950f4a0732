#include "vem/assembly.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace vem {

int GlobalDofMap::num_free() const {
  return static_cast<int>(std::count(constrained.begin(), constrained.end(), 0));
}

GlobalDofMap build_dof_map(const PolytopalMesh& mesh, int m, int k) {
  require(m >= 1 && m <= mesh.dim() && k >= m, ErrorCode::InvalidArgument,
          "dof map needs 1 <= m <= n and k >= m");
  const int n = mesh.dim();
  GlobalDofMap map;
  map.m = m;
  map.k = k;
  std::map<GlobalDofKey, int> lookup;
  auto add = [&](const GlobalDofKey& key, bool fixed) {
    lookup.emplace(key, map.num_global());
    map.keys.push_back(key);
    map.constrained.push_back(fixed ? 1 : 0);
  };
  for (int j = 1; j <= m; ++j) {
    const MonomialSet& alphas = MonomialSet::get(j, m - j);
    for (int f = 0; f < mesh.num_faces(j); ++f) {
      const bool fixed = mesh.face(j, f).boundary;
      for (const auto& alpha : alphas.exponents()) {
        const int deg = k - (2 * m - j - order(alpha));
        for (int l = 0; l < poly_dim(n - j, deg); ++l) add({DomainRef{j, f}, alpha, l}, fixed);
      }
    }
  }
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (int l = 0; l < poly_dim(n, k - 2 * m); ++l) add({DomainRef{0, c}, MultiIndex{}, l}, false);

  map.free_index.assign(map.num_global(), -1);
  int next = 0;
  for (int i = 0; i < map.num_global(); ++i)
    if (!map.constrained[i]) map.free_index[i] = next++;

  map.local_to_global.resize(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    for (const auto& d : enumerate_dofs(mesh, c, m, k)) {
      auto it = lookup.find({d.domain, d.alpha, d.monomial});
      require(it != lookup.end(), ErrorCode::Numerical, "local dof without a global counterpart");
      map.local_to_global[c].push_back(it->second);
    }
  }
  return map;
}

void parallel_for(int count, const std::function<void(int)>& fn, int threads) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, std::max(count, 1));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::vector<ElementOperators> build_elements(const PolytopalMesh& mesh, int m, int k, int threads) {
  std::vector<ElementOperators> ops(mesh.num_cells());
  parallel_for(mesh.num_cells(), [&](int c) { ops[c] = build_element(mesh, c, m, k); }, threads);
  return ops;
}

LinearSystem assemble(const PolytopalMesh& mesh, const GlobalDofMap& map,
                      const std::vector<ElementOperators>& ops,
                      const std::function<double(const Vec&)>& f, int load_exactness) {
  require(static_cast<int>(ops.size()) == mesh.num_cells(), ErrorCode::InvalidArgument,
          "one element operator per cell is required");
  const int nfree = map.num_free();
  std::vector<Vector> loads(ops.size());
  parallel_for(mesh.num_cells(), [&](int c) { loads[c] = local_load(mesh, ops[c], f, load_exactness); });

  std::vector<Eigen::Triplet<double>> triplets;
  LinearSystem sys;
  sys.b = Vector::Zero(nfree);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& l2g = map.local_to_global[c];
    const Matrix& a = ops[c].A;
    require(static_cast<int>(l2g.size()) == a.rows(), ErrorCode::Numerical, "local size mismatch");
    for (int i = 0; i < a.rows(); ++i) {
      require(l2g[i] >= 0 && l2g[i] < map.num_global(), ErrorCode::Numerical, "dof index out of range");
      const int gi = map.free_index[l2g[i]];
      if (gi < 0) continue;
      sys.b[gi] += loads[c][i];
      for (int j = 0; j < a.cols(); ++j) {
        const int gj = map.free_index[l2g[j]];
        if (gj >= 0) triplets.emplace_back(gi, gj, a(i, j));
      }
    }
  }
  sys.A.resize(nfree, nfree);
  sys.A.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

SolveResult solve(const LinearSystem& system, const SolverSettings& settings) {
  SolveResult res;
  const int n = static_cast<int>(system.b.size());
  if (n == 0) return res;
  const double bnorm = system.b.norm();
  if (bnorm == 0.0) {
    res.x = Vector::Zero(n);
    return res;
  }
  if (!settings.force_cg && n < settings.dense_threshold) {
    const Matrix dense(system.A);
    Eigen::LDLT<Matrix> ldlt(dense);
    require(ldlt.info() == Eigen::Success && ldlt.isPositive(), ErrorCode::Solver,
            "dense factorization failed: matrix is not positive definite");
    res.x = ldlt.solve(system.b);
  } else {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    const int budget = settings.max_iterations > 0 ? settings.max_iterations : 10 * n + 100;
    cg.setTolerance(settings.rel_tol);
    cg.setMaxIterations(budget);
    cg.compute(system.A);
    res.x = cg.solve(system.b);
    res.iterations = static_cast<int>(cg.iterations());
    res.used_cg = true;
    require(cg.info() == Eigen::Success, ErrorCode::Solver,
            "conjugate gradient did not converge in " + std::to_string(cg.iterations()) +
                " iterations (relative residual " + std::to_string(cg.error()) + ")");
    // The recursive residual drifts from the true one; restart from the
    // current iterate while that still gains accuracy. A gap of more than
    // 100x is the conditioning floor, which restarting does not lower.
    res.residual = (system.b - system.A * res.x).norm() / bnorm;
    for (int restart = 0; restart < 5 && res.residual > settings.rel_tol && res.residual < 100 * settings.rel_tol &&
                          res.iterations < budget;
         ++restart) {
      cg.setMaxIterations(budget - res.iterations);
      const Vector x = cg.solveWithGuess(system.b, res.x);
      res.iterations += static_cast<int>(cg.iterations());
      const double r = (system.b - system.A * x).norm() / bnorm;
      if (r >= 0.5 * res.residual) break;
      res.x = x;
      res.residual = r;
    }
    return res;
  }
  res.residual = (system.b - system.A * res.x).norm() / bnorm;
  return res;
}

Vector expand_solution(const GlobalDofMap& map, const Vector& free) {
  Vector g = Vector::Zero(map.num_global());
  for (int i = 0; i < map.num_global(); ++i)
    if (map.free_index[i] >= 0 && free.size() > 0) g[i] = free[map.free_index[i]];
  return g;
}

Vector gather_local(const GlobalDofMap& map, int cell, const Vector& global) {
  const auto& l2g = map.local_to_global[cell];
  Vector v(l2g.size());
  for (std::size_t i = 0; i < l2g.size(); ++i) v[i] = global[l2g[i]];
  return v;
}

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

ErrorNorms evaluate_errors(const PolytopalMesh& mesh, const GlobalDofMap& map,
                           const std::vector<ElementOperators>& ops, const Vector& global,
                           const SmoothFunction& u, int exactness) {
  const int n = mesh.dim();
  const int m = map.m;
  const MonomialSet& betas = MonomialSet::get(n, m);
  std::vector<double> hm(mesh.num_cells()), l2(mesh.num_cells());
  parallel_for(mesh.num_cells(), [&](int c) {
    const Poly p = ops[c].projection(gather_local(map, c, global));
    const MonomialSet& set = MonomialSet::get(n, p.degree);
    const QuadratureSet q = quadrature(mesh, DomainRef{0, c}, exactness);
    double e_m = 0.0, e_0 = 0.0;
    for (int i = 0; i < q.size(); ++i) {
      const Vec& x = q.points[i];
      const Vec xi = (x - p.center) / p.scale;
      const double d0 = u(x) - monomial_values(set, xi).dot(p.coeffs);
      e_0 += q.weights[i] * d0 * d0;
      for (int b = poly_dim(n, m - 1); b < betas.size(); ++b) {
        const MultiIndex& beta = betas[b];
        const double w = factorial(m) / (factorial(beta[0]) * factorial(beta[1]) * factorial(beta[2]));
        const double d = u.derivative(x, beta) - monomial_derivative_values(set, xi, beta, p.scale).dot(p.coeffs);
        e_m += q.weights[i] * w * d * d;
      }
    }
    hm[c] = e_m;
    l2[c] = e_0;
  });
  ErrorNorms e;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    e.hm += hm[c];
    e.l2 += l2[c];
  }
  e.hm = std::sqrt(std::max(e.hm, 0.0));
  e.l2 = std::sqrt(std::max(e.l2, 0.0));
  return e;
}

double jump_moments(const PolytopalMesh& mesh, const GlobalDofMap& map,
                    const std::vector<ElementOperators>& ops, const Vector& global) {
  const int n = mesh.dim();
  const int m = map.m;
  const int k = map.k;
  std::vector<Poly> proj(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) proj[c] = ops[c].projection(gather_local(map, c, global));
  double worst = 0.0;
  for (int f = 0; f < mesh.num_faces(1); ++f) {
    const Face& F = mesh.face(1, f);
    if (F.boundary) continue;
    const DomainRef fref{1, f};
    for (int s = 0; s < m; ++s) {
      const int deg = std::max(0, k - (2 * m - 1 - s));
      const ScaledMonomialBasis basis = ScaledMonomialBasis::for_domain(mesh, fref, deg);
      const QuadratureSet q = quadrature(mesh, fref, 2 * k + 2);
      const Matrix mass = mass_matrix(basis, q);
      const MonomialSet& betas = MonomialSet::get(n, s);
      for (int b = poly_dim(n, s - 1); b < betas.size(); ++b) {
        const Vector mom = moments(basis, q, [&](const Vec& x) {
          return proj[F.parents[0]].derivative_at(x, betas[b]) - proj[F.parents[1]].derivative_at(x, betas[b]);
        });
        const Vector coef = mass.ldlt().solve(mom);
        worst = std::max(worst, std::sqrt(std::max(0.0, coef.dot(mass * coef)) / F.frame.measure));
      }
    }
  }
  return worst;
}

}  // namespace vem
