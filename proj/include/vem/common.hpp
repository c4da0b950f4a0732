#pragma once

#include <Eigen/Dense>

#include <array>
#include <compare>
#include <stdexcept>
#include <string>

namespace vem {

inline constexpr int kMaxDim = 3;

/// Point or direction in R^n (n <= 3). Fixed capacity, no heap allocation.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Exponents over at most three variables; entries past the active count are zero.
using MultiIndex = std::array<int, kMaxDim>;

inline int order(const MultiIndex& a) { return a[0] + a[1] + a[2]; }

/// A cell (codim 0) or a face of codimension 1..n, by id within its codimension.
struct DomainRef {
  int codim = 0;
  int id = 0;
  auto operator<=>(const DomainRef&) const = default;
};

enum class ErrorCode {
  InvalidArgument,
  Io,
  MeshFormat,
  MeshGeometry,
  Numerical,
  Solver,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

/// Binomial coefficient C(n, k); zero outside 0 <= k <= n.
inline long binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// dim P_k in d variables, C(d + k, d); zero for k < 0.
inline int poly_dim(int nvars, int degree) {
  return degree < 0 ? 0 : static_cast<int>(binomial(nvars + degree, nvars));
}

}  // namespace vem
