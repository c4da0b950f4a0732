#pragma once

#include "vem/assembly.hpp"
#include "vem/element.hpp"
#include "vem/mesh.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace vem {

enum class MeshFamily { TriUniform, QuadDistorted, PolygonHex, TetUniform, HexUniform };

MeshFamily parse_family(const std::string& name);
std::string family_name(MeshFamily f);
int family_dim(MeshFamily f);

struct MeshOptions {
  double delta = 0.2;        // quad-distorted perturbation, fraction of h
  std::uint64_t seed = 42;
};

/// Unit square/cube meshes; the mesh size halves with every level.
PolytopalMesh generate_mesh(MeshFamily family, int level, const MeshOptions& opts = {});

/// 3D mesh from cells given as lists of polygonal face loops. Shared faces are
/// matched by vertex set; orientation signs are computed from the cell
/// centroid, so cells must be convex.
PolytopalMesh polyhedral_mesh(std::vector<Vec> vertices,
                              const std::vector<std::vector<std::vector<int>>>& cells);

// Random single-cell meshes for property tests.
PolytopalMesh random_polygon(std::mt19937_64& rng, int sides);
/// kind 0 tetrahedron, 1 affine cube, 2 pyramid, 3 bipyramid.
PolytopalMesh random_polyhedron(std::mt19937_64& rng, int kind);

/// Known ids: "sin" (m = 1), "sin2" (m <= 2), "sin3" (m <= 3).
std::unique_ptr<ManufacturedFunction> manufactured_case(const std::string& id, int n, int m);
std::string default_case(int m);

struct StudyConfig {
  int m = 1;
  int k = 1;
  MeshFamily family = MeshFamily::TriUniform;
  int first_level = 1;
  int levels = 4;
  std::string case_id;  // empty: default for m
  MeshOptions mesh;
  SolverSettings solver;
  bool experimental_3d = false;
  int threads = 0;
  double expected_rate = std::numeric_limits<double>::quiet_NaN();
  double rate_tol = 0.0;
};

/// Throws InvalidArgument for m > n, k < m, delta >= 0.3, or 3D with m >= 2
/// without the experimental flag.
void validate(const StudyConfig& config);

struct LevelResult {
  int level = 0;
  int cells = 0;
  double h = 0.0;
  int ndof = 0;
  double err_hm = 0.0;
  double rate_hm = std::numeric_limits<double>::quiet_NaN();
  double err_l2 = 0.0;
  double rate_l2 = std::numeric_limits<double>::quiet_NaN();
  int cg_iters = 0;
  bool used_cg = false;
  double residual = 0.0;
  double seconds = 0.0;
};

struct ConvergenceReport {
  StudyConfig config;
  LoadRegime regime = LoadRegime::Projection;
  std::vector<LevelResult> rows;
  std::string solution_json;  // final level, filled when requested

  [[nodiscard]] double final_rate_hm() const;
  /// True when no expected rate is set or the final H^m rate is in the band.
  [[nodiscard]] bool rate_ok() const;
};

ConvergenceReport run_study(const StudyConfig& config,
                            const std::function<void(const LevelResult&)>& progress = {},
                            bool keep_solution = false);

std::string report_csv(const ConvergenceReport& report);
std::string report_json(const ConvergenceReport& report);

/// Global dofs and per-cell Pi u_h coefficients.
std::string solution_to_json(const PolytopalMesh& mesh, const GlobalDofMap& map,
                             const std::vector<ElementOperators>& ops, const Vector& global);

/// Quick property checks; writes one line per check and returns the failures.
int run_selftest(std::ostream& out);

}  // namespace vem
