#include "vem/harness.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace vem {

MeshFamily parse_family(const std::string& name) {
  if (name == "tri-uniform") return MeshFamily::TriUniform;
  if (name == "quad-distorted") return MeshFamily::QuadDistorted;
  if (name == "polygon-hex") return MeshFamily::PolygonHex;
  if (name == "tet-uniform") return MeshFamily::TetUniform;
  if (name == "hex-uniform") return MeshFamily::HexUniform;
  fail(ErrorCode::InvalidArgument, "unknown mesh family '" + name + "'");
}

std::string family_name(MeshFamily f) {
  switch (f) {
    case MeshFamily::TriUniform: return "tri-uniform";
    case MeshFamily::QuadDistorted: return "quad-distorted";
    case MeshFamily::PolygonHex: return "polygon-hex";
    case MeshFamily::TetUniform: return "tet-uniform";
    case MeshFamily::HexUniform: return "hex-uniform";
  }
  return "?";
}

int family_dim(MeshFamily f) {
  return f == MeshFamily::TetUniform || f == MeshFamily::HexUniform ? 3 : 2;
}

namespace {

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

Vec vec3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

PolytopalMesh tri_uniform(int level) {
  const int N = 1 << level;
  std::vector<Vec> verts;
  for (int j = 0; j <= N; ++j)
    for (int i = 0; i <= N; ++i) verts.push_back(vec2(static_cast<double>(i) / N, static_cast<double>(j) / N));
  auto id = [&](int i, int j) { return i + (N + 1) * j; };
  std::vector<std::vector<int>> cells;
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < N; ++i) {
      cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return PolytopalMesh::from_polygons(std::move(verts), cells);
}

PolytopalMesh quad_distorted(int level, double delta, std::uint64_t seed) {
  const int N = 1 << level;
  const double h = 1.0 / N;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vec> verts;
  for (int j = 0; j <= N; ++j) {
    for (int i = 0; i <= N; ++i) {
      Vec p = vec2(i * h, j * h);
      const double dx = unit(rng), dy = unit(rng);
      if (i > 0 && i < N && j > 0 && j < N) p += delta * h * vec2(dx, dy);
      verts.push_back(p);
    }
  }
  auto id = [&](int i, int j) { return i + (N + 1) * j; };
  std::vector<std::vector<int>> cells;
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
  return PolytopalMesh::from_polygons(std::move(verts), cells);
}

// Brick pattern on a (2N + 1) x (N + 1) vertex grid; interior grid lines
// zigzag so that full bricks become hexagons.
PolytopalMesh polygon_hex(int level) {
  const int N = 1 << level;
  const double eps = 0.2;
  std::vector<Vec> verts;
  for (int j = 0; j <= N; ++j) {
    for (int i = 0; i <= 2 * N; ++i) {
      double y = static_cast<double>(j) / N;
      if (j > 0 && j < N) y += ((i + j) % 2 == 0 ? eps : -eps) / N;
      verts.push_back(vec2(static_cast<double>(i) / (2 * N), y));
    }
  }
  auto id = [&](int i, int j) { return i + (2 * N + 1) * j; };
  std::vector<std::vector<int>> cells;
  for (int j = 0; j < N; ++j) {
    int a = 0;
    if (j % 2 == 1) {
      cells.push_back({id(0, j), id(1, j), id(1, j + 1), id(0, j + 1)});
      a = 1;
    }
    for (; a + 2 <= 2 * N; a += 2)
      cells.push_back({id(a, j), id(a + 1, j), id(a + 2, j), id(a + 2, j + 1), id(a + 1, j + 1), id(a, j + 1)});
    if (a < 2 * N) cells.push_back({id(a, j), id(a + 1, j), id(a + 1, j + 1), id(a, j + 1)});
  }
  return PolytopalMesh::from_polygons(std::move(verts), cells);
}

std::vector<Vec> cube_grid(int N) {
  std::vector<Vec> verts;
  for (int k = 0; k <= N; ++k)
    for (int j = 0; j <= N; ++j)
      for (int i = 0; i <= N; ++i)
        verts.push_back(vec3(static_cast<double>(i) / N, static_cast<double>(j) / N, static_cast<double>(k) / N));
  return verts;
}

PolytopalMesh tet_uniform(int level) {
  const int N = 1 << level;
  auto id = [&](int i, int j, int k) { return i + (N + 1) * (j + (N + 1) * k); };
  std::vector<std::vector<std::vector<int>>> cells;
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int k = 0; k < N; ++k) {
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        for (const auto& p : perms) {
          std::array<int, 3> c{i, j, k};
          std::array<int, 4> v{};
          v[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[p[s]];
            v[s + 1] = id(c[0], c[1], c[2]);
          }
          cells.push_back({{v[0], v[1], v[2]}, {v[0], v[1], v[3]}, {v[0], v[2], v[3]}, {v[1], v[2], v[3]}});
        }
      }
    }
  }
  return polyhedral_mesh(cube_grid(N), cells);
}

PolytopalMesh hex_uniform(int level) {
  const int N = 1 << level;
  auto id = [&](int i, int j, int k) { return i + (N + 1) * (j + (N + 1) * k); };
  std::vector<std::vector<std::vector<int>>> cells;
  for (int k = 0; k < N; ++k) {
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        const int a = id(i, j, k), b = id(i + 1, j, k), c = id(i + 1, j + 1, k), d = id(i, j + 1, k);
        const int e = id(i, j, k + 1), f = id(i + 1, j, k + 1), g = id(i + 1, j + 1, k + 1),
                  h = id(i, j + 1, k + 1);
        cells.push_back({{a, d, c, b}, {e, f, g, h}, {a, b, f, e}, {b, c, g, f}, {c, d, h, g}, {d, a, e, h}});
      }
    }
  }
  return polyhedral_mesh(cube_grid(N), cells);
}

}  // namespace

PolytopalMesh polyhedral_mesh(std::vector<Vec> vertices,
                              const std::vector<std::vector<std::vector<int>>>& cells) {
  std::map<std::vector<int>, int> face_ids;
  std::vector<std::vector<int>> faces;
  std::vector<PolyhedronSpec> specs;
  for (const auto& cell : cells) {
    std::set<int> cell_verts;
    for (const auto& loop : cell) cell_verts.insert(loop.begin(), loop.end());
    Vec center = Vec::Zero(3);
    for (int v : cell_verts) center += vertices.at(v);
    center /= static_cast<double>(cell_verts.size());
    PolyhedronSpec spec;
    for (const auto& loop : cell) {
      std::vector<int> key = loop;
      std::sort(key.begin(), key.end());
      auto it = face_ids.find(key);
      if (it == face_ids.end()) {
        it = face_ids.emplace(key, static_cast<int>(faces.size())).first;
        faces.push_back(loop);
      }
      const auto& stored = faces[it->second];
      Vec nl = Vec::Zero(3), fc = Vec::Zero(3);
      for (std::size_t i = 0; i < stored.size(); ++i) {
        const Vec& a = vertices.at(stored[i]);
        const Vec& b = vertices.at(stored[(i + 1) % stored.size()]);
        nl[0] += (a[1] - b[1]) * (a[2] + b[2]);
        nl[1] += (a[2] - b[2]) * (a[0] + b[0]);
        nl[2] += (a[0] - b[0]) * (a[1] + b[1]);
        fc += a;
      }
      fc /= static_cast<double>(stored.size());
      spec.faces.push_back(it->second);
      spec.signs.push_back(nl.dot(fc - center) > 0 ? 1 : -1);
    }
    specs.push_back(std::move(spec));
  }
  return PolytopalMesh::from_polyhedra(std::move(vertices), faces, specs);
}

PolytopalMesh generate_mesh(MeshFamily family, int level, const MeshOptions& opts) {
  require(level >= 0 && level <= 10, ErrorCode::InvalidArgument, "mesh level must be in [0, 10]");
  switch (family) {
    case MeshFamily::TriUniform: return tri_uniform(level);
    case MeshFamily::QuadDistorted: {
      require(opts.delta >= 0.0 && opts.delta < 0.3, ErrorCode::InvalidArgument,
              "quad-distorted needs 0 <= delta < 0.3");
      double delta = opts.delta;
      for (int attempt = 0;; ++attempt) {
        try {
          return quad_distorted(level, delta, opts.seed);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::MeshGeometry || attempt == 2) throw;
          delta *= 0.5;
        }
      }
    }
    case MeshFamily::PolygonHex: return polygon_hex(level);
    case MeshFamily::TetUniform: return tet_uniform(level);
    case MeshFamily::HexUniform: return hex_uniform(level);
  }
  fail(ErrorCode::InvalidArgument, "unknown mesh family");
}

// --- random polytopes ---

namespace {

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Matrix3d a;
  for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = g(rng);
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(a);
  Eigen::Matrix3d q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

// Convex polygon with jittered angles on the unit circle, counterclockwise.
std::vector<std::pair<double, double>> convex_ring(std::mt19937_64& rng, int sides) {
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  const double offset = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < sides; ++i) {
    const double t = offset + 2.0 * std::numbers::pi * (i + jitter(rng)) / sides;
    pts.emplace_back(std::cos(t), std::sin(t));
  }
  return pts;
}

}  // namespace

PolytopalMesh random_polygon(std::mt19937_64& rng, int sides) {
  require(sides >= 3, ErrorCode::InvalidArgument, "a polygon needs 3 sides");
  std::uniform_real_distribution<double> radius(0.8, 1.0), scale(0.3, 2.0), shift(-1.0, 1.0);
  const double s = scale(rng);
  const Vec t = vec2(shift(rng), shift(rng));
  std::vector<Vec> verts;
  std::vector<int> loop;
  for (const auto& [c, sn] : convex_ring(rng, sides)) {
    const double r = radius(rng);
    loop.push_back(static_cast<int>(verts.size()));
    verts.push_back(t + s * r * vec2(c, sn));
  }
  return PolytopalMesh::from_polygons(std::move(verts), {loop});
}

PolytopalMesh random_polyhedron(std::mt19937_64& rng, int kind) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), scale(0.3, 2.0);
  std::vector<Vec> verts;
  std::vector<std::vector<int>> faces;
  switch (kind) {
    case 0: {
      verts = {vec3(1, 1, 1), vec3(1, -1, -1), vec3(-1, 1, -1), vec3(-1, -1, 1)};
      for (auto& v : verts) v += 0.2 * vec3(u(rng), u(rng), u(rng));
      faces = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
      break;
    }
    case 1: {
      Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
      for (int i = 0; i < 9; ++i) a(i / 3, i % 3) += 0.25 * u(rng);
      if (a.determinant() < 0.2) a = Eigen::Matrix3d::Identity();
      for (int k = 0; k <= 1; ++k)
        for (int j = 0; j <= 1; ++j)
          for (int i = 0; i <= 1; ++i) {
            Eigen::Vector3d p = a * Eigen::Vector3d(i, j, k);
            verts.push_back(vec3(p[0], p[1], p[2]));
          }
      faces = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {1, 3, 7, 5}, {3, 2, 6, 7}, {2, 0, 4, 6}};
      break;
    }
    case 2:
    case 3: {
      const int sides = 4 + static_cast<int>(std::uniform_int_distribution<int>(0, 2)(rng));
      std::vector<int> base;
      for (const auto& [c, s] : convex_ring(rng, sides)) {
        base.push_back(static_cast<int>(verts.size()));
        verts.push_back(vec3(c, s, 0.0));
      }
      faces.push_back(base);
      const int top = static_cast<int>(verts.size());
      verts.push_back(vec3(0.2 * u(rng), 0.2 * u(rng), 1.0 + 0.4 * u(rng)));
      for (int i = 0; i < sides; ++i) faces.push_back({base[i], base[(i + 1) % sides], top});
      if (kind == 3) {
        faces.erase(faces.begin());
        const int bottom = static_cast<int>(verts.size());
        verts.push_back(vec3(0.2 * u(rng), 0.2 * u(rng), -1.0 - 0.4 * u(rng)));
        for (int i = 0; i < sides; ++i) faces.push_back({base[(i + 1) % sides], base[i], bottom});
      }
      break;
    }
    default:
      fail(ErrorCode::InvalidArgument, "unknown random polyhedron kind");
  }
  const Eigen::Matrix3d rot = random_rotation(rng);
  const double s = scale(rng);
  const Vec t = vec3(u(rng), u(rng), u(rng));
  for (auto& v : verts) {
    const Eigen::Vector3d p = rot * Eigen::Vector3d(v[0], v[1], v[2]);
    v = t + s * vec3(p[0], p[1], p[2]);
  }
  return polyhedral_mesh(std::move(verts), {faces});
}

// --- manufactured solutions ---

std::unique_ptr<ManufacturedFunction> manufactured_case(const std::string& id, int n, int m) {
  using P = ManufacturedFunction::Profile;
  P profile;
  int max_m = 0;
  if (id == "sin") {
    profile = P::Sin;
    max_m = 1;
  } else if (id == "sin2") {
    profile = P::Sin2;
    max_m = 2;
  } else if (id == "sin3") {
    profile = P::Sin3;
    max_m = 3;
  } else {
    fail(ErrorCode::InvalidArgument, "unknown manufactured case '" + id + "'");
  }
  require(m <= max_m, ErrorCode::InvalidArgument,
          "case '" + id + "' does not satisfy the order-" + std::to_string(m) + " boundary conditions");
  return std::make_unique<ManufacturedFunction>(profile, n, m);
}

std::string default_case(int m) { return m <= 1 ? "sin" : m == 2 ? "sin2" : "sin3"; }

// --- studies ---

void validate(const StudyConfig& c) {
  const int n = family_dim(c.family);
  require(c.m >= 1, ErrorCode::InvalidArgument, "m must be positive");
  require(c.m <= n, ErrorCode::InvalidArgument, "m must not exceed the dimension (m <= n)");
  require(c.k >= c.m, ErrorCode::InvalidArgument, "k must be at least m");
  require(c.levels >= 1 && c.first_level >= 0, ErrorCode::InvalidArgument, "bad refinement levels");
  require(c.mesh.delta >= 0.0 && c.mesh.delta < 0.3, ErrorCode::InvalidArgument, "delta must be in [0, 0.3)");
  require(!(n == 3 && c.m >= 2) || c.experimental_3d, ErrorCode::InvalidArgument,
          "3D runs with m >= 2 need the experimental flag");
}

double ConvergenceReport::final_rate_hm() const {
  return rows.empty() ? std::numeric_limits<double>::quiet_NaN() : rows.back().rate_hm;
}

bool ConvergenceReport::rate_ok() const {
  if (std::isnan(config.expected_rate)) return true;
  const double r = final_rate_hm();
  return !std::isnan(r) && std::abs(r - config.expected_rate) <= config.rate_tol;
}

ConvergenceReport run_study(const StudyConfig& config,
                            const std::function<void(const LevelResult&)>& progress,
                            bool keep_solution) {
  validate(config);
  const int n = family_dim(config.family);
  const std::string case_id = config.case_id.empty() ? default_case(config.m) : config.case_id;
  const auto u = manufactured_case(case_id, n, config.m);
  ConvergenceReport report;
  report.config = config;
  report.config.case_id = case_id;
  report.regime = load_regime(config.m, config.k);
  const int exactness = 2 * config.k + 4;
  for (int level = config.first_level; level < config.first_level + config.levels; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const PolytopalMesh mesh = generate_mesh(config.family, level, config.mesh);
      const auto ops = build_elements(mesh, config.m, config.k, config.threads);
      const GlobalDofMap map = build_dof_map(mesh, config.m, config.k);
      const LinearSystem sys =
          assemble(mesh, map, ops, [&](const Vec& x) { return u->load(x); }, exactness);
      const SolveResult res = solve(sys, config.solver);
      const Vector global = expand_solution(map, res.x);
      const ErrorNorms err = evaluate_errors(mesh, map, ops, global, *u, exactness);
      LevelResult row;
      row.level = level;
      row.cells = mesh.num_cells();
      row.h = mesh.mesh_size();
      row.ndof = map.num_free();
      row.err_hm = err.hm;
      row.err_l2 = err.l2;
      row.cg_iters = res.iterations;
      row.used_cg = res.used_cg;
      row.residual = res.residual;
      if (!report.rows.empty()) {
        const LevelResult& prev = report.rows.back();
        const double lh = std::log(prev.h / row.h);
        row.rate_hm = std::log(prev.err_hm / row.err_hm) / lh;
        row.rate_l2 = std::log(prev.err_l2 / row.err_l2) / lh;
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      report.rows.push_back(row);
      if (progress) progress(row);
      if (keep_solution && level == config.first_level + config.levels - 1)
        report.solution_json = solution_to_json(mesh, map, ops, global);
    } catch (const Error& e) {
      fail(e.code(), "level " + std::to_string(level) + ": " + e.what());
    }
  }
  return report;
}

namespace {

std::string num(double v, const char* fmt = "%.10e") {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

std::string report_csv(const ConvergenceReport& report) {
  std::ostringstream out;
  out << "level,h,ndof,err_Hm,rate_Hm,err_L2,rate_L2,cg_iters\n";
  for (const auto& r : report.rows) {
    out << r.level << ',' << num(r.h) << ',' << r.ndof << ',' << num(r.err_hm) << ','
        << num(r.rate_hm, "%.4f") << ',' << num(r.err_l2) << ',' << num(r.rate_l2, "%.4f") << ','
        << r.cg_iters << '\n';
  }
  return out.str();
}

std::string report_json(const ConvergenceReport& report) {
  using nlohmann::json;
  const auto& c = report.config;
  auto opt = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json j;
  j["note"] =
      "Targets are the theoretical broken H^m rates k+1-m; L2 rates are reported, not asserted.";
  j["m"] = c.m;
  j["k"] = c.k;
  j["n"] = family_dim(c.family);
  j["mesh"] = family_name(c.family);
  j["delta"] = c.mesh.delta;
  j["seed"] = c.mesh.seed;
  j["case"] = c.case_id;
  j["regime"] = regime_name(report.regime);
  j["theoretical_rate_Hm"] = c.k + 1 - c.m;
  j["expected_rate"] = opt(c.expected_rate);
  j["rate_tol"] = c.rate_tol;
  j["rows"] = json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"level", r.level},
                         {"cells", r.cells},
                         {"h", r.h},
                         {"ndof", r.ndof},
                         {"err_Hm", r.err_hm},
                         {"rate_Hm", opt(r.rate_hm)},
                         {"err_L2", r.err_l2},
                         {"rate_L2", opt(r.rate_l2)},
                         {"cg_iters", r.cg_iters},
                         {"solver", r.used_cg ? "cg" : "dense"},
                         {"residual", r.residual}});
  }
  j["final_rate_Hm"] = opt(report.final_rate_hm());
  j["rate_ok"] = report.rate_ok();
  return j.dump(2);
}

std::string solution_to_json(const PolytopalMesh& mesh, const GlobalDofMap& map,
                             const std::vector<ElementOperators>& ops, const Vector& global) {
  using nlohmann::json;
  json j;
  j["dimension"] = mesh.dim();
  j["m"] = map.m;
  j["k"] = map.k;
  j["dofs"] = std::vector<double>(global.begin(), global.end());
  j["cells"] = json::array();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Poly p = ops[c].projection(gather_local(map, c, global));
    j["cells"].push_back({{"center", std::vector<double>(p.center.begin(), p.center.end())},
                          {"scale", p.scale},
                          {"degree", p.degree},
                          {"coeffs", std::vector<double>(p.coeffs.begin(), p.coeffs.end())}});
  }
  return j.dump();
}

}  // namespace vem
