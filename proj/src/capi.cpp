#include "vem/vem.h"

#include "vem/harness.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

struct vem_mesh {
  vem::PolytopalMesh mesh;
};

struct vem_report {
  vem::ConvergenceReport report;
  std::string regime;
};

namespace {

thread_local std::string last_error;

vem_status to_status(vem::ErrorCode code) {
  switch (code) {
    case vem::ErrorCode::InvalidArgument: return VEM_ERR_INVALID_ARGUMENT;
    case vem::ErrorCode::Io: return VEM_ERR_IO;
    case vem::ErrorCode::MeshFormat: return VEM_ERR_MESH_FORMAT;
    case vem::ErrorCode::MeshGeometry: return VEM_ERR_MESH_GEOMETRY;
    case vem::ErrorCode::Numerical: return VEM_ERR_NUMERICAL;
    case vem::ErrorCode::Solver: return VEM_ERR_SOLVER;
  }
  return VEM_ERR_INTERNAL;
}

template <class F>
vem_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return VEM_OK;
  } catch (const vem::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return VEM_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return VEM_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  vem::require(p != nullptr, vem::ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_file(const char* path, const std::string& text) {
  need(path, "path");
  std::ofstream out(path);
  vem::require(out.good(), vem::ErrorCode::Io, std::string("cannot write '") + path + "'");
  out << text;
  vem::require(out.good(), vem::ErrorCode::Io, std::string("write failed for '") + path + "'");
}

vem_level_row to_row(const vem::LevelResult& r) {
  return {r.level, r.cells,   r.h,        r.ndof,     r.err_hm,   r.rate_hm,
          r.err_l2, r.rate_l2, r.cg_iters, r.used_cg, r.residual, r.seconds};
}

}  // namespace

extern "C" {

const char* vem_last_error(void) { return last_error.c_str(); }

const char* vem_status_string(vem_status status) {
  switch (status) {
    case VEM_OK: return "ok";
    case VEM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case VEM_ERR_IO: return "i/o error";
    case VEM_ERR_MESH_FORMAT: return "malformed mesh";
    case VEM_ERR_MESH_GEOMETRY: return "invalid mesh geometry";
    case VEM_ERR_NUMERICAL: return "numerical failure";
    case VEM_ERR_SOLVER: return "solver failure";
    case VEM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

vem_status vem_mesh_load(const char* path, vem_mesh** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new vem_mesh{vem::load_mesh(path)};
  });
}

vem_status vem_mesh_generate(const char* family, int level, double delta, unsigned long long seed,
                             vem_mesh** out) {
  return guarded([&] {
    need(family, "family");
    need(out, "out");
    vem::MeshOptions opts;
    opts.delta = delta;
    opts.seed = seed;
    *out = new vem_mesh{vem::generate_mesh(vem::parse_family(family), level, opts)};
  });
}

void vem_mesh_free(vem_mesh* mesh) { delete mesh; }

vem_status vem_mesh_info(const vem_mesh* mesh, int* dim, int* cells, int* facets) {
  return guarded([&] {
    need(mesh, "mesh");
    if (dim) *dim = mesh->mesh.dim();
    if (cells) *cells = mesh->mesh.num_cells();
    if (facets) *facets = mesh->mesh.num_faces(1);
  });
}

vem_status vem_mesh_export(const vem_mesh* mesh, char** json_out) {
  return guarded([&] {
    need(mesh, "mesh");
    need(json_out, "json_out");
    *json_out = copy_string(vem::mesh_to_json(mesh->mesh));
  });
}

void vem_study_config_init(vem_study_config* c) {
  if (!c) return;
  *c = vem_study_config{};
  c->m = 1;
  c->k = 1;
  c->mesh_family = "tri-uniform";
  c->first_level = 1;
  c->levels = 4;
  c->case_id = nullptr;
  c->delta = 0.2;
  c->seed = 42;
  c->solver_tol = 1e-12;
  c->expected_rate = std::numeric_limits<double>::quiet_NaN();
  c->rate_tol = 0.0;
}

vem_status vem_study_run(const vem_study_config* c, vem_report** out) {
  return guarded([&] {
    need(c, "config");
    need(out, "out");
    need(c->mesh_family, "mesh_family");
    vem::StudyConfig cfg;
    cfg.m = c->m;
    cfg.k = c->k;
    cfg.family = vem::parse_family(c->mesh_family);
    cfg.first_level = c->first_level;
    cfg.levels = c->levels;
    cfg.case_id = c->case_id ? c->case_id : "";
    cfg.mesh.delta = c->delta;
    cfg.mesh.seed = c->seed;
    cfg.solver.rel_tol = c->solver_tol > 0 ? c->solver_tol : 1e-12;
    cfg.solver.force_cg = c->force_cg != 0;
    cfg.experimental_3d = c->experimental_3d != 0;
    cfg.threads = c->threads;
    cfg.expected_rate = c->expected_rate;
    cfg.rate_tol = c->rate_tol;
    std::function<void(const vem::LevelResult&)> progress;
    if (c->progress) {
      progress = [c](const vem::LevelResult& r) {
        const vem_level_row row = to_row(r);
        c->progress(&row, c->progress_user);
      };
    }
    auto report = std::make_unique<vem_report>();
    report->report = vem::run_study(cfg, progress, c->keep_solution != 0);
    report->regime = vem::regime_name(report->report.regime);
    *out = report.release();
  });
}

void vem_report_free(vem_report* report) { delete report; }

int vem_report_num_levels(const vem_report* report) {
  return report ? static_cast<int>(report->report.rows.size()) : 0;
}

vem_status vem_report_level(const vem_report* report, int index, vem_level_row* row) {
  return guarded([&] {
    need(report, "report");
    need(row, "row");
    vem::require(index >= 0 && index < vem_report_num_levels(report), vem::ErrorCode::InvalidArgument,
                 "level index out of range");
    *row = to_row(report->report.rows[index]);
  });
}

const char* vem_report_regime(const vem_report* report) { return report ? report->regime.c_str() : ""; }

int vem_report_rate_ok(const vem_report* report) { return report && report->report.rate_ok() ? 1 : 0; }

vem_status vem_report_write_csv(const vem_report* report, const char* path) {
  return guarded([&] {
    need(report, "report");
    write_file(path, vem::report_csv(report->report));
  });
}

vem_status vem_report_write_json(const vem_report* report, const char* path) {
  return guarded([&] {
    need(report, "report");
    write_file(path, vem::report_json(report->report));
  });
}

vem_status vem_report_write_solution(const vem_report* report, const char* path) {
  return guarded([&] {
    need(report, "report");
    vem::require(!report->report.solution_json.empty(), vem::ErrorCode::InvalidArgument,
                 "the study was run without keep_solution");
    write_file(path, report->report.solution_json);
  });
}

vem_status vem_dump_element(const vem_mesh* mesh, int cell, int m, int k, int green, char** json_out) {
  return guarded([&] {
    need(mesh, "mesh");
    need(json_out, "json_out");
    const auto& pm = mesh->mesh;
    vem::require(cell >= 0 && cell < pm.num_cells(), vem::ErrorCode::InvalidArgument, "cell index out of range");
    const vem::ElementOperators ops = vem::build_element(pm, cell, m, k);
    nlohmann::json j = nlohmann::json::parse(vem::element_to_json(ops));
    if (green) {
      j["green"] = nlohmann::json::array();
      const vem::Cell& K = pm.cell(cell);
      for (int a = 0; a < ops.num_polys(); ++a) {
        const vem::Poly q = vem::Poly::monomial(pm.dim(), k, a, K.centroid, K.diameter);
        j["green"].push_back(nlohmann::json::parse(vem::to_json(vem::element_green_decompose(pm, cell, q, m))));
      }
    }
    *json_out = copy_string(j.dump(1));
  });
}

void vem_string_free(char* s) { delete[] s; }

int vem_selftest(char** report_out) {
  int failures = -1;
  const vem_status st = guarded([&] {
    std::ostringstream out;
    failures = vem::run_selftest(out);
    if (report_out) *report_out = copy_string(out.str());
  });
  return st == VEM_OK ? failures : -1;
}

vem_status vem_regime(int m, int k, const char** name) {
  return guarded([&] {
    need(name, "name");
    *name = vem::regime_name(vem::load_regime(m, k));
  });
}

}  // extern "C"
