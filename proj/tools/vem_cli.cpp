// Command line front end; talks to the library only through the C API.
#include "vem/vem.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

namespace {

constexpr int kExitRateMiss = 1;
constexpr int kExitError = 2;

int report_error(vem_status st) {
  std::fprintf(stderr, "error (%s): %s\n", vem_status_string(st), vem_last_error());
  return kExitError;
}

std::string fmt_rate(double r) {
  if (std::isnan(r)) return "   -  ";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%6.3f", r);
  return buf;
}

void print_row(const vem_level_row* r, void*) {
  std::printf("level %2d  cells %7d  h %.4e  ndof %8d  err_Hm %.4e  rate %s  err_L2 %.4e  rate %s  %s %4d  %.1fs\n",
              r->level, r->cells, r->h, r->ndof, r->err_hm, fmt_rate(r->rate_hm).c_str(), r->err_l2,
              fmt_rate(r->rate_l2).c_str(), r->used_cg ? "cg" : "ldlt", r->cg_iters, r->seconds);
  std::fflush(stdout);
}

// A path to an existing file is loaded; anything else is taken as a family name.
vem_status open_mesh(const std::string& spec, int level, double delta, unsigned long long seed, vem_mesh** out) {
  if (std::filesystem::exists(spec)) return vem_mesh_load(spec.c_str(), out);
  return vem_mesh_generate(spec.c_str(), level, delta, seed, out);
}

int write_text(const std::string& path, const char* text) {
  if (path.empty() || path == "-") {
    std::fputs(text, stdout);
    std::fputc('\n', stdout);
    return 0;
  }
  std::ofstream out(path);
  if (!out) {
    std::fprintf(stderr, "error: cannot write '%s'\n", path.c_str());
    return kExitError;
  }
  out << text << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonconforming virtual elements for the polyharmonic equation"};
  app.require_subcommand(1);

  vem_study_config cfg;
  vem_study_config_init(&cfg);
  std::string family = "tri-uniform";
  std::string case_id;
  std::string csv_path, json_path, solution_path;
  double expect_rate = std::numeric_limits<double>::quiet_NaN();
  bool force_cg = false, exp3d = false;

  auto* run = app.add_subcommand("run", "Convergence study on a mesh family");
  run->add_option("--m", cfg.m, "Order of the operator (-Delta)^m")->required();
  run->add_option("--k", cfg.k, "Polynomial degree, k >= m")->required();
  run->add_option("--mesh", family, "tri-uniform | quad-distorted | polygon-hex | tet-uniform | hex-uniform")
      ->capture_default_str();
  run->add_option("--delta", cfg.delta, "Vertex perturbation for quad-distorted, fraction of h")
      ->capture_default_str();
  run->add_option("--seed", cfg.seed, "RNG seed for perturbed meshes")->capture_default_str();
  run->add_option("--first-level", cfg.first_level, "Coarsest refinement level")->capture_default_str();
  run->add_option("--levels", cfg.levels, "Number of refinement levels")->capture_default_str();
  run->add_option("--case", case_id, "Manufactured solution: sin | sin2 | sin3");
  run->add_option("--out", csv_path, "CSV table path");
  run->add_option("--json", json_path, "JSON report path");
  run->add_option("--solution", solution_path, "Write the finest-level solution as JSON");
  run->add_option("--expect-rate", expect_rate, "Expected final H^m rate; exit 1 when missed");
  run->add_option("--rate-tol", cfg.rate_tol, "Tolerance for --expect-rate")->capture_default_str();
  run->add_option("--threads", cfg.threads, "Worker threads (0: all cores)")->capture_default_str();
  run->add_flag("--force-cg", force_cg, "Always use preconditioned CG");
  run->add_flag("--experimental-3d", exp3d, "Allow m >= 2 in three dimensions");

  auto* selftest = app.add_subcommand("selftest", "Run built-in property checks");

  std::string mesh_spec;
  int level = 0, cell = 0, dm = 1, dk = 1;
  double delta = 0.2;
  unsigned long long seed = 42;
  bool green = false;
  std::string out_path;
  auto* dump = app.add_subcommand("dump-element", "Print the local operators of one cell as JSON");
  dump->add_option("--mesh", mesh_spec, "Family name or mesh JSON file")->required();
  dump->add_option("--level", level, "Level for generated meshes")->capture_default_str();
  dump->add_option("--delta", delta)->capture_default_str();
  dump->add_option("--seed", seed)->capture_default_str();
  dump->add_option("--cell", cell)->capture_default_str();
  dump->add_option("--m", dm)->required();
  dump->add_option("--k", dk)->required();
  dump->add_flag("--green", green, "Include the Green decomposition of each monomial");
  dump->add_option("--out", out_path, "Output path (stdout by default)");

  auto* exp = app.add_subcommand("export-mesh", "Write a generated mesh as JSON");
  exp->add_option("--mesh", mesh_spec, "Family name or mesh JSON file")->required();
  exp->add_option("--level", level)->capture_default_str();
  exp->add_option("--delta", delta)->capture_default_str();
  exp->add_option("--seed", seed)->capture_default_str();
  exp->add_option("--out", out_path, "Output path (stdout by default)");

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    cfg.mesh_family = family.c_str();
    cfg.case_id = case_id.empty() ? nullptr : case_id.c_str();
    cfg.force_cg = force_cg;
    cfg.experimental_3d = exp3d;
    cfg.expected_rate = expect_rate;
    cfg.keep_solution = !solution_path.empty();
    cfg.progress = print_row;
    const char* regime = nullptr;
    if (vem_regime(cfg.m, cfg.k, &regime) == VEM_OK)
      std::printf("m=%d k=%d mesh=%s load=%s\n", cfg.m, cfg.k, family.c_str(), regime);
    vem_report* report = nullptr;
    vem_status st = vem_study_run(&cfg, &report);
    if (st != VEM_OK) return report_error(st);
    if (!csv_path.empty() && (st = vem_report_write_csv(report, csv_path.c_str())) != VEM_OK) {
      vem_report_free(report);
      return report_error(st);
    }
    if (!json_path.empty() && (st = vem_report_write_json(report, json_path.c_str())) != VEM_OK) {
      vem_report_free(report);
      return report_error(st);
    }
    if (!solution_path.empty() && (st = vem_report_write_solution(report, solution_path.c_str())) != VEM_OK) {
      vem_report_free(report);
      return report_error(st);
    }
    const int ok = vem_report_rate_ok(report);
    if (!std::isnan(expect_rate)) {
      vem_level_row last;
      vem_report_level(report, vem_report_num_levels(report) - 1, &last);
      std::printf("%s final H^m rate %.4f, expected %.4f +- %.4f\n", ok ? "PASS" : "FAIL", last.rate_hm,
                  expect_rate, cfg.rate_tol);
    }
    vem_report_free(report);
    return ok ? 0 : kExitRateMiss;
  }

  if (*selftest) {
    char* text = nullptr;
    const int failures = vem_selftest(&text);
    if (failures < 0) return report_error(VEM_ERR_INTERNAL);
    std::fputs(text, stdout);
    vem_string_free(text);
    return failures == 0 ? 0 : 1;
  }

  vem_mesh* mesh = nullptr;
  vem_status st = open_mesh(mesh_spec, level, delta, seed, &mesh);
  if (st != VEM_OK) return report_error(st);
  char* text = nullptr;
  st = *dump ? vem_dump_element(mesh, cell, dm, dk, green, &text) : vem_mesh_export(mesh, &text);
  vem_mesh_free(mesh);
  if (st != VEM_OK) return report_error(st);
  const int rc = write_text(out_path, text);
  vem_string_free(text);
  return rc;
}
