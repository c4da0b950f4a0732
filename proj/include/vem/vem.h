/* C interface to the polyharmonic virtual element library. */
#ifndef VEM_VEM_H
#define VEM_VEM_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#  if defined(VEM_BUILDING)
#    define VEM_API __declspec(dllexport)
#  else
#    define VEM_API __declspec(dllimport)
#  endif
#else
#  define VEM_API __attribute__((visibility("default")))
#endif

typedef struct vem_mesh vem_mesh;
typedef struct vem_report vem_report;

typedef enum vem_status {
  VEM_OK = 0,
  VEM_ERR_INVALID_ARGUMENT = 1,
  VEM_ERR_IO = 2,
  VEM_ERR_MESH_FORMAT = 3,
  VEM_ERR_MESH_GEOMETRY = 4,
  VEM_ERR_NUMERICAL = 5,
  VEM_ERR_SOLVER = 6,
  VEM_ERR_INTERNAL = 7
} vem_status;

typedef struct vem_level_row {
  int level;
  int cells;
  double h;
  int ndof;
  double err_hm;
  double rate_hm; /* NaN on the first level */
  double err_l2;
  double rate_l2;
  int cg_iters;
  int used_cg;
  double residual;
  double seconds;
} vem_level_row;

typedef void (*vem_progress_fn)(const vem_level_row* row, void* user);

typedef struct vem_study_config {
  int m;
  int k;
  const char* mesh_family; /* tri-uniform, quad-distorted, polygon-hex, tet-uniform, hex-uniform */
  int first_level;
  int levels;
  const char* case_id;     /* NULL or "" picks the default for m */
  double delta;
  unsigned long long seed;
  double solver_tol;
  int force_cg;
  int experimental_3d;
  int threads;             /* 0: hardware concurrency */
  double expected_rate;    /* NaN: no rate assertion */
  double rate_tol;
  int keep_solution;
  vem_progress_fn progress;
  void* progress_user;
} vem_study_config;

/* Message of the last failed call on this thread ("" if none). */
VEM_API const char* vem_last_error(void);
VEM_API const char* vem_status_string(vem_status status);

VEM_API vem_status vem_mesh_load(const char* path, vem_mesh** out);
VEM_API vem_status vem_mesh_generate(const char* family, int level, double delta,
                                     unsigned long long seed, vem_mesh** out);
VEM_API void vem_mesh_free(vem_mesh* mesh);
VEM_API vem_status vem_mesh_info(const vem_mesh* mesh, int* dim, int* cells, int* facets);
/* JSON mesh file contents; release with vem_string_free. */
VEM_API vem_status vem_mesh_export(const vem_mesh* mesh, char** json_out);

VEM_API void vem_study_config_init(vem_study_config* config);
VEM_API vem_status vem_study_run(const vem_study_config* config, vem_report** out);
VEM_API void vem_report_free(vem_report* report);
VEM_API int vem_report_num_levels(const vem_report* report);
VEM_API vem_status vem_report_level(const vem_report* report, int index, vem_level_row* row);
VEM_API const char* vem_report_regime(const vem_report* report);
/* 1 when no rate is expected or the final H^m rate is within tolerance. */
VEM_API int vem_report_rate_ok(const vem_report* report);
VEM_API vem_status vem_report_write_csv(const vem_report* report, const char* path);
VEM_API vem_status vem_report_write_json(const vem_report* report, const char* path);
VEM_API vem_status vem_report_write_solution(const vem_report* report, const char* path);

/* Element operator dump (JSON); with green != 0 it also holds the Green
   decomposition of every cell monomial. */
VEM_API vem_status vem_dump_element(const vem_mesh* mesh, int cell, int m, int k, int green,
                                    char** json_out);
VEM_API void vem_string_free(char* s);

/* Runs the built-in property checks; returns the number of failures or -1. */
VEM_API int vem_selftest(char** report_out);
VEM_API vem_status vem_regime(int m, int k, const char** name);

#ifdef __cplusplus
}
#endif

#endif
