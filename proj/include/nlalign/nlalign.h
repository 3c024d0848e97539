#ifndef NLALIGN_NLALIGN_H
#define NLALIGN_NLALIGN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(NLA_BUILDING_LIBRARY)
#    define NLA_API __declspec(dllexport)
#  else
#    define NLA_API __declspec(dllimport)
#  endif
#else
#  define NLA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Nonzero values mirror the library's error categories. */
typedef enum nla_status {
  NLA_OK = 0,
  NLA_ERR_DOMAIN = 1,
  NLA_ERR_PARAMETER = 2,
  NLA_ERR_WRONG_SCENARIO = 3,
  NLA_ERR_SINGULAR = 4,
  NLA_ERR_NO_TAIL_CLASS = 5,
  NLA_ERR_INTEGRATION = 6,
  NLA_ERR_CONFIG = 7,
  NLA_ERR_COORDINATES = 8,
  NLA_ERR_IO = 9,
  NLA_ERR_FIT = 10,
  NLA_ERR_NULL_ARGUMENT = 50,
  NLA_ERR_INTERNAL = 99
} nla_status;

/* Message for the last failing call on this thread; empty after success. */
NLA_API const char* nla_last_error(void);
NLA_API const char* nla_status_name(nla_status status);
NLA_API const char* nla_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
NLA_API void nla_string_free(char* s);

typedef enum nla_kernel_family {
  NLA_KERNEL_CONSTANT = 0,
  NLA_KERNEL_SMOOTH_TAIL = 1,
  NLA_KERNEL_CAPPED_POWER = 2
} nla_kernel_family;

typedef enum nla_rate_bound { NLA_BOUND_EXACT = 0, NLA_BOUND_LOWER = 1, NLA_BOUND_UPPER = 2 } nla_rate_bound;

typedef enum nla_coords { NLA_COORDS_RAW = 0, NLA_COORDS_S1 = 1, NLA_COORDS_SB = 2 } nla_coords;

typedef enum nla_field { NLA_FIELD_D = 0, NLA_FIELD_V = 1 } nla_field;

/* Model: exponent p, kernel and total mass. lambda, Lambda and R override the
   tail constants derived from the kernel when they are > 0. */
typedef struct nla_model {
  double p;
  nla_kernel_family kernel;
  double alpha;
  double r_min;
  double floor;
  double total_mass;
  double lambda;
  double Lambda;
  double R;
} nla_model;

NLA_API void nla_model_init(nla_model* model);

/* Output schedule and tolerances. Raw runs are sampled at t_first..t_end,
   samples_per_decade per factor of ten. Rescaled envelope runs use
   tau = log(1+t) and the same number of points spread linearly. */
typedef struct nla_run_config {
  double t_end;
  double t_first;
  size_t samples_per_decade;
  double atol;
  double rtol;
} nla_run_config;

NLA_API void nla_run_config_init(nla_run_config* config);

/* lambda*C and Lambda*C for the model. two_particle != 0 uses C = m0 (the
   two-particle reduction); otherwise C = 2^(2-p) m0. */
NLA_API nla_status nla_model_constants(const nla_model* model, int two_particle, double* lambdaC, double* LambdaC);

typedef struct nla_trajectory nla_trajectory;

typedef struct nla_sample {
  double t;
  double D;
  double V;
} nla_sample;

/* Particle run. agents == 2 with dim == 1 uses the symmetric two-particle
   configuration (x0 = initial D, v0 = initial V); otherwise agents are drawn
   from the seed with position and velocity spreads x0 and v0. */
NLA_API nla_status nla_simulate(const nla_model* model, size_t agents, size_t dim, double x0, double v0,
                                uint64_t seed, const nla_run_config* config, nla_trajectory** out);

/* Envelope run. C <= 0 selects the paired-inequality constant 2^(2-p) m0. */
NLA_API nla_status nla_envelope(const nla_model* model, double C, nla_rate_bound bound, nla_coords coords,
                                double D0, double V0, const nla_run_config* config, nla_trajectory** out);

NLA_API void nla_trajectory_free(nla_trajectory* traj);
NLA_API nla_status nla_trajectory_size(const nla_trajectory* traj, size_t* n);
NLA_API nla_status nla_trajectory_sample(const nla_trajectory* traj, size_t index, nla_sample* out);
NLA_API nla_status nla_trajectory_coords(const nla_trajectory* traj, nla_coords* out);
/* Writes the CSV and, when meta_path is non-null, the metadata JSON. */
NLA_API nla_status nla_trajectory_write(const nla_trajectory* traj, const char* csv_path, const char* meta_path);
NLA_API nla_status nla_trajectory_read(const char* csv_path, nla_trajectory** out);

/* Scenario label and predicted rates as JSON. */
NLA_API nla_status nla_classify_json(double p, double alpha, char** json_out);

/* Thresholds and regions for (p, alpha) with products lambdaC and LambdaC.
   Data-dependent entries are included when D0 > 0 and V0 > 0. */
NLA_API nla_status nla_regions_json(double p, double alpha, double lambdaC, double LambdaC, double D0, double V0,
                                    char** json_out);

/* Power-law fit (log_corrected == 0) or log-corrected fit. window_lo and
   window_hi <= 0 select the default window. */
NLA_API nla_status nla_fit_json(const nla_trajectory* traj, nla_field field, int log_corrected, double window_lo,
                                double window_hi, char** json_out);

/* Checks against the region named by `region`:
     "A", "B"        S1 invariant boxes (p > 3, alpha < 1)
     "box"           scenario 2 box (2 < p < 3) with the given beta, or the
                     subcritical witness when beta <= 0
     "floor"         no-alignment floors (alpha > 1)
     "lyapunov"      Lyapunov monotonicity (2 <= p < 3)
   D0 and V0 are the initial data the region is built from. */
NLA_API nla_status nla_check_json(const nla_trajectory* traj, const char* region, double p, double alpha,
                                  double lambdaC, double LambdaC, double D0, double V0, double beta,
                                  char** json_out);

/* Runs a sweep from key = value config text. jobs > 0 overrides the config;
   output_dir overrides the config when non-null. The summary JSON lists the
   written files and per-status row counts. */
NLA_API nla_status nla_sweep(const char* config_text, const char* output_dir, size_t jobs, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
