/* C interface to the hybrid-system large-deviation library.
 *
 * Every function returns a pdmp_status; on failure pdmp_last_error() holds a
 * one-line message for the calling thread. Objects are opaque handles freed
 * by their matching *_free function. State indices are 1-based here, as in
 * config files. Arrays are caller-allocated unless a handle owns them. */
#ifndef PDMP_PDMP_H
#define PDMP_PDMP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef PDMP_BUILDING_LIBRARY
#    define PDMP_API __declspec(dllexport)
#  else
#    define PDMP_API __declspec(dllimport)
#  endif
#else
#  define PDMP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pdmp_status {
    PDMP_OK = 0,
    PDMP_ERR_VALIDATION = 1,
    PDMP_ERR_NUMERIC = 2,
    PDMP_ERR_IO = 3
} pdmp_status;

typedef struct pdmp_model pdmp_model;
typedef struct pdmp_trajectory pdmp_trajectory;
typedef struct pdmp_profile pdmp_profile;
typedef struct pdmp_flow pdmp_flow;
typedef struct pdmp_fpt pdmp_fpt;
typedef struct pdmp_report pdmp_report;

PDMP_API const char* pdmp_last_error(void);
PDMP_API const char* pdmp_version(void);

/* ---- models ---- */
PDMP_API pdmp_status pdmp_model_load_file(const char* path, pdmp_model** out);
PDMP_API pdmp_status pdmp_model_load_json(const char* json, const char* origin, pdmp_model** out);
/* "binary", "bistable" or "sodium_channel". */
PDMP_API pdmp_status pdmp_model_load_builtin(const char* name, pdmp_model** out);
PDMP_API void pdmp_model_free(pdmp_model* model);
PDMP_API pdmp_status pdmp_model_set_epsilon(pdmp_model* model, double epsilon);
PDMP_API int pdmp_model_states(const pdmp_model* model);
PDMP_API double pdmp_model_epsilon(const pdmp_model* model);
PDMP_API void pdmp_model_domain(const pdmp_model* model, double* lower, double* upper);
PDMP_API int pdmp_model_has_sigma(const pdmp_model* model);

/* Grid validation. Returns PDMP_OK even when issues are found; inspect the report. */
PDMP_API pdmp_status pdmp_validate(const pdmp_model* model, int grid_n, pdmp_report** out);
PDMP_API size_t pdmp_report_count(const pdmp_report* report);
/* from/to are 0 when not applicable; has_x tells whether x is meaningful. */
PDMP_API const char* pdmp_report_issue(const pdmp_report* report, size_t i, int* from, int* to, int* has_x,
                                       double* x);
PDMP_API void pdmp_report_free(pdmp_report* report);

/* K*K row-major. */
PDMP_API pdmp_status pdmp_generator(const pdmp_model* model, double x, double* a_out);
PDMP_API pdmp_status pdmp_invariant_measure(const pdmp_model* model, double x, double* rho_out);
PDMP_API pdmp_status pdmp_averaged_field(const pdmp_model* model, double x, double* out);
/* Writes up to capacity roots; *count receives the total. stable[i] is 1 or 0. */
PDMP_API pdmp_status pdmp_fixed_points(const pdmp_model* model, int grid_n, double* xs, int* stable,
                                       size_t capacity, size_t* count);

/* ---- spectral ---- */
typedef struct pdmp_spectrum {
    double lambda;
    double residual;
    int iterations;
} pdmp_spectrum;

/* right, left, psi are K-vectors, any may be NULL. */
PDMP_API pdmp_status pdmp_hamiltonian(const pdmp_model* model, double x, double p, pdmp_spectrum* out,
                                      double* right, double* left, double* psi);
PDMP_API pdmp_status pdmp_hamiltonian_sde(const pdmp_model* model, double x, double p, pdmp_spectrum* out,
                                          double* right, double* left, double* psi);
/* Generic problem (A + diag(w)) R = lambda R for a K*K row-major Metzler matrix. */
PDMP_API pdmp_status pdmp_perron_weighted(const double* a, const double* w, int k, pdmp_spectrum* out,
                                          double* right, double* left, double* psi);
PDMP_API pdmp_status pdmp_dlambda_dp(const pdmp_model* model, double x, double p, double* out);
PDMP_API pdmp_status pdmp_dlambda_dx(const pdmp_model* model, double x, double p, double* out);
/* (K-1)*(K-1) row-major, symmetrized. */
PDMP_API pdmp_status pdmp_lambda_hessian_q(const double* a, int k, const double* q, double* hess_out);

/* ---- closed forms ---- */
PDMP_API pdmp_status pdmp_oracle_binary_lambda(const pdmp_model* model, double x, double p, double* out);
PDMP_API pdmp_status pdmp_oracle_binary_psi(const pdmp_model* model, double x, double p, double* psi_out);
PDMP_API pdmp_status pdmp_oracle_binary_momentum(const pdmp_model* model, double x, double* out);
PDMP_API pdmp_status pdmp_oracle_ionchannel_lambda(const pdmp_model* model, double x, double p, double* out);
PDMP_API pdmp_status pdmp_oracle_ionchannel_phi_prime(const pdmp_model* model, double x, double* out);
/* N+1 entries each. */
PDMP_API pdmp_status pdmp_oracle_ionchannel_left_vector(const pdmp_model* model, double x, double p, double* z_out);
PDMP_API pdmp_status pdmp_oracle_ionchannel_rho(const pdmp_model* model, double x, double* rho_out);
PDMP_API double pdmp_oracle_appendix_lambda(double q1, double q2);
PDMP_API void pdmp_oracle_appendix_psi(double q1, double q2, double* psi_out);

/* ---- Hamilton-Jacobi ---- */
PDMP_API pdmp_status pdmp_flow_run(const pdmp_model* model, double x0, double p0, double t_end, double dt,
                                   pdmp_flow** out);
PDMP_API size_t pdmp_flow_size(const pdmp_flow* flow);
PDMP_API void pdmp_flow_point(const pdmp_flow* flow, size_t i, double* t, double* x, double* p, double* energy);
PDMP_API int pdmp_flow_left_domain(const pdmp_flow* flow);
PDMP_API void pdmp_flow_free(pdmp_flow* flow);

PDMP_API pdmp_status pdmp_zero_energy_momentum(const pdmp_model* model, double x, double* out);
/* trivial_branch != 0 selects p* = 0. */
PDMP_API pdmp_status pdmp_quasipotential(const pdmp_model* model, double x_anchor, double x_to, int n_grid,
                                         int trivial_branch, pdmp_profile** out);
PDMP_API size_t pdmp_profile_size(const pdmp_profile* profile);
PDMP_API void pdmp_profile_point(const pdmp_profile* profile, size_t i, double* x, double* p_star, double* phi);
PDMP_API double pdmp_profile_delta_phi(const pdmp_profile* profile);
PDMP_API void pdmp_profile_free(pdmp_profile* profile);
PDMP_API pdmp_status pdmp_escape_exponent(const pdmp_model* model, double* x_minus, double* x0, double* delta_phi);

/* ---- rate function ---- */
/* psi has K entries, q_out K-1. */
PDMP_API pdmp_status pdmp_j_cost(const pdmp_model* model, double x, const double* psi, double* j, double* q_out);
PDMP_API pdmp_status pdmp_j_cost_matrix(const double* a, int k, const double* psi, double* j, double* q_out);
PDMP_API pdmp_status pdmp_psi_from_q(const pdmp_model* model, double x, const double* q, double* psi_out);
PDMP_API pdmp_status pdmp_q_from_psi(const pdmp_model* model, double x, const double* psi, double* q_out);
/* ill_conditioned may be NULL. */
PDMP_API pdmp_status pdmp_lagrangian(const pdmp_model* model, double x, double v, double* l, double* mu,
                                     int* ill_conditioned);
/* mu and sigma2 may be NULL. */
PDMP_API pdmp_status pdmp_lagrangian_sde(const pdmp_model* model, double x, double v, double* l, double* p,
                                         double* mu, double* sigma2);
PDMP_API pdmp_status pdmp_action(const pdmp_model* model, const double* t, const double* x, size_t n, double* out);

/* ---- simulation ---- */
typedef enum pdmp_termination {
    PDMP_REACHED_END = 0,
    PDMP_ABSORBED = 1,
    PDMP_LEFT_DOMAIN = 2
} pdmp_termination;

/* n0 is 1-based. stride >= 1 thins the per-step samples. */
PDMP_API pdmp_status pdmp_simulate(const pdmp_model* model, double x0, int n0, double t_end, uint64_t seed,
                                   double dt, int stride, pdmp_trajectory** out);
PDMP_API pdmp_status pdmp_simulate_sde(const pdmp_model* model, double x0, int n0, double t_end, uint64_t seed,
                                       double dt, int stride, pdmp_trajectory** out);
PDMP_API size_t pdmp_trajectory_size(const pdmp_trajectory* tr);
/* n is 1-based. */
PDMP_API void pdmp_trajectory_sample(const pdmp_trajectory* tr, size_t i, double* t, double* x, int* n);
PDMP_API size_t pdmp_trajectory_jumps(const pdmp_trajectory* tr);
PDMP_API double pdmp_trajectory_jump_time(const pdmp_trajectory* tr, size_t i);
PDMP_API pdmp_termination pdmp_trajectory_termination(const pdmp_trajectory* tr);
PDMP_API void pdmp_trajectory_free(pdmp_trajectory* tr);

/* empirical, stderr_out, rho are K-vectors; warning (may be NULL) is set to 1 when
 * the expected jump count is below 1e4. */
PDMP_API pdmp_status pdmp_occupancy(const pdmp_model* model, double x_frozen, double t_end, uint64_t seed,
                                    double* empirical, double* stderr_out, double* rho, int* warning);

/* n_dist: K initial-state weights, or NULL for rho(x_start). threads 0 = all cores. */
PDMP_API pdmp_status pdmp_first_passage(const pdmp_model* model, double x_start, const double* n_dist, double x_abs,
                                        double t_max, int n_rep, uint64_t seed, double dt, unsigned threads,
                                        pdmp_fpt** out);
PDMP_API void pdmp_fpt_summary(const pdmp_fpt* fpt, double* mean, double* stderr_out, double* cv, int* absorbed,
                               int* timeouts, int* left_domain);
PDMP_API size_t pdmp_fpt_size(const pdmp_fpt* fpt);
/* NaN when replica i did not reach x_abs. */
PDMP_API double pdmp_fpt_tau(const pdmp_fpt* fpt, size_t i);
PDMP_API void pdmp_fpt_free(pdmp_fpt* fpt);

#ifdef __cplusplus
}
#endif

#endif
