#include "pdmp/pdmp.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "pdmp/analytic.hpp"
#include "pdmp/config.hpp"
#include "pdmp/error.hpp"
#include "pdmp/hamilton.hpp"
#include "pdmp/ldp.hpp"
#include "pdmp/model.hpp"
#include "pdmp/perron.hpp"
#include "pdmp/sim.hpp"

struct pdmp_model {
    std::unique_ptr<pdmp::HybridModel> model;
};
struct pdmp_trajectory {
    pdmp::Trajectory tr;
};
struct pdmp_profile {
    pdmp::QuasipotentialProfile prof;
};
struct pdmp_flow {
    pdmp::FlowResult flow;
};
struct pdmp_fpt {
    pdmp::FptEnsemble fpt;
};
struct pdmp_report {
    pdmp::ValidationReport report;
};

namespace {

thread_local std::string g_last_error;

template <class F>
pdmp_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return PDMP_OK;
    } catch (const pdmp::Error& e) {
        g_last_error = e.what();
        return static_cast<pdmp_status>(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return PDMP_ERR_NUMERIC;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return PDMP_ERR_NUMERIC;
    }
}

void require(const void* ptr, const char* what) {
    if (!ptr) throw pdmp::ValidationError(std::string(what) + " must not be NULL");
}

const pdmp::HybridModel& get(const pdmp_model* m) {
    require(m, "model");
    return *m->model;
}

void copy_out(const Eigen::VectorXd& v, double* out) {
    if (out) std::memcpy(out, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

Eigen::MatrixXd read_matrix(const double* a, int k) {
    require(a, "matrix");
    if (k < 1) throw pdmp::ValidationError("matrix dimension must be positive");
    Eigen::MatrixXd m(k, k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) m(i, j) = a[i * k + j];
    }
    return m;
}

Eigen::VectorXd read_vector(const double* v, Eigen::Index n, const char* what) {
    if (n == 0) return Eigen::VectorXd(0);
    require(v, what);
    return Eigen::Map<const Eigen::VectorXd>(v, n);
}

void fill_spectrum(const pdmp::SpectralSolution& sol, pdmp_spectrum* out, double* right, double* left, double* psi) {
    if (out) {
        out->lambda = sol.lambda;
        out->residual = sol.residual;
        out->iterations = sol.iterations;
    }
    copy_out(sol.right, right);
    copy_out(sol.left, left);
    copy_out(sol.occupation, psi);
}

template <class T>
void set_out(T* out, T value) {
    if (out) *out = value;
}

pdmp_model* wrap(pdmp::HybridModel m) {
    return new pdmp_model{std::make_unique<pdmp::HybridModel>(std::move(m))};
}

}  // namespace

extern "C" {

const char* pdmp_last_error(void) { return g_last_error.c_str(); }
const char* pdmp_version(void) { return "1.0.0"; }

pdmp_status pdmp_model_load_file(const char* path, pdmp_model** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = wrap(pdmp::load_model_file(path));
    });
}

pdmp_status pdmp_model_load_json(const char* json, const char* origin, pdmp_model** out) {
    return guarded([&] {
        require(json, "json");
        require(out, "out");
        *out = wrap(pdmp::load_model_json(json, origin ? origin : "<config>"));
    });
}

pdmp_status pdmp_model_load_builtin(const char* name, pdmp_model** out) {
    return guarded([&] {
        require(name, "name");
        require(out, "out");
        const std::string_view text = pdmp::builtin_model_json(name);
        if (text.empty()) throw pdmp::ValidationError(std::string("unknown built-in model '") + name + "'");
        *out = wrap(pdmp::load_model_json(text, name));
    });
}

void pdmp_model_free(pdmp_model* model) { delete model; }

pdmp_status pdmp_model_set_epsilon(pdmp_model* model, double epsilon) {
    return guarded([&] {
        require(model, "model");
        *model->model = model->model->with_epsilon(epsilon);
    });
}

int pdmp_model_states(const pdmp_model* model) { return model ? model->model->states() : 0; }
double pdmp_model_epsilon(const pdmp_model* model) {
    return model ? model->model->epsilon() : std::numeric_limits<double>::quiet_NaN();
}
void pdmp_model_domain(const pdmp_model* model, double* lower, double* upper) {
    if (!model) return;
    set_out(lower, model->model->domain().lower);
    set_out(upper, model->model->domain().upper);
}
int pdmp_model_has_sigma(const pdmp_model* model) { return model && model->model->has_sigma() ? 1 : 0; }

pdmp_status pdmp_validate(const pdmp_model* model, int grid_n, pdmp_report** out) {
    return guarded([&] {
        require(out, "out");
        *out = new pdmp_report{pdmp::validate(get(model), grid_n)};
    });
}

size_t pdmp_report_count(const pdmp_report* report) { return report ? report->report.issues.size() : 0; }

const char* pdmp_report_issue(const pdmp_report* report, size_t i, int* from, int* to, int* has_x, double* x) {
    if (!report || i >= report->report.issues.size()) return nullptr;
    const auto& issue = report->report.issues[i];
    set_out(from, issue.from.value_or(0));
    set_out(to, issue.to.value_or(0));
    set_out(has_x, issue.x ? 1 : 0);
    set_out(x, issue.x.value_or(0.0));
    return issue.what.c_str();
}

void pdmp_report_free(pdmp_report* report) { delete report; }

pdmp_status pdmp_generator(const pdmp_model* model, double x, double* a_out) {
    return guarded([&] {
        require(a_out, "a_out");
        const Eigen::MatrixXd a = pdmp::generator(get(model), x).a;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            for (Eigen::Index j = 0; j < a.cols(); ++j) a_out[i * a.cols() + j] = a(i, j);
        }
    });
}

pdmp_status pdmp_invariant_measure(const pdmp_model* model, double x, double* rho_out) {
    return guarded([&] {
        require(rho_out, "rho_out");
        copy_out(pdmp::invariant_measure(get(model), x), rho_out);
    });
}

pdmp_status pdmp_averaged_field(const pdmp_model* model, double x, double* out) {
    return guarded([&] {
        require(out, "out");
        *out = pdmp::averaged_field(get(model), x);
    });
}

pdmp_status pdmp_fixed_points(const pdmp_model* model, int grid_n, double* xs, int* stable, size_t capacity,
                              size_t* count) {
    return guarded([&] {
        const auto fps = pdmp::fixed_points(get(model), grid_n);
        set_out(count, fps.size());
        for (std::size_t i = 0; i < fps.size() && i < capacity; ++i) {
            if (xs) xs[i] = fps[i].x;
            if (stable) stable[i] = fps[i].stability == pdmp::Stability::stable ? 1 : 0;
        }
    });
}

pdmp_status pdmp_hamiltonian(const pdmp_model* model, double x, double p, pdmp_spectrum* out, double* right,
                             double* left, double* psi) {
    return guarded([&] { fill_spectrum(pdmp::hamiltonian(get(model), x, p), out, right, left, psi); });
}

pdmp_status pdmp_hamiltonian_sde(const pdmp_model* model, double x, double p, pdmp_spectrum* out, double* right,
                                 double* left, double* psi) {
    return guarded([&] { fill_spectrum(pdmp::hamiltonian_sde(get(model), x, p), out, right, left, psi); });
}

pdmp_status pdmp_perron_weighted(const double* a, const double* w, int k, pdmp_spectrum* out, double* right,
                                 double* left, double* psi) {
    return guarded([&] {
        const Eigen::MatrixXd m = read_matrix(a, k);
        fill_spectrum(pdmp::perron_weighted(m, read_vector(w, k, "w")), out, right, left, psi);
    });
}

pdmp_status pdmp_dlambda_dp(const pdmp_model* model, double x, double p, double* out) {
    return guarded([&] {
        require(out, "out");
        const auto& m = get(model);
        *out = pdmp::dlambda_dp(pdmp::hamiltonian(m, x, p), m.drifts(x));
    });
}

pdmp_status pdmp_dlambda_dx(const pdmp_model* model, double x, double p, double* out) {
    return guarded([&] {
        require(out, "out");
        *out = pdmp::dlambda_dx(get(model), x, p);
    });
}

pdmp_status pdmp_lambda_hessian_q(const double* a, int k, const double* q, double* hess_out) {
    return guarded([&] {
        require(hess_out, "hess_out");
        const Eigen::MatrixXd h = pdmp::lambda_hessian_q(read_matrix(a, k), read_vector(q, k - 1, "q"));
        for (Eigen::Index i = 0; i < h.rows(); ++i) {
            for (Eigen::Index j = 0; j < h.cols(); ++j) hess_out[i * h.cols() + j] = h(i, j);
        }
    });
}

pdmp_status pdmp_oracle_binary_lambda(const pdmp_model* model, double x, double p, double* out) {
    return guarded([&] {
        require(out, "out");
        *out = pdmp::analytic::binary_lambda(pdmp::analytic::binary_params(get(model)), x, p);
    });
}

pdmp_status pdmp_oracle_binary_psi(const pdmp_model* model, double x, double p, double* psi_out) {
    return guarded([&] {
        require(psi_out, "psi_out");
        const auto [a, b] = pdmp::analytic::binary_psi(pdmp::analytic::binary_params(get(model)), x, p);
        psi_out[0] = a;
        psi_out[1] = b;
    });
}

pdmp_status pdmp_oracle_binary_momentum(const pdmp_model* model, double x, double* out) {
    return guarded([&] {
        require(out, "out");
        *out = pdmp::analytic::binary_zero_energy_momentum(pdmp::analytic::binary_params(get(model)), x);
    });
}

pdmp_status pdmp_oracle_ionchannel_lambda(const pdmp_model* model, double x, double p, double* out) {
    return guarded([&] {
        require(out, "out");
        *out = pdmp::analytic::ionchannel_lambda(pdmp::analytic::ion_channel_params(get(model)), x, p);
    });
}

pdmp_status pdmp_oracle_ionchannel_phi_prime(const pdmp_model* model, double x, double* out) {
    return guarded([&] {
        require(out, "out");
        *out = pdmp::analytic::ionchannel_phi_prime(pdmp::analytic::ion_channel_params(get(model)), x);
    });
}

pdmp_status pdmp_oracle_ionchannel_left_vector(const pdmp_model* model, double x, double p, double* z_out) {
    return guarded([&] {
        require(z_out, "z_out");
        const auto z = pdmp::analytic::ionchannel_left_vector(pdmp::analytic::ion_channel_params(get(model)), x, p);
        std::memcpy(z_out, z.data(), sizeof(double) * z.size());
    });
}

pdmp_status pdmp_oracle_ionchannel_rho(const pdmp_model* model, double x, double* rho_out) {
    return guarded([&] {
        require(rho_out, "rho_out");
        const auto rho = pdmp::analytic::ionchannel_invariant_measure(pdmp::analytic::ion_channel_params(get(model)), x);
        std::memcpy(rho_out, rho.data(), sizeof(double) * rho.size());
    });
}

double pdmp_oracle_appendix_lambda(double q1, double q2) { return pdmp::analytic::appendix_a_lambda(q1, q2); }

void pdmp_oracle_appendix_psi(double q1, double q2, double* psi_out) {
    if (!psi_out) return;
    const auto [a, b] = pdmp::analytic::appendix_a_psi(q1, q2);
    psi_out[0] = a;
    psi_out[1] = b;
}

pdmp_status pdmp_flow_run(const pdmp_model* model, double x0, double p0, double t_end, double dt, pdmp_flow** out) {
    return guarded([&] {
        require(out, "out");
        *out = new pdmp_flow{pdmp::flow(get(model), x0, p0, t_end, dt)};
    });
}

size_t pdmp_flow_size(const pdmp_flow* flow) { return flow ? flow->flow.points.size() : 0; }

void pdmp_flow_point(const pdmp_flow* flow, size_t i, double* t, double* x, double* p, double* energy) {
    if (!flow || i >= flow->flow.points.size()) return;
    const auto& pt = flow->flow.points[i];
    set_out(t, pt.t);
    set_out(x, pt.x);
    set_out(p, pt.p);
    set_out(energy, pt.energy);
}

int pdmp_flow_left_domain(const pdmp_flow* flow) { return flow && flow->flow.left_domain ? 1 : 0; }
void pdmp_flow_free(pdmp_flow* flow) { delete flow; }

pdmp_status pdmp_zero_energy_momentum(const pdmp_model* model, double x, double* out) {
    return guarded([&] {
        require(out, "out");
        *out = pdmp::zero_energy_momentum(get(model), x);
    });
}

pdmp_status pdmp_quasipotential(const pdmp_model* model, double x_anchor, double x_to, int n_grid, int trivial_branch,
                                pdmp_profile** out) {
    return guarded([&] {
        require(out, "out");
        const auto branch = trivial_branch ? pdmp::Branch::trivial : pdmp::Branch::nontrivial;
        *out = new pdmp_profile{pdmp::quasipotential(get(model), x_anchor, x_to, n_grid, branch)};
    });
}

size_t pdmp_profile_size(const pdmp_profile* profile) { return profile ? profile->prof.x.size() : 0; }

void pdmp_profile_point(const pdmp_profile* profile, size_t i, double* x, double* p_star, double* phi) {
    if (!profile || i >= profile->prof.x.size()) return;
    set_out(x, profile->prof.x[i]);
    set_out(p_star, profile->prof.p_star[i]);
    set_out(phi, profile->prof.phi[i]);
}

double pdmp_profile_delta_phi(const pdmp_profile* profile) {
    return profile ? profile->prof.delta_phi : std::numeric_limits<double>::quiet_NaN();
}

void pdmp_profile_free(pdmp_profile* profile) { delete profile; }

pdmp_status pdmp_escape_exponent(const pdmp_model* model, double* x_minus, double* x0, double* delta_phi) {
    return guarded([&] {
        const auto e = pdmp::escape_exponent(get(model));
        set_out(x_minus, e.x_minus);
        set_out(x0, e.x0);
        set_out(delta_phi, e.delta_phi);
    });
}

pdmp_status pdmp_j_cost(const pdmp_model* model, double x, const double* psi, double* j, double* q_out) {
    return guarded([&] {
        const auto& m = get(model);
        const auto res = pdmp::j_cost(m, x, read_vector(psi, m.states(), "psi"));
        set_out(j, res.j);
        copy_out(res.q, q_out);
    });
}

pdmp_status pdmp_j_cost_matrix(const double* a, int k, const double* psi, double* j, double* q_out) {
    return guarded([&] {
        const auto res = pdmp::j_cost(read_matrix(a, k), read_vector(psi, k, "psi"));
        set_out(j, res.j);
        copy_out(res.q, q_out);
    });
}

pdmp_status pdmp_psi_from_q(const pdmp_model* model, double x, const double* q, double* psi_out) {
    return guarded([&] {
        const auto& m = get(model);
        require(psi_out, "psi_out");
        copy_out(pdmp::psi_from_q(m, x, read_vector(q, m.states() - 1, "q")), psi_out);
    });
}

pdmp_status pdmp_q_from_psi(const pdmp_model* model, double x, const double* psi, double* q_out) {
    return guarded([&] {
        const auto& m = get(model);
        require(q_out, "q_out");
        copy_out(pdmp::q_from_psi(m, x, read_vector(psi, m.states(), "psi")), q_out);
    });
}

pdmp_status pdmp_lagrangian(const pdmp_model* model, double x, double v, double* l, double* mu,
                            int* ill_conditioned) {
    return guarded([&] {
        const auto res = pdmp::lagrangian(get(model), x, v);
        set_out(l, res.lagrangian);
        set_out(mu, res.mu);
        set_out(ill_conditioned, res.ill_conditioned ? 1 : 0);
    });
}

pdmp_status pdmp_lagrangian_sde(const pdmp_model* model, double x, double v, double* l, double* p, double* mu,
                                double* sigma2) {
    return guarded([&] {
        const auto res = pdmp::lagrangian_sde(get(model), x, v);
        set_out(l, res.lagrangian);
        set_out(p, res.p);
        set_out(mu, res.mu);
        set_out(sigma2, res.sigma2);
    });
}

pdmp_status pdmp_action(const pdmp_model* model, const double* t, const double* x, size_t n, double* out) {
    return guarded([&] {
        require(out, "out");
        require(t, "t");
        require(x, "x");
        *out = pdmp::action(get(model), std::vector<double>(t, t + n), std::vector<double>(x, x + n));
    });
}

pdmp_status pdmp_simulate(const pdmp_model* model, double x0, int n0, double t_end, uint64_t seed, double dt,
                          int stride, pdmp_trajectory** out) {
    return guarded([&] {
        require(out, "out");
        pdmp::SimOptions opts;
        opts.stride = stride;
        *out = new pdmp_trajectory{pdmp::simulate(get(model), x0, n0 - 1, t_end, seed, dt, opts)};
    });
}

pdmp_status pdmp_simulate_sde(const pdmp_model* model, double x0, int n0, double t_end, uint64_t seed, double dt,
                              int stride, pdmp_trajectory** out) {
    return guarded([&] {
        require(out, "out");
        pdmp::SimOptions opts;
        opts.stride = stride;
        *out = new pdmp_trajectory{pdmp::simulate_sde(get(model), x0, n0 - 1, t_end, seed, dt, opts)};
    });
}

size_t pdmp_trajectory_size(const pdmp_trajectory* tr) { return tr ? tr->tr.samples.size() : 0; }

void pdmp_trajectory_sample(const pdmp_trajectory* tr, size_t i, double* t, double* x, int* n) {
    if (!tr || i >= tr->tr.samples.size()) return;
    const auto& s = tr->tr.samples[i];
    set_out(t, s.t);
    set_out(x, s.x);
    set_out(n, s.n + 1);
}

size_t pdmp_trajectory_jumps(const pdmp_trajectory* tr) {
    return tr && !tr->tr.jump_times.empty() ? tr->tr.jump_times.size() - 1 : 0;
}

double pdmp_trajectory_jump_time(const pdmp_trajectory* tr, size_t i) {
    if (!tr || i + 1 >= tr->tr.jump_times.size()) return std::numeric_limits<double>::quiet_NaN();
    return tr->tr.jump_times[i + 1];
}

pdmp_termination pdmp_trajectory_termination(const pdmp_trajectory* tr) {
    if (!tr) return PDMP_REACHED_END;
    switch (tr->tr.termination) {
        case pdmp::Termination::absorbed:
            return PDMP_ABSORBED;
        case pdmp::Termination::left_domain:
            return PDMP_LEFT_DOMAIN;
        case pdmp::Termination::reached_end:
            break;
    }
    return PDMP_REACHED_END;
}

void pdmp_trajectory_free(pdmp_trajectory* tr) { delete tr; }

pdmp_status pdmp_occupancy(const pdmp_model* model, double x_frozen, double t_end, uint64_t seed, double* empirical,
                           double* stderr_out, double* rho, int* warning) {
    return guarded([&] {
        const auto res = pdmp::occupancy(get(model), x_frozen, t_end, seed);
        copy_out(res.empirical, empirical);
        copy_out(res.stderr_, stderr_out);
        copy_out(res.rho, rho);
        set_out(warning, res.warning ? 1 : 0);
    });
}

pdmp_status pdmp_first_passage(const pdmp_model* model, double x_start, const double* n_dist, double x_abs,
                               double t_max, int n_rep, uint64_t seed, double dt, unsigned threads, pdmp_fpt** out) {
    return guarded([&] {
        require(out, "out");
        const auto& m = get(model);
        const Eigen::VectorXd dist =
            n_dist ? read_vector(n_dist, m.states(), "n_dist") : pdmp::invariant_measure(m, x_start);
        pdmp::FptOptions opts;
        opts.dt = dt;
        opts.threads = threads;
        *out = new pdmp_fpt{pdmp::first_passage_ensemble(m, x_start, dist, x_abs, t_max, n_rep, seed, opts)};
    });
}

void pdmp_fpt_summary(const pdmp_fpt* fpt, double* mean, double* stderr_out, double* cv, int* absorbed, int* timeouts,
                      int* left_domain) {
    if (!fpt) return;
    set_out(mean, fpt->fpt.mean);
    set_out(stderr_out, fpt->fpt.stderr_);
    set_out(cv, fpt->fpt.cv);
    set_out(absorbed, fpt->fpt.absorbed);
    set_out(timeouts, fpt->fpt.timeouts);
    set_out(left_domain, fpt->fpt.left_domain);
}

size_t pdmp_fpt_size(const pdmp_fpt* fpt) { return fpt ? fpt->fpt.tau.size() : 0; }

double pdmp_fpt_tau(const pdmp_fpt* fpt, size_t i) {
    if (!fpt || i >= fpt->fpt.tau.size()) return std::numeric_limits<double>::quiet_NaN();
    return fpt->fpt.tau[i];
}

void pdmp_fpt_free(pdmp_fpt* fpt) { delete fpt; }

}  // extern "C"
