#include "pdmp/ldp.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "pdmp/perron.hpp"

namespace pdmp {

namespace {

void check_interior(const Eigen::VectorXd& psi, Eigen::Index k) {
    if (psi.size() != k) throw ValidationError("psi has the wrong dimension");
    if (!psi.allFinite()) throw ValidationError("psi must be finite");
    if (std::fabs(psi.sum() - 1.0) > 1e-12) throw ValidationError("psi must sum to 1");
    if ((psi.array() <= 0.0).any()) {
        throw ValidationError("psi lies on the simplex boundary; no finite q exists (see project_interior)");
    }
}

double objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& q, const Eigen::VectorXd& psi,
                 Eigen::VectorXd* grad) {
    const SpectralSolution sol = perron_weighted(a, pad_q(q));
    const auto d = q.size();
    if (grad) *grad = sol.occupation.head(d) - psi.head(d);
    return sol.lambda - q.dot(psi.head(d));
}

struct VelocityRoot {
    double p;
    double residual;
};

// Solves deriv(p) = v for increasing deriv, starting from a bracket around 0.
VelocityRoot invert_velocity(const std::function<double(double)>& deriv, double v) {
    const double d0 = deriv(0.0);
    if (std::fabs(d0 - v) <= 1e-12) return {0.0, std::fabs(d0 - v)};
    const double dir = v > d0 ? 1.0 : -1.0;
    double lo = 0.0;
    double hi = dir;
    double d_hi = deriv(hi);
    for (int i = 0; dir * (d_hi - v) < 0.0; ++i) {
        if (i > 60) throw ValidationError("velocity is not reachable: no finite conjugate momentum");
        lo = hi;
        hi *= 2.0;
        d_hi = deriv(hi);
    }
    if (std::fabs(d_hi - v) <= 1e-12) return {hi, std::fabs(d_hi - v)};
    double best = hi;
    double best_res = std::fabs(d_hi - v);
    for (int i = 0; i < 400; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double dm = deriv(mid);
        const double res = std::fabs(dm - v);
        if (res < best_res) {
            best = mid;
            best_res = res;
        }
        if (res <= 1e-12) break;
        if (dir * (dm - v) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return {best, best_res};
}

}  // namespace

JCost j_cost(const Eigen::MatrixXd& a, const Eigen::VectorXd& psi) {
    const auto k = a.rows();
    if (k < 1 || a.cols() != k) throw ValidationError("j_cost: matrix must be square");
    check_interior(psi, k);
    const auto d = k - 1;
    JCost out;
    out.q = Eigen::VectorXd::Zero(d);
    if (d == 0) return out;

    Eigen::VectorXd grad;
    double g = objective(a, out.q, psi, &grad);
    constexpr int kMaxIterations = 500;
    // Far from the optimum lambda(Q) is nearly piecewise linear in q and the
    // Hessian nearly singular, so Newton steps are capped in length. The cap
    // grows with |q| since optima near the simplex boundary lie far out.
    auto max_step = [&] { return 2.0 * std::max(1.0, out.q.cwiseAbs().maxCoeff()); };
    Eigen::VectorXd trial_grad;
    // Accepts a strict decrease, or a change at rounding level that still
    // shrinks the gradient (g is flat to machine precision near q*).
    auto try_step = [&](const Eigen::VectorXd& step, double t) {
        const Eigen::VectorXd trial = out.q + t * step;
        const double gt = objective(a, trial, psi, &trial_grad);
        // g = lambda - <q, psi> cancels terms of size |q|.
        const double noise = 1e-13 * (1.0 + std::fabs(g) + trial.cwiseAbs().maxCoeff());
        const bool ok = gt < g || (gt <= g + noise && trial_grad.cwiseAbs().maxCoeff() < out.grad_norm);
        if (ok) {
            out.q = trial;
            g = gt;
            grad = trial_grad;
        }
        return ok;
    };
    for (int it = 0; it < kMaxIterations; ++it) {
        out.iterations = it;
        out.grad_norm = grad.cwiseAbs().maxCoeff();
        if (out.grad_norm <= 1e-10) {
            out.j = -g;
            return out;
        }
        const Eigen::MatrixXd hess = lambda_hessian_q(a, out.q);
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = -ldlt.solve(grad);
        if (step.size() != d || !step.allFinite() || step.dot(grad) >= 0.0) step = -grad;
        const double len = step.cwiseAbs().maxCoeff();
        if (len > max_step()) step *= max_step() / len;

        bool accepted = false;
        double t = 1.0;
        for (int halving = 0; halving <= 5 && !accepted; ++halving, t *= 0.5) accepted = try_step(step, t);
        if (!accepted) {
            // Gradient fallback. Along a nearly flat direction the unit step
            // is far too short to register, so t is first grown while g keeps
            // dropping and only halved if even t = 1 overshoots.
            const Eigen::VectorXd descent = -grad;
            const Eigen::VectorXd q0 = out.q;
            const double g0 = g;
            auto value = [&](double tt) { return objective(a, q0 + tt * descent, psi, nullptr); };
            double best_t = 0.0;
            double best_g = g0;
            for (double tt = 1.0; tt < 1e300 && tt * descent.cwiseAbs().maxCoeff() <= max_step(); tt *= 2.0) {
                const double gt = value(tt);
                if (!(gt < best_g)) {
                    // Past the minimum, or already overshooting at t = 1.
                    if (best_t > 0.0 || gt > g0 + 1e-13 * (1.0 + std::fabs(g0) + q0.cwiseAbs().maxCoeff())) break;
                    continue;
                }
                best_t = tt;
                best_g = gt;
            }
            for (double tt = 0.5; best_t == 0.0 && tt > 1e-30; tt *= 0.5) {
                const double gt = value(tt);
                if (gt < best_g) {
                    best_t = tt;
                    best_g = gt;
                }
            }
            if (best_t > 0.0) {
                out.q = q0 + best_t * descent;
                g = objective(a, out.q, psi, &grad);
                accepted = true;
            }
        }
        if (!accepted) break;
    }
    throw NumericError("j_cost: Newton iteration did not converge (gradient norm " + std::to_string(out.grad_norm) +
                       ")");
}

JCost j_cost(const HybridModel& model, double x, const Eigen::VectorXd& psi) {
    return j_cost(generator(model, x).a, psi);
}

Eigen::VectorXd psi_from_q(const Eigen::MatrixXd& a, const Eigen::VectorXd& q) {
    if (q.size() != a.rows() - 1) throw ValidationError("psi_from_q: q must have K-1 entries");
    if (!q.allFinite()) throw ValidationError("psi_from_q: q must be finite");
    return perron_weighted(a, pad_q(q)).occupation;
}

Eigen::VectorXd psi_from_q(const HybridModel& model, double x, const Eigen::VectorXd& q) {
    return psi_from_q(generator(model, x).a, q);
}

Eigen::VectorXd q_from_psi(const Eigen::MatrixXd& a, const Eigen::VectorXd& psi) { return j_cost(a, psi).q; }

Eigen::VectorXd q_from_psi(const HybridModel& model, double x, const Eigen::VectorXd& psi) {
    return j_cost(model, x, psi).q;
}

Eigen::VectorXd project_interior(const Eigen::VectorXd& psi, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("project_interior: delta must lie in (0, 1)");
    const auto k = static_cast<double>(psi.size());
    Eigen::VectorXd out = (1.0 - delta) * psi.array() + delta / k;
    return out / out.sum();
}

LagrangianResult lagrangian(const Eigen::MatrixXd& a, const Eigen::VectorXd& drift, double v) {
    if (drift.size() != a.rows()) throw ValidationError("lagrangian: drift has the wrong dimension");
    if (!std::isfinite(v)) throw ValidationError("lagrangian: velocity must be finite");
    const double f_min = drift.minCoeff();
    const double f_max = drift.maxCoeff();
    if (!(v > f_min && v < f_max)) {
        throw ValidationError("lagrangian: velocity outside the reachable range (min F, max F)");
    }
    auto deriv = [&](double mu) { return perron_weighted(a, mu * drift).occupation.dot(drift); };
    const VelocityRoot root = invert_velocity(deriv, v);
    LagrangianResult out;
    out.mu = root.p;
    out.lagrangian = root.p == 0.0 ? 0.0 : root.p * v - perron_weighted(a, root.p * drift).lambda;
    const double spread = f_max - f_min;
    out.ill_conditioned = spread <= 1e-8 * std::max(1.0, drift.cwiseAbs().maxCoeff()) || root.residual > 1e-9;
    return out;
}

LagrangianResult lagrangian(const HybridModel& model, double x, double v) {
    return lagrangian(generator(model, x).a, model.drifts(x), v);
}

SdeLagrangianResult lagrangian_sde(const Eigen::MatrixXd& a, const Eigen::VectorXd& drift,
                                   const Eigen::VectorXd& sigma, double v) {
    if (drift.size() != a.rows() || sigma.size() != a.rows()) {
        throw ValidationError("lagrangian_sde: drift/sigma have the wrong dimension");
    }
    if (!std::isfinite(v)) throw ValidationError("lagrangian_sde: velocity must be finite");
    const Eigen::VectorXd s2 = sigma.cwiseProduct(sigma);
    if ((s2.array() == 0.0).all() && !(v > drift.minCoeff() && v < drift.maxCoeff())) {
        throw ValidationError("lagrangian_sde: velocity outside the reachable range (min F, max F)");
    }
    auto solve = [&](double p) { return perron_weighted(a, p * drift + (0.5 * p * p) * s2); };
    auto deriv = [&](double p) {
        const SpectralSolution sol = solve(p);
        return sol.occupation.dot(drift + p * s2);
    };
    const VelocityRoot root = invert_velocity(deriv, v);
    const SpectralSolution sol = solve(root.p);
    SdeLagrangianResult out;
    out.p = root.p;
    out.lagrangian = root.p == 0.0 ? 0.0 : root.p * v - sol.lambda;
    out.mu = sol.occupation.dot(drift);
    out.sigma2 = sol.occupation.dot(s2);
    return out;
}

SdeLagrangianResult lagrangian_sde(const HybridModel& model, double x, double v) {
    if (!model.has_sigma()) throw ValidationError("lagrangian_sde: model has no sigma expressions");
    return lagrangian_sde(generator(model, x).a, model.drifts(x), model.sigmas(x), v);
}

double action(const HybridModel& model, const std::vector<double>& t, const std::vector<double>& x) {
    if (t.size() != x.size()) throw ValidationError("action: t and x differ in length");
    if (t.size() < 2) throw ValidationError("action: path needs at least two samples");
    if (t.front() != 0.0) throw ValidationError("action: path must start at t = 0");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(x[i])) throw ValidationError("action: non-finite sample");
        if (i > 0 && !(t[i] > t[i - 1])) throw ValidationError("action: times must increase strictly");
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        const double dt = t[i + 1] - t[i];
        const double v = (x[i + 1] - x[i]) / dt;
        const double xm = 0.5 * (x[i] + x[i + 1]);
        try {
            total += lagrangian(model, xm, v).lagrangian * dt;
        } catch (const ValidationError& e) {
            throw ValidationError("action: segment " + std::to_string(i) + ": " + e.what());
        }
    }
    return total;
}

}  // namespace pdmp
