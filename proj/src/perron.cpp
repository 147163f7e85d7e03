#include "pdmp/perron.hpp"

#include <cmath>
#include <string>

namespace pdmp {

namespace {

struct PowerResult {
    Eigen::VectorXd v;
    int iterations;
};

// Dominant eigenvector of a non-negative primitive matrix. Iterates on
// ||v||_inf = 1 and stops once ||Mv - theta v||_inf <= tol ||M||_inf with the
// Rayleigh quotient theta and, so that entries many orders below the largest
// are also resolved, once the Collatz-Wielandt ratios (Mv)_i / v_i agree to
// tol relative.
PowerResult power_iterate(const Eigen::MatrixXd& m, const Eigen::VectorXd& start, double tol, int max_iterations) {
    const auto k = m.rows();
    const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(k);
    if (start.size() == k && start.allFinite() && start.minCoeff() > 0.0) v = start / start.maxCoeff();
    Eigen::VectorXd u(k);
    for (int it = 1; it <= max_iterations; ++it) {
        u.noalias() = m * v;
        const double theta = v.dot(u) / v.squaredNorm();
        const double res = (u - theta * v).cwiseAbs().maxCoeff();
        const double scale = u.cwiseAbs().maxCoeff();
        if (!(scale > 0.0) || !std::isfinite(scale)) throw NumericError("power iteration degenerated");
        if (res <= tol * norm) {
            const auto ratio = u.array() / v.array();
            if (ratio.maxCoeff() - ratio.minCoeff() <= tol * ratio.maxCoeff()) return {u / scale, it};
        }
        v = u / scale;
    }
    throw NumericError("Perron power iteration did not converge within " + std::to_string(max_iterations) +
                       " iterations");
}

}  // namespace

SpectralSolution perron_weighted(const Eigen::MatrixXd& a, const Eigen::VectorXd& w, const PerronOptions& opts) {
    const auto k = a.rows();
    if (k < 1 || a.cols() != k) throw ValidationError("perron_weighted: matrix must be square and non-empty");
    if (w.size() != k) throw ValidationError("perron_weighted: weight vector has the wrong dimension");
    if (!a.allFinite() || !w.allFinite()) throw ValidationError("perron_weighted: non-finite input");
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            if (i != j && a(i, j) < 0.0) throw ValidationError("perron_weighted: negative off-diagonal entry");
        }
    }
    if (!is_irreducible(a)) throw ValidationError("perron_weighted: matrix is reducible");

    Eigen::MatrixXd tilted = a;
    tilted.diagonal() += w;
    const double kappa = tilted.diagonal().cwiseAbs().maxCoeff() + 1.0;
    Eigen::MatrixXd shifted = tilted;
    shifted.diagonal().array() += kappa;

    const PowerResult right = power_iterate(shifted, opts.initial_right, opts.tolerance, opts.max_iterations);
    const Eigen::MatrixXd shifted_t = shifted.transpose();
    const PowerResult left = power_iterate(shifted_t, opts.initial_left, opts.tolerance, opts.max_iterations);

    SpectralSolution sol;
    sol.right = right.v / right.v.sum();
    sol.left = left.v / left.v.dot(sol.right);
    // Two-sided quotient on the unshifted matrix: second-order accurate in the
    // eigenvector error and free of the cancellation in lambda_M - kappa.
    sol.lambda = sol.left.dot(tilted * sol.right) / sol.left.dot(sol.right);
    sol.occupation = sol.left.cwiseProduct(sol.right);
    sol.occupation /= sol.occupation.sum();
    sol.iterations = right.iterations + left.iterations;

    const double res_r = (tilted * sol.right - sol.lambda * sol.right).cwiseAbs().maxCoeff() /
                         sol.right.cwiseAbs().maxCoeff();
    const double res_z = (tilted.transpose() * sol.left - sol.lambda * sol.left).cwiseAbs().maxCoeff() /
                         sol.left.cwiseAbs().maxCoeff();
    sol.residual = std::max(res_r, res_z);
    return sol;
}

SpectralSolution hamiltonian(const HybridModel& model, double x, double p) {
    const GeneratorMatrix g = generator(model, x);
    return perron_weighted(g.a, p * model.drifts(x));
}

SpectralSolution hamiltonian_sde(const HybridModel& model, double x, double p) {
    if (!model.has_sigma()) throw ValidationError("hamiltonian_sde: model has no sigma expressions");
    const GeneratorMatrix g = generator(model, x);
    const Eigen::VectorXd s = model.sigmas(x);
    const Eigen::VectorXd w = p * model.drifts(x) + (0.5 * p * p) * s.cwiseProduct(s);
    return perron_weighted(g.a, w);
}

double dlambda_dp(const SpectralSolution& sol, const Eigen::VectorXd& drift) {
    if (drift.size() != sol.occupation.size()) throw ValidationError("dlambda_dp: dimension mismatch");
    return sol.occupation.dot(drift);
}

double dlambda_dx(const HybridModel& model, double x, double p) {
    const double h = 1e-6 * std::max(1.0, std::fabs(x));
    const double up = hamiltonian(model, x + h, p).lambda;
    const double down = hamiltonian(model, x - h, p).lambda;
    return (up - down) / (2.0 * h);
}

Eigen::VectorXd pad_q(const Eigen::VectorXd& q) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(q.size() + 1);
    full.head(q.size()) = q;
    return full;
}

HessianQ lambda_hessian_q_raw(const Eigen::MatrixXd& a, const Eigen::VectorXd& q) {
    const auto k = a.rows();
    if (q.size() != k - 1) throw ValidationError("lambda_hessian_q: q must have K-1 entries");
    constexpr double step = 1e-5;
    const auto d = q.size();
    Eigen::MatrixXd raw(d, d);
    for (Eigen::Index n = 0; n < d; ++n) {
        Eigen::VectorXd up = q;
        Eigen::VectorXd down = q;
        up[n] += step;
        down[n] -= step;
        const Eigen::VectorXd psi_up = perron_weighted(a, pad_q(up)).occupation;
        const Eigen::VectorXd psi_down = perron_weighted(a, pad_q(down)).occupation;
        // Column n holds d psi_m / d q_n.
        raw.col(n) = (psi_up.head(d) - psi_down.head(d)) / (2.0 * step);
    }
    return {0.5 * (raw + raw.transpose()), raw};
}

Eigen::MatrixXd lambda_hessian_q(const Eigen::MatrixXd& a, const Eigen::VectorXd& q) {
    return lambda_hessian_q_raw(a, q).symmetric;
}

}  // namespace pdmp
