#pragma once

// Perron eigenproblem of the tilted generator A + diag(w).
//
// For a Metzler matrix A (non-negative off-diagonals) that is irreducible,
// A + diag(w) has a simple real eigenvalue lambda of largest real part with
// strictly positive right and left eigenvectors R and z. With w_n = p F_n(x),
// lambda(x, p) is the large-deviation Hamiltonian, and psi = z o R (under
// sum R = 1, <z, R> = 1) is the occupation measure selected at momentum p.

#include <Eigen/Dense>

#include "pdmp/model.hpp"

namespace pdmp {

struct SpectralSolution {
    double lambda = 0.0;
    Eigen::VectorXd right;      // R, positive, sums to 1
    Eigen::VectorXd left;       // z, positive, <z, R> = 1
    Eigen::VectorXd occupation; // psi = z o R, sums to 1
    int iterations = 0;
    double residual = 0.0;      // max eigen-residual of R and z (infinity norm)
};

struct PerronOptions {
    double tolerance = 1e-13;   // relative to the infinity norm of the shifted matrix
    int max_iterations = 100000;
    // Starting vectors for the two iterations; empty (or not strictly
    // positive) means the all-ones vector. Used to warm-start from a nearby
    // solution in root searches.
    Eigen::VectorXd initial_right;
    Eigen::VectorXd initial_left;
};

/// Power iteration on M = A + diag(w) + kappa I with
/// kappa = max_n |A_nn + w_n| + 1, run on M and M^T. The eigenvalue is
/// reported from the two-sided quotient z^T (A + diag(w)) R / z^T R.
/// Throws ValidationError for a reducible or non-Metzler A or non-finite w,
/// NumericError if the iteration budget is exhausted.
SpectralSolution perron_weighted(const Eigen::MatrixXd& a, const Eigen::VectorXd& w,
                                 const PerronOptions& opts = {});

inline SpectralSolution perron_weighted(const GeneratorMatrix& g, const Eigen::VectorXd& w,
                                        const PerronOptions& opts = {}) {
    return perron_weighted(g.a, w, opts);
}

/// H(x, p): Perron solution with weights p F_n(x).
SpectralSolution hamiltonian(const HybridModel& model, double x, double p);

/// Piecewise-SDE variant with weights p F_n(x) + p^2 sigma_n(x)^2 / 2.
SpectralSolution hamiltonian_sde(const HybridModel& model, double x, double p);

/// d lambda / d p = sum_n psi_n F_n, exact.
double dlambda_dp(const SpectralSolution& sol, const Eigen::VectorXd& drift);

/// Centered difference in x with h = 1e-6 max(1, |x|).
double dlambda_dx(const HybridModel& model, double x, double p);

/// Hessian of lambda(Q) in q_1..q_{K-1} (Q_K = 0), by centered differences of
/// psi(q) with step 1e-5, symmetrized.
Eigen::MatrixXd lambda_hessian_q(const Eigen::MatrixXd& a, const Eigen::VectorXd& q);

/// Same, returning the unsymmetrized difference matrix as well.
struct HessianQ {
    Eigen::MatrixXd symmetric;
    Eigen::MatrixXd raw;
};
HessianQ lambda_hessian_q_raw(const Eigen::MatrixXd& a, const Eigen::VectorXd& q);

/// Q = (q_1, ..., q_{K-1}, 0).
Eigen::VectorXd pad_q(const Eigen::VectorXd& q);

}  // namespace pdmp
