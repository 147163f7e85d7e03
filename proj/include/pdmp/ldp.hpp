#pragma once

// Rate-function pieces: the occupation cost j(x, psi), the q <-> psi duality,
// the Lagrangian as Legendre transform of lambda and path actions.

#include <vector>

#include <Eigen/Dense>

#include "pdmp/model.hpp"

namespace pdmp {

struct JCost {
    double j = 0.0;
    Eigen::VectorXd q;  // K-1 entries, q_K = 0
    int iterations = 0;
    double grad_norm = 0.0;
};

/// j = sup_q [<q, psi> - lambda(Q)] over q in R^{K-1} (q_K = 0), by damped
/// Newton. psi must be strictly positive and sum to 1 within 1e-12.
JCost j_cost(const Eigen::MatrixXd& a, const Eigen::VectorXd& psi);
JCost j_cost(const HybridModel& model, double x, const Eigen::VectorXd& psi);

/// psi(q) = z o R of a + diag(q, 0).
Eigen::VectorXd psi_from_q(const Eigen::MatrixXd& a, const Eigen::VectorXd& q);
Eigen::VectorXd psi_from_q(const HybridModel& model, double x, const Eigen::VectorXd& q);
Eigen::VectorXd q_from_psi(const Eigen::MatrixXd& a, const Eigen::VectorXd& psi);
Eigen::VectorXd q_from_psi(const HybridModel& model, double x, const Eigen::VectorXd& psi);

/// (1 - delta) psi + delta / K, for measures on the simplex boundary.
Eigen::VectorXd project_interior(const Eigen::VectorXd& psi, double delta = 1e-9);

struct LagrangianResult {
    double lagrangian = 0.0;
    double mu = 0.0;
    // All drifts nearly coincide, so the velocity inversion is ill-conditioned.
    bool ill_conditioned = false;
};

/// L(x, v) = mu v - lambda(x, mu) where d lambda/dp (x, mu) = v. v must lie
/// strictly between min_n F_n(x) and max_n F_n(x).
LagrangianResult lagrangian(const Eigen::MatrixXd& a, const Eigen::VectorXd& drift, double v);
LagrangianResult lagrangian(const HybridModel& model, double x, double v);

struct SdeLagrangianResult {
    double lagrangian = 0.0;
    double p = 0.0;
    double mu = 0.0;      // sum psi_n F_n at p
    double sigma2 = 0.0;  // sum psi_n sigma_n^2 at p
};

/// Same transform for the tilted problem with weights p F_n + p^2 sigma_n^2 / 2.
SdeLagrangianResult lagrangian_sde(const Eigen::MatrixXd& a, const Eigen::VectorXd& drift,
                                   const Eigen::VectorXd& sigma, double v);
SdeLagrangianResult lagrangian_sde(const HybridModel& model, double x, double v);

/// Sum over segments of L(midpoint x, secant velocity) dt. Times must start
/// at 0 and increase strictly.
double action(const HybridModel& model, const std::vector<double>& t, const std::vector<double>& x);

}  // namespace pdmp
