#pragma once

// Closed-form reference results for the two-state model, the birth-death ion
// channel model and a 2x2 worked example. These only evaluate expressions and
// never call the spectral solver, so they can be used to check it.

#include <utility>
#include <vector>

#include "pdmp/expr.hpp"
#include "pdmp/model.hpp"

namespace pdmp::analytic {

/// Two-state chain 0 -> 1 at omega_plus(x), 1 -> 0 at omega_minus(x), with
/// drifts F0(x), F1(x).
struct BinaryParams {
    Expr omega_plus;
    Expr omega_minus;
    Expr f0;
    Expr f1;
    ParamMap params;
};

/// N channels, each opening at alpha(x) and closing at beta(x); drift
/// F_n = (n/N) f(x) - g(x).
struct IonChannelParams {
    int channels = 1;
    Expr alpha;
    Expr beta;
    Expr f;
    Expr g;
    ParamMap params;
};

/// Extracts the two-state parameters of a K = 2 model (state 1 is "0").
BinaryParams binary_params(const HybridModel& model);
/// Requires a model built from an ion_channel config block.
IonChannelParams ion_channel_params(const HybridModel& model);

/// lambda = (Sigma + sqrt(Sigma^2 - 4 gamma)) / 2 with
/// Sigma = p(F0 + F1) - (w+ + w-), gamma = (p F1 - w-)(p F0 - w+) - w- w+.
double binary_lambda(const BinaryParams& bp, double x, double p);

/// psi_{0,1} = (1 +- (p(F0 - F1) - (w+ - w-)) / sqrt(D)) / 2, D = Sigma^2 - 4 gamma.
std::pair<double, double> binary_psi(const BinaryParams& bp, double x, double p);

/// Nontrivial zero-energy momentum of the two-state model, w+/F0 + w-/F1.
double binary_zero_energy_momentum(const BinaryParams& bp, double x);

/// Larger root of lambda^2 + s lambda - h = 0 with
/// s = p(2g - f) + N(alpha + beta), h = p(-N beta g + (N alpha + p g)(f - g)).
/// Throws NumericError for a negative discriminant.
double ionchannel_lambda(const IonChannelParams& ip, double x, double p);

/// Phi0'(x) = -N (alpha f - (alpha + beta) g) / (g (f - g)).
/// Throws NumericError where g (f - g) vanishes.
double ionchannel_phi_prime(const IonChannelParams& ip, double x);

/// Gamma(x, p) > 0 solving p = -(N/f)(1/Gamma + 1)(alpha - beta Gamma).
double ionchannel_gamma(const IonChannelParams& ip, double x, double p);

/// Trial left eigenvector z_n = Gamma^n / ((N-n)! n!), n = 0..N, unnormalized.
std::vector<double> ionchannel_left_vector(const IonChannelParams& ip, double x, double p);

/// Binomial stationary measure rho_n = C(N, n) a^n b^(N-n).
std::vector<double> ionchannel_invariant_measure(const IonChannelParams& ip, double x);

/// Worked 2x2 example W = [[1/2, 1/3], [1/2, 2/3]], eigenproblem
/// (W + diag(q1, q2)) R = lambda R.
double appendix_a_lambda(double q1, double q2);
std::pair<double, double> appendix_a_psi(double q1, double q2);
/// f(q) = (2q - 1/3) / (4 sqrt(q^2 - q/3 + 25/36)).
double appendix_a_f(double q);

}  // namespace pdmp::analytic
