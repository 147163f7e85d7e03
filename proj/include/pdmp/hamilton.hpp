#pragma once

// Hamiltonian flow of lambda(x, p), the zero-energy (escape) branch and the
// quasipotential Phi0 solving lambda(x, Phi0'(x)) = 0.

#include <vector>

#include "pdmp/model.hpp"

namespace pdmp {

struct PhasePoint {
    double t = 0.0;
    double x = 0.0;
    double p = 0.0;
    double energy = 0.0;  // lambda(x, p)
};

struct FlowResult {
    std::vector<PhasePoint> points;
    bool left_domain = false;  // stopped early because x (or a stencil point) left [a, b]
};

/// Classical RK4 on x' = d lambda/dp, p' = -d lambda/dx for time T with step dt.
FlowResult flow(const HybridModel& model, double x0, double p0, double t_end, double dt);

/// The root p* != 0 of lambda(x, .) = 0; sign(p*) = -sign(F-bar(x)).
/// Throws NumericError when F-bar(x) = 0 (the two roots coalesce) or when no
/// bracket is found.
double zero_energy_momentum(const HybridModel& model, double x);

enum class Branch { nontrivial, trivial };

struct QuasipotentialProfile {
    std::vector<double> x;
    std::vector<double> p_star;
    std::vector<double> phi;  // phi[0] = 0 at the anchor
    double delta_phi = 0.0;   // phi at x_to on the finest grid used
    int intervals_used = 0;   // trapezoid intervals after refinement
};

/// Tabulates p* on a uniform grid of n_grid points from x_anchor to x_to and
/// integrates it by the trapezoid rule. The grid is halved until doubling
/// changes the total by at most 1e-6 |delta_phi| + 1e-10; the returned phi at
/// the requested nodes comes from the finest grid. p* is set to 0 at
/// endpoints that are fixed points of F-bar. Throws ValidationError if F-bar
/// changes sign strictly inside the interval.
QuasipotentialProfile quasipotential(const HybridModel& model, double x_anchor, double x_to, int n_grid = 129,
                                     Branch branch = Branch::nontrivial);

struct EscapeExponent {
    double x_minus = 0.0;  // leftmost stable fixed point
    double x0 = 0.0;       // adjacent unstable fixed point
    double delta_phi = 0.0;
};

/// Phi0(x0) - Phi0(x_minus). Throws ValidationError unless the model has at
/// least three fixed points with an unstable one right of the first stable one.
EscapeExponent escape_exponent(const HybridModel& model);

}  // namespace pdmp
