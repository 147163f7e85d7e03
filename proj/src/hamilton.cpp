#include "pdmp/hamilton.hpp"

#include <cmath>
#include <cstdint>
#include <utility>

#include <boost/math/tools/roots.hpp>

#include "pdmp/perron.hpp"

namespace pdmp {

namespace {

struct Rates {
    double dx;
    double dp;
};

// Returns false if the right-hand side needs x outside the domain.
bool hamilton_rhs(const HybridModel& model, double x, double p, Rates& out) {
    const Domain& d = model.domain();
    const double h = 1e-6 * std::max(1.0, std::fabs(x));
    if (x - h < d.lower || x + h > d.upper) return false;
    const SpectralSolution sol = hamiltonian(model, x, p);
    out.dx = dlambda_dp(sol, model.drifts(x));
    out.dp = -dlambda_dx(model, x, p);
    if (!std::isfinite(out.dx) || !std::isfinite(out.dp)) throw NumericError("non-finite Hamiltonian vector field");
    return true;
}

}  // namespace

FlowResult flow(const HybridModel& model, double x0, double p0, double t_end, double dt) {
    if (!std::isfinite(x0) || !std::isfinite(p0)) throw ValidationError("flow: initial point must be finite");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("flow: dt must be positive");
    if (!(t_end >= 0.0)) throw ValidationError("flow: T must be non-negative");
    if (!model.domain().contains(x0)) throw ValidationError("flow: x0 outside the domain");

    FlowResult result;
    double t = 0.0;
    double x = x0;
    double p = p0;
    result.points.push_back({t, x, p, hamiltonian(model, x, p).lambda});
    const auto steps = static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-9));
    for (std::int64_t i = 0; i < steps; ++i) {
        const double h = std::min(dt, t_end - t);
        if (h <= 0.0) break;
        Rates k1{}, k2{}, k3{}, k4{};
        if (!hamilton_rhs(model, x, p, k1) ||
            !hamilton_rhs(model, x + 0.5 * h * k1.dx, p + 0.5 * h * k1.dp, k2) ||
            !hamilton_rhs(model, x + 0.5 * h * k2.dx, p + 0.5 * h * k2.dp, k3) ||
            !hamilton_rhs(model, x + h * k3.dx, p + h * k3.dp, k4)) {
            result.left_domain = true;
            break;
        }
        const double xn = x + h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
        const double pn = p + h / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
        if (!std::isfinite(xn) || !std::isfinite(pn)) throw NumericError("flow: non-finite state");
        if (!model.domain().contains(xn)) {
            result.left_domain = true;
            break;
        }
        x = xn;
        p = pn;
        t = (i + 1 == steps) ? t_end : t + h;
        result.points.push_back({t, x, p, hamiltonian(model, x, p).lambda});
    }
    return result;
}

double zero_energy_momentum(const HybridModel& model, double x) {
    const double fbar = averaged_field(model, x);
    if (fbar == 0.0 || !std::isfinite(fbar)) {
        throw NumericError("zero_energy_momentum: F-bar vanishes at x, the two zero-energy roots coalesce");
    }
    const double sign = fbar > 0.0 ? -1.0 : 1.0;
    const GeneratorMatrix gen = generator(model, x);
    const Eigen::VectorXd drift = model.drifts(x);
    // Each solve starts from the previous eigenvectors; successive
    // magnitudes are close once the bracket is found.
    PerronOptions warm;
    auto lam = [&](double magnitude) {
        SpectralSolution sol = perron_weighted(gen.a, (sign * magnitude) * drift, warm);
        warm.initial_right = std::move(sol.right);
        warm.initial_left = std::move(sol.left);
        return sol.lambda;
    };

    // lambda(s*m) < 0 for 0 < m < |p*| and > 0 beyond, by convexity.
    double lo = 1e-3;
    double hi = 1e-3;
    double f_lo = lam(lo);
    double f_hi = f_lo;
    if (f_lo < 0.0) {
        for (int i = 0; f_hi < 0.0; ++i) {
            if (i > 200) throw NumericError("zero_energy_momentum: bracket expansion failed");
            lo = hi;
            f_lo = f_hi;
            hi *= 2.0;
            f_hi = lam(hi);
        }
    } else {
        for (int i = 0; f_lo >= 0.0; ++i) {
            if (i > 1000) throw NumericError("zero_energy_momentum: bracket contraction failed");
            hi = lo;
            f_hi = f_lo;
            lo *= 0.5;
            f_lo = lam(lo);
        }
    }
    if (f_hi == 0.0) return sign * hi;

    auto tol = [](double a, double b) { return std::fabs(b - a) <= 1e-14 * std::max(1.0, std::fabs(a)); };
    std::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(lam, lo, hi, f_lo, f_hi, tol, max_iter);
    const double fa = lam(a);
    const double fb = lam(b);
    const double root = std::fabs(fa) <= std::fabs(fb) ? a : b;
    const double residual = std::min(std::fabs(fa), std::fabs(fb));
    const double scale = std::max(1.0, gen.a.diagonal().cwiseAbs().maxCoeff() + root * drift.cwiseAbs().maxCoeff());
    if (residual > 1e-12 * scale) throw NumericError("zero_energy_momentum: residual gate not met");
    return sign * root;
}

QuasipotentialProfile quasipotential(const HybridModel& model, double x_anchor, double x_to, int n_grid,
                                     Branch branch) {
    if (n_grid < 16) throw ValidationError("quasipotential: n_grid must be at least 16");
    const Domain& d = model.domain();
    if (!d.contains(x_anchor) || !d.contains(x_to)) throw ValidationError("quasipotential: endpoints outside the domain");
    if (!(x_anchor != x_to)) throw ValidationError("quasipotential: empty interval");

    const double span = x_to - x_anchor;
    auto node = [&](std::int64_t j, std::int64_t m) {
        return j == m ? x_to : x_anchor + span * static_cast<double>(j) / static_cast<double>(m);
    };

    // Endpoints that are fixed points of F-bar get p* = 0 exactly.
    const double f_anchor = averaged_field(model, x_anchor);
    const double f_to = averaged_field(model, x_to);
    const double scale = std::max({1.0, std::fabs(f_anchor), std::fabs(f_to)});
    const bool anchor_fixed = std::fabs(f_anchor) <= 1e-8 * scale;
    const bool to_fixed = std::fabs(f_to) <= 1e-8 * scale;

    std::int64_t m = n_grid - 1;
    std::vector<double> xs(m + 1);
    std::vector<double> fbar(m + 1);
    for (std::int64_t j = 0; j <= m; ++j) {
        xs[j] = node(j, m);
        fbar[j] = averaged_field(model, xs[j]);
    }
    for (std::int64_t j = 1; j < m; ++j) {
        if (fbar[j] == 0.0 || (fbar[j] < 0.0) != (fbar[1] < 0.0)) {
            throw ValidationError("quasipotential: F-bar has a fixed point strictly inside the interval near x = " +
                                  std::to_string(xs[j]));
        }
    }

    auto p_at = [&](std::int64_t j, std::int64_t mm, double x) {
        if (branch == Branch::trivial) return 0.0;
        if ((j == 0 && anchor_fixed) || (j == mm && to_fixed)) return 0.0;
        return zero_energy_momentum(model, x);
    };
    std::vector<double> ps(m + 1);
    for (std::int64_t j = 0; j <= m; ++j) ps[j] = p_at(j, m, xs[j]);

    auto trapezoid_total = [&](const std::vector<double>& x, const std::vector<double>& p) {
        double s = 0.0;
        for (std::size_t j = 1; j < x.size(); ++j) s += 0.5 * (p[j] + p[j - 1]) * (x[j] - x[j - 1]);
        return s;
    };

    double total = trapezoid_total(xs, ps);
    constexpr std::int64_t kMaxIntervals = std::int64_t{1} << 18;
    for (;;) {
        if (m * 2 > kMaxIntervals) {
            throw NumericError("quasipotential: trapezoid refinement did not settle");
        }
        const std::int64_t m2 = m * 2;
        std::vector<double> xs2(m2 + 1);
        std::vector<double> ps2(m2 + 1);
        for (std::int64_t j = 0; j <= m2; ++j) {
            if (j % 2 == 0) {
                xs2[j] = xs[j / 2];
                ps2[j] = ps[j / 2];
            } else {
                xs2[j] = node(j, m2);
                const double fb = averaged_field(model, xs2[j]);
                if (fb == 0.0 || (fb < 0.0) != (fbar[1] < 0.0)) {
                    throw ValidationError("quasipotential: F-bar has a fixed point strictly inside the interval");
                }
                ps2[j] = p_at(j, m2, xs2[j]);
            }
        }
        const double total2 = trapezoid_total(xs2, ps2);
        const double change = std::fabs(total2 - total);
        xs = std::move(xs2);
        ps = std::move(ps2);
        m = m2;
        total = total2;
        if (change <= 1e-6 * std::fabs(total2) + 1e-10) break;
    }

    QuasipotentialProfile prof;
    prof.intervals_used = static_cast<int>(m);
    prof.delta_phi = total;
    const std::int64_t stride = m / (n_grid - 1);
    double running = 0.0;
    for (std::int64_t j = 0; j <= m; ++j) {
        if (j > 0) running += 0.5 * (ps[j] + ps[j - 1]) * (xs[j] - xs[j - 1]);
        if (j % stride == 0) {
            prof.x.push_back(xs[j]);
            prof.p_star.push_back(ps[j]);
            prof.phi.push_back(running);
        }
    }
    return prof;
}

EscapeExponent escape_exponent(const HybridModel& model) {
    const auto fps = fixed_points(model);
    if (fps.size() < 3) throw ValidationError("escape_exponent: model is not bistable (fewer than 3 fixed points)");
    std::size_t i = 0;
    while (i < fps.size() && fps[i].stability != Stability::stable) ++i;
    if (i + 1 >= fps.size() || fps[i + 1].stability != Stability::unstable) {
        throw ValidationError("escape_exponent: no unstable fixed point to the right of the first stable one");
    }
    EscapeExponent e;
    e.x_minus = fps[i].x;
    e.x0 = fps[i + 1].x;
    e.delta_phi = quasipotential(model, e.x_minus, e.x0).delta_phi;
    return e;
}

}  // namespace pdmp
