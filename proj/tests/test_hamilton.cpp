#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pdmp/analytic.hpp"
#include "pdmp/hamilton.hpp"
#include "pdmp/perron.hpp"
#include "support.hpp"

using doctest::Approx;
namespace an = pdmp::analytic;

namespace {

double max_energy_drift(const pdmp::FlowResult& r) {
    double worst = 0.0;
    for (const auto& pt : r.points) worst = std::max(worst, std::fabs(pt.energy - r.points.front().energy));
    return worst;
}

pdmp::HybridModel sodium_with_n(int n) {
    std::string js(pdmp::builtin_model_json("sodium_channel"));
    const auto at = js.find("\"N\": 10");
    REQUIRE(at != std::string::npos);
    js.replace(at, 7, "\"N\": " + std::to_string(n));
    return test::from_json(js);
}

// Adaptive Gauss-Kronrod integral of the closed-form Phi0'.
double sodium_oracle(const pdmp::HybridModel& m, double a, double b) {
    const auto ip = an::ion_channel_params(m);
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return an::ionchannel_phi_prime(ip, x); }, a, b, 15, 1e-14);
}

}  // namespace

TEST_CASE("zero-energy momentum") {
    SUBCASE("constant closed-form root") {
        const auto m = test::ion(1, "1", "1", "3", "1");
        for (double x : {-0.9, -0.2, 0.0, 0.7}) CHECK(pdmp::zero_energy_momentum(m, x) == Approx(-0.5).epsilon(1e-12));
    }
    SUBCASE("coalesced roots") {
        CHECK_THROWS_AS(pdmp::zero_energy_momentum(test::binary("1", "1", "-1", "1"), 0.3), pdmp::NumericError);
    }
    SUBCASE("two-state closed form") {
        const auto m = test::builtin("bistable");
        const auto bp = an::binary_params(m);
        for (double x : {-1.9, -1.5, -0.8, -0.3, 0.4, 1.2, 1.9}) {
            CHECK(pdmp::zero_energy_momentum(m, x) == Approx(an::binary_zero_energy_momentum(bp, x)).epsilon(1e-10));
        }
    }
    SUBCASE("sign opposes the averaged drift") {
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        int tested = 0;
        while (tested < 60) {
            const auto m = test::random_model(rng, 2 + tested % 5);
            const double x = u(rng);
            const Eigen::VectorXd f = m.drifts(x);
            const double fbar = pdmp::averaged_field(m, x);
            if (f.minCoeff() >= 0.0 || f.maxCoeff() <= 0.0 || std::fabs(fbar) < 1e-3) continue;
            const double p = pdmp::zero_energy_momentum(m, x);
            CHECK(p * fbar < 0.0);
            CHECK(std::fabs(pdmp::hamiltonian(m, x, p).lambda) <= 1e-12 * std::max(1.0, std::fabs(p) * f.cwiseAbs().maxCoeff()));
            ++tested;
        }
    }
}

TEST_CASE("quasipotential profiles") {
    SUBCASE("constant momentum integrates exactly") {
        const auto m = test::ion(1, "1", "1", "3", "1");
        const auto prof = pdmp::quasipotential(m, -0.8, 0.6, 33);
        CHECK(prof.delta_phi == Approx(-0.7).epsilon(1e-12));
        CHECK(prof.phi.front() == 0.0);
        CHECK(prof.phi.back() == Approx(-0.7).epsilon(1e-12));
    }
    SUBCASE("trivial branch along the deterministic flow") {
        const auto m = test::builtin("bistable");
        const double xm = pdmp::fixed_points(m).front().x;
        const auto prof = pdmp::quasipotential(m, xm, -1.9, 64, pdmp::Branch::trivial);
        CHECK(prof.delta_phi == 0.0);
        for (double v : prof.phi) CHECK(v == 0.0);
    }
    SUBCASE("interior fixed point is rejected") {
        CHECK_THROWS_AS(pdmp::quasipotential(test::builtin("bistable"), -1.5, 1.5), pdmp::ValidationError);
        CHECK_THROWS_AS(pdmp::quasipotential(test::builtin("bistable"), -1.5, -1.0, 8), pdmp::ValidationError);
    }
    SUBCASE("residual, monotonicity and closed-form slope on the sodium channel") {
        const auto m = test::builtin("sodium_channel");
        const auto ip = an::ion_channel_params(m);
        const auto fps = pdmp::fixed_points(m);
        REQUIRE(fps.size() == 3);
        // Fine enough that the centered difference itself is accurate to 1e-6.
        const int n = 8193;
        const auto prof = pdmp::quasipotential(m, fps[0].x, fps[1].x, n);
        REQUIRE(prof.x.size() == static_cast<size_t>(n));
        CHECK(prof.p_star.front() == 0.0);
        CHECK(prof.p_star.back() == 0.0);
        for (int i = 0; i < n; ++i) {
            CHECK(std::fabs(pdmp::hamiltonian(m, prof.x[i], prof.p_star[i]).lambda) <= 1e-9);
        }
        for (int i = 0; i + 1 < n; ++i) {
            const double mid = 0.5 * (prof.p_star[i] + prof.p_star[i + 1]);
            if (mid > 0.0) CHECK(prof.phi[i + 1] > prof.phi[i]);
            if (mid < 0.0) CHECK(prof.phi[i + 1] < prof.phi[i]);
        }
        double worst = 0.0;
        for (int i = 1; i + 1 < n; ++i) {
            const double d = (prof.phi[i + 1] - prof.phi[i - 1]) / (prof.x[i + 1] - prof.x[i - 1]);
            worst = std::max(worst, std::fabs(d - an::ionchannel_phi_prime(ip, prof.x[i])));
        }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("escape exponent") {
    SUBCASE("bistable two-state model against quadrature of the closed-form root") {
        const auto m = test::builtin("bistable");
        const auto bp = an::binary_params(m);
        const auto e = pdmp::escape_exponent(m);
        CHECK(e.x0 == Approx(0.0).scale(1.0).epsilon(1e-10));
        const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [&](double x) { return an::binary_zero_energy_momentum(bp, x); }, e.x_minus, e.x0, 15, 1e-14);
        CHECK(e.delta_phi > 0.0);
        CHECK(e.delta_phi == Approx(oracle).epsilon(1e-6));
    }
    SUBCASE("sodium channel regression") {
        const auto m = test::builtin("sodium_channel");
        const auto a = pdmp::escape_exponent(m);
        const auto b = pdmp::escape_exponent(m);
        CHECK(a.delta_phi > 0.0);
        CHECK(a.delta_phi == b.delta_phi);
        CHECK(a.delta_phi == Approx(sodium_oracle(m, a.x_minus, a.x0)).epsilon(1e-6));
    }
    SUBCASE("linear in the channel count") {
        const double d10 = pdmp::escape_exponent(sodium_with_n(10)).delta_phi;
        const double d20 = pdmp::escape_exponent(sodium_with_n(20)).delta_phi;
        CHECK(d20 == Approx(2.0 * d10).epsilon(1e-6));
    }
    SUBCASE("monostable model") {
        CHECK_THROWS_AS(pdmp::escape_exponent(test::builtin("binary")), pdmp::ValidationError);
    }
}

TEST_CASE("Hamiltonian flow") {
    SUBCASE("zero momentum follows the averaged field") {
        // Averaged field of the bundled two-state model is -x.
        const auto m = test::builtin("binary");
        const auto r = pdmp::flow(m, 0.8, 0.0, 2.0, 1e-3);
        CHECK_FALSE(r.left_domain);
        for (const auto& pt : r.points) {
            CHECK(std::fabs(pt.p) <= 1e-12);
            CHECK(pt.x == Approx(0.8 * std::exp(-pt.t)).epsilon(1e-9));
        }
        CHECK(r.points.back().t == Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("energy conservation and fourth order") {
        const auto m = test::builtin("binary");
        const auto fine = pdmp::flow(m, 0.2, 0.5, 10.0, 1e-3);
        CHECK_FALSE(fine.left_domain);
        CHECK(max_energy_drift(fine) <= 1e-6);
        // The order check needs truncation error well above the noise of the
        // finite-difference dlambda/dx.
        const double coarse = max_energy_drift(pdmp::flow(m, 0.2, 0.5, 10.0, 0.2));
        const double half = max_energy_drift(pdmp::flow(m, 0.2, 0.5, 10.0, 0.1));
        INFO("drift at 0.2 = " << coarse << ", at 0.1 = " << half);
        CHECK(coarse / half >= 8.0);
        CHECK(coarse / half <= 32.0);
    }
    SUBCASE("energy is recomputable from the state") {
        const auto m = test::builtin("bistable");
        const auto r = pdmp::flow(m, -1.0, 0.3, 1.0, 1e-2);
        for (const auto& pt : r.points) {
            CHECK(pt.energy == Approx(pdmp::hamiltonian(m, pt.x, pt.p).lambda).epsilon(1e-8).scale(1.0));
        }
    }
    SUBCASE("escape branch climbs from the stable state") {
        const auto m = test::builtin("sodium_channel");
        const auto fps = pdmp::fixed_points(m);
        const double x_start = fps[0].x + 0.5;
        // The saddle at x0 is reached by t ~ 2; later the path leaves along
        // its unstable manifold.
        const auto r = pdmp::flow(m, x_start, pdmp::zero_energy_momentum(m, x_start), 2.0, 1e-3);
        CHECK(std::fabs(r.points.front().energy) <= 1e-12);
        CHECK(max_energy_drift(r) <= 1e-6);
        for (std::size_t i = 1; i < r.points.size(); ++i) CHECK(r.points[i].x > r.points[i - 1].x);
        CHECK(r.points.back().x == Approx(fps[1].x).epsilon(1e-4));
        CHECK(std::fabs(r.points.back().p) <= 1e-6);
    }
    SUBCASE("leaving the domain stops the flow") {
        const auto r = pdmp::flow(test::builtin("binary"), 0.9, 3.0, 50.0, 1e-2);
        CHECK(r.left_domain);
        CHECK(r.points.back().t < 50.0);
    }
    SUBCASE("bad inputs") {
        const auto m = test::builtin("binary");
        CHECK_THROWS_AS(pdmp::flow(m, 0.0, 0.0, 1.0, 0.0), pdmp::ValidationError);
        CHECK_THROWS_AS(pdmp::flow(m, NAN, 0.0, 1.0, 0.1), pdmp::ValidationError);
    }
}
