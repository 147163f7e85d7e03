#include <doctest.h>

#include <cmath>
#include <random>

#include "pdmp/analytic.hpp"
#include "pdmp/perron.hpp"
#include "support.hpp"

using doctest::Approx;

namespace {

Eigen::MatrixXd appendix_w() {
    Eigen::MatrixXd w(2, 2);
    w << 0.5, 1.0 / 3.0, 0.5, 2.0 / 3.0;
    return w;
}

}  // namespace

TEST_CASE("zero weights give lambda = 0 and psi = rho") {
    const auto m = test::builtin("sodium_channel");
    for (double x : {-60.0, -30.0, 0.0, 40.0}) {
        const auto sol = pdmp::hamiltonian(m, x, 0.0);
        CHECK(std::fabs(sol.lambda) <= 1e-11);
        const auto rho = pdmp::invariant_measure(m, x);
        CHECK((sol.occupation - rho).cwiseAbs().maxCoeff() <= 1e-10);
        // Constant right eigenvector.
        CHECK((sol.right.array() - 1.0 / m.states()).abs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("worked 2x2 example") {
    const Eigen::MatrixXd w = appendix_w();
    const auto s0 = pdmp::perron_weighted(w, Eigen::Vector2d(0.0, 0.0));
    CHECK(s0.lambda == Approx(1.0).epsilon(1e-13));
    CHECK(s0.occupation[0] == Approx(0.4).epsilon(1e-12));
    CHECK(s0.occupation[1] == Approx(0.6).epsilon(1e-12));
    const auto s1 = pdmp::perron_weighted(w, Eigen::Vector2d(1.0 / 3.0, 0.0));
    CHECK(s1.lambda == Approx(7.0 / 6.0).epsilon(1e-13));
    CHECK(s1.occupation[0] == Approx(0.6).epsilon(1e-12));
}

TEST_CASE("two-state Hamiltonian") {
    const auto m = test::binary("1", "1", "-1", "1");
    const auto sol = pdmp::hamiltonian(m, 0.0, 1.0);
    CHECK(sol.lambda == Approx(std::sqrt(2.0) - 1.0).epsilon(1e-13));
    CHECK(pdmp::dlambda_dp(sol, m.drifts(0.0)) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("single-channel Hamiltonian") {
    const auto m = test::ion(1, "1", "1", "2", "1");
    CHECK(pdmp::hamiltonian(m, 0.0, 1.0).lambda == Approx(std::sqrt(2.0) - 1.0).epsilon(1e-13));
}

TEST_CASE("sigma-augmented Hamiltonian") {
    SUBCASE("zero sigma reduces to the plain problem") {
        const auto m = test::binary("1 + 0.5*x", "2", "-1 - x", "1.5 - x", -1, 1, 1, R"(, "sigma": ["0", "0"])");
        for (double p : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
            CHECK(std::fabs(pdmp::hamiltonian_sde(m, 0.2, p).lambda - pdmp::hamiltonian(m, 0.2, p).lambda) <= 1e-12);
        }
    }
    SUBCASE("single state") {
        const auto m = test::from_json(
            R"({"states": 1, "domain": [-1, 1], "epsilon": 1, "drift": ["0.3 + x"], "sigma": ["0.8"]})");
        for (double p : {-1.5, 0.25, 2.0}) {
            const double f = 0.3 + 0.1;
            CHECK(pdmp::hamiltonian_sde(m, 0.1, p).lambda == Approx(p * f + 0.5 * p * p * 0.64).epsilon(1e-14));
        }
        CHECK(pdmp::dlambda_dp(pdmp::hamiltonian(m, 0.1, 1.0), m.drifts(0.1)) == Approx(0.4).epsilon(1e-15));
    }
    SUBCASE("uniform sigma shifts lambda by p^2/2") {
        const auto m = test::binary("1", "1", "-1", "1", -1, 1, 1, R"(, "sigma": ["1", "1"])");
        CHECK(pdmp::hamiltonian_sde(m, 0.0, 1.0).lambda == Approx(0.5 + std::sqrt(2.0) - 1.0).epsilon(1e-13));
    }
    SUBCASE("missing sigma") {
        CHECK_THROWS_AS(pdmp::hamiltonian_sde(test::builtin("binary"), 0.0, 1.0), pdmp::ValidationError);
    }
}

TEST_CASE("x derivative") {
    SUBCASE("constant coefficients") {
        CHECK(std::fabs(pdmp::dlambda_dx(test::binary("1", "2", "-1", "1"), 0.2, 0.8)) <= 1e-9);
    }
    SUBCASE("lambda vanishes on p = 0") {
        CHECK(std::fabs(pdmp::dlambda_dx(test::binary("1 + x", "1", "-1", "1", -0.5, 0.5), 0.0, 0.0)) <= 1e-9);
    }
    SUBCASE("ion channel against the closed form") {
        const auto m = test::builtin("sodium_channel");
        const auto ip = pdmp::analytic::ion_channel_params(m);
        for (double x : {-55.0, -40.0, -20.0, 10.0}) {
            for (double p : {-0.02, 0.005, 0.01}) {
                const double h = 1e-6 * std::max(1.0, std::fabs(x));
                const double oracle = (pdmp::analytic::ionchannel_lambda(ip, x + h, p) -
                                       pdmp::analytic::ionchannel_lambda(ip, x - h, p)) /
                                      (2.0 * h);
                CHECK(pdmp::dlambda_dx(m, x, p) == Approx(oracle).epsilon(1e-6).scale(1e-3));
            }
        }
    }
}

TEST_CASE("Hessian in q") {
    SUBCASE("worked example at q = 0 matches f'(0)") {
        const double h = 1e-5;
        const double fprime = (pdmp::analytic::appendix_a_f(h) - pdmp::analytic::appendix_a_f(-h)) / (2 * h);
        const auto d = pdmp::lambda_hessian_q(appendix_w(), Eigen::VectorXd::Zero(1));
        CHECK(d(0, 0) == Approx(fprime).epsilon(1e-6));
    }
    SUBCASE("positive definite and symmetric on random models") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            const int k = 2 + trial % 4;
            const auto m = test::random_model(rng, k);
            const Eigen::MatrixXd a = pdmp::generator(m, u(rng)).a;
            Eigen::VectorXd q(k - 1);
            for (int i = 0; i < k - 1; ++i) q[i] = 2.0 * u(rng);
            const auto h = pdmp::lambda_hessian_q_raw(a, q);
            CHECK((h.raw - h.raw.transpose()).cwiseAbs().maxCoeff() <= 1e-6);
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.symmetric);
            CHECK(es.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("spectral invariants on random models") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const auto m = test::random_model(rng, 2 + trial % 6);
        const double x = u(rng);
        const double p = 3.0 * u(rng);
        const auto sol = pdmp::hamiltonian(m, x, p);
        CHECK(sol.right.minCoeff() > 0.0);
        CHECK(sol.left.minCoeff() > 0.0);
        CHECK(std::fabs(sol.right.sum() - 1.0) <= 1e-14);
        CHECK(std::fabs(sol.left.dot(sol.right) - 1.0) <= 1e-14);
        CHECK(std::fabs(sol.occupation.sum() - 1.0) <= 1e-14);
        CHECK(sol.occupation.minCoeff() > 0.0);
        CHECK(sol.residual <= 1e-10);

        const Eigen::VectorXd drift = m.drifts(x);
        // Exact derivative against a centered difference in p.
        const double h = 1e-5;
        const double fd = (pdmp::hamiltonian(m, x, p + h).lambda - pdmp::hamiltonian(m, x, p - h).lambda) / (2 * h);
        CHECK(pdmp::dlambda_dp(sol, drift) == Approx(fd).epsilon(1e-7).scale(1.0));

        // Shift covariance.
        const Eigen::MatrixXd a = pdmp::generator(m, x).a;
        const Eigen::VectorXd w = p * drift;
        const double c = 0.75;
        const auto shifted = pdmp::perron_weighted(a, (w.array() - c).matrix());
        CHECK(shifted.lambda == Approx(sol.lambda - c).epsilon(1e-10).scale(1.0));
        CHECK((shifted.occupation - sol.occupation).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((shifted.right - sol.right).cwiseAbs().maxCoeff() <= 1e-10);

        // Monotone in each weight.
        for (int n = 0; n < m.states(); ++n) {
            Eigen::VectorXd bumped = w;
            bumped[n] += 1e-3;
            CHECK(pdmp::perron_weighted(a, bumped).lambda > sol.lambda);
        }
    }
}

TEST_CASE("input checks") {
    Eigen::MatrixXd reducible(2, 2);
    reducible << -1, 1, 0, 0;
    CHECK_THROWS_AS(pdmp::perron_weighted(reducible, Eigen::Vector2d::Zero()), pdmp::ValidationError);
    Eigen::MatrixXd negative(2, 2);
    negative << -1, -1, 1, -1;
    CHECK_THROWS_AS(pdmp::perron_weighted(negative, Eigen::Vector2d::Zero()), pdmp::ValidationError);
    Eigen::MatrixXd ok(2, 2);
    ok << -1, 1, 1, -1;
    CHECK_THROWS_AS(pdmp::perron_weighted(ok, Eigen::Vector3d::Zero()), pdmp::ValidationError);
    CHECK_THROWS_AS(pdmp::perron_weighted(ok, Eigen::Vector2d(NAN, 0.0)), pdmp::ValidationError);
    pdmp::PerronOptions tight;
    tight.max_iterations = 1;
    Eigen::MatrixXd slow(3, 3);
    slow << -1, 1, 0, 0, -1, 1, 1e-3, 0, -1e-3;
    CHECK_THROWS_AS(pdmp::perron_weighted(slow, Eigen::Vector3d(0.1, -0.2, 0.3), tight), pdmp::NumericError);
}
