#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pdmp/sim.hpp"
#include "support.hpp"

using doctest::Approx;

namespace {

// Two states with constant rates and no motion.
pdmp::HybridModel frozen_binary(const std::string& wp, const std::string& wm, double eps) {
    return test::binary(wp, wm, "0", "0", -1, 1, eps);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("deterministic motion without jumps") {
    const auto m = test::from_json(R"({"states": 1, "domain": [-1, 1], "epsilon": 0.1, "drift": ["-x"]})");
    const auto tr = pdmp::simulate(m, 0.5, 0, 2.0, 1, 1e-3);
    CHECK(tr.termination == pdmp::Termination::reached_end);
    CHECK(tr.jump_times.size() == 1);
    CHECK(tr.t_end == 2.0);
    CHECK(tr.x_end == Approx(0.5 * std::exp(-2.0)).epsilon(1e-12));
    for (const auto& s : tr.samples) CHECK(s.x == Approx(0.5 * std::exp(-s.t)).epsilon(1e-12));
}

TEST_CASE("jump counts follow the Poisson rate") {
    const auto m = frozen_binary("1", "1", 1.0);
    pdmp::SimOptions opts;
    opts.record = false;
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const auto tr = pdmp::simulate(m, 0.0, 0, 1000.0, seed, 1e-2, opts);
        const double jumps = static_cast<double>(tr.jump_times.size() - 1);
        INFO("seed " << seed << ": " << jumps << " jumps");
        CHECK(std::fabs(jumps - 1000.0) <= 3.0 * std::sqrt(1000.0));
        CHECK(tr.samples.empty());
    }
}

TEST_CASE("reproducibility") {
    const auto m = test::builtin("bistable");
    const auto a = pdmp::simulate(m, -1.0, 1, 3.0, 99, 1e-3);
    const auto b = pdmp::simulate(m, -1.0, 1, 3.0, 99, 1e-3);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(a.jump_times == b.jump_times);
    CHECK(a.states == b.states);
    bool same = true;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        same = same && a.samples[i].t == b.samples[i].t && a.samples[i].x == b.samples[i].x &&
               a.samples[i].n == b.samples[i].n;
    }
    CHECK(same);
    CHECK(pdmp::simulate(m, -1.0, 1, 3.0, 100, 1e-3).jump_times != a.jump_times);
    pdmp::SimOptions other;
    other.replica = 1;
    CHECK(pdmp::simulate(m, -1.0, 1, 3.0, 99, 1e-3, other).jump_times != a.jump_times);
}

TEST_CASE("inter-jump times are exponential") {
    // Total exit rate 2 / 0.5 = 4 in both states.
    const auto m = frozen_binary("2", "2", 0.5);
    pdmp::SimOptions opts;
    opts.record = false;
    const auto tr = pdmp::simulate(m, 0.0, 0, 2700.0, 7, 1e-2, opts);
    const size_t n = 10000;
    REQUIRE(tr.jump_times.size() > n);
    std::vector<double> gaps(n);
    for (size_t i = 0; i < n; ++i) gaps[i] = tr.jump_times[i + 1] - tr.jump_times[i];
    std::sort(gaps.begin(), gaps.end());
    double d = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double cdf = 1.0 - std::exp(-4.0 * gaps[i]);
        d = std::max({d, std::fabs(cdf - static_cast<double>(i) / n), std::fabs(static_cast<double>(i + 1) / n - cdf)});
    }
    INFO("KS statistic " << d);
    CHECK(d <= 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("jump destinations follow the rate ratios") {
    const auto m = test::from_json(R"({"states": 3, "domain": [-1, 1], "epsilon": 1, "drift": ["0", "0", "0"],
        "rates": {"1,2": "1", "1,3": "3", "2,1": "5", "3,1": "5"}})");
    pdmp::SimOptions opts;
    opts.record = false;
    const auto tr = pdmp::simulate(m, 0.0, 0, 5000.0, 11, 1e-2, opts);
    int from_first = 0;
    int to_third = 0;
    for (size_t i = 1; i < tr.states.size(); ++i) {
        if (tr.states[i - 1] != 0) continue;
        ++from_first;
        if (tr.states[i] == 2) ++to_third;
    }
    REQUIRE(from_first > 1000);
    const double p = static_cast<double>(to_third) / from_first;
    const double se = std::sqrt(0.75 * 0.25 / from_first);
    CHECK(std::fabs(p - 0.75) <= 3.0 * se);
}

TEST_CASE("continuity across jumps") {
    const auto m = test::builtin("sodium_channel");
    const auto tr = pdmp::simulate(m, 0.0, 5, 0.05, 5, 1e-5);
    REQUIRE(tr.jump_times.size() > 10);
    int pairs = 0;
    for (size_t i = 1; i < tr.samples.size(); ++i) {
        CHECK(tr.samples[i].t >= tr.samples[i - 1].t);
        if (tr.samples[i].t == tr.samples[i - 1].t && tr.samples[i].n != tr.samples[i - 1].n) {
            CHECK(tr.samples[i].x == tr.samples[i - 1].x);
            ++pairs;
        }
    }
    CHECK(pairs == static_cast<int>(tr.jump_times.size()) - 1);
    for (size_t i = 1; i < tr.jump_times.size(); ++i) CHECK(tr.jump_times[i] > tr.jump_times[i - 1]);
}

TEST_CASE("law of large numbers as epsilon shrinks") {
    // The averaged field of the bundled two-state model is -x.
    const auto base = test::builtin("binary");
    std::vector<double> medians;
    for (double eps : {0.2, 0.1, 0.05}) {
        const auto m = base.with_epsilon(eps);
        std::vector<double> sup;
        for (std::uint64_t r = 0; r < 60; ++r) {
            pdmp::SimOptions opts;
            opts.replica = r;
            opts.stride = 10;
            const auto tr = pdmp::simulate(m, 0.5, 0, 2.0, 2024, 1e-3, opts);
            double worst = 0.0;
            for (const auto& s : tr.samples) worst = std::max(worst, std::fabs(s.x - 0.5 * std::exp(-s.t)));
            sup.push_back(worst);
        }
        medians.push_back(median(sup));
    }
    INFO("medians " << medians[0] << " " << medians[1] << " " << medians[2]);
    CHECK(medians[1] < medians[0]);
    CHECK(medians[2] < medians[1]);
}

TEST_CASE("frozen-x occupancy") {
    SUBCASE("two states") {
        const auto m = frozen_binary("1", "2", 1.0);
        const auto r = pdmp::occupancy(m, 0.0, 1e5, 3);
        CHECK_FALSE(r.warning.has_value());
        CHECK(r.rho[0] == Approx(2.0 / 3.0).epsilon(1e-12));
        for (int n = 0; n < 2; ++n) CHECK(std::fabs(r.empirical[n] - r.rho[n]) <= 3.0 * r.stderr_[n]);
        CHECK(r.empirical.sum() == Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("single state") {
        const auto m = test::from_json(R"({"states": 1, "domain": [0, 1], "epsilon": 1, "drift": ["1"]})");
        const auto r = pdmp::occupancy(m, 0.5, 10.0, 1);
        CHECK(r.empirical[0] == 1.0);
    }
    SUBCASE("binomial channel occupancy") {
        const auto m = test::ion(2, "1.5", "1.5", "1", "0.5");
        const auto r = pdmp::occupancy(m, 0.0, 2e4, 9);
        const double expect[] = {0.25, 0.5, 0.25};
        for (int n = 0; n < 3; ++n) {
            CHECK(r.rho[n] == Approx(expect[n]).epsilon(1e-12));
            CHECK(std::fabs(r.empirical[n] - expect[n]) <= 3.0 * r.stderr_[n]);
        }
    }
    SUBCASE("short runs are flagged") {
        CHECK(pdmp::occupancy(frozen_binary("1", "1", 1.0), 0.0, 100.0, 1).warning.has_value());
    }
}

TEST_CASE("piecewise SDE") {
    SUBCASE("Brownian variance") {
        const auto m = test::from_json(
            R"({"states": 1, "domain": [-100, 100], "epsilon": 1, "drift": ["0"], "sigma": ["1"]})");
        const int reps = 10000;
        double sum = 0.0;
        double sum2 = 0.0;
        pdmp::SimOptions opts;
        opts.record = false;
        for (int r = 0; r < reps; ++r) {
            opts.replica = static_cast<std::uint64_t>(r);
            const double x = pdmp::simulate_sde(m, 0.0, 0, 1.0, 17, 1e-2, opts).x_end;
            sum += x;
            sum2 += x * x;
        }
        const double mean = sum / reps;
        const double var = (sum2 - reps * mean * mean) / (reps - 1);
        CHECK(var == Approx(1.0).epsilon(0.05));
    }
    SUBCASE("zero noise tracks the exact simulation") {
        const auto m = test::binary("1 + 0.5*x", "2", "-1 - x", "1.5 - x", -1, 1, 0.1, R"(, "sigma": ["0", "0"])");
        const double dt = 1e-4;
        const auto a = pdmp::simulate(m, 0.2, 0, 1.0, 8, dt);
        const auto b = pdmp::simulate_sde(m, 0.2, 0, 1.0, 8, dt);
        REQUIRE(a.jump_times.size() == b.jump_times.size());
        CHECK(a.states == b.states);
        for (size_t i = 0; i < a.jump_times.size(); ++i) CHECK(std::fabs(a.jump_times[i] - b.jump_times[i]) <= 100 * dt);
        CHECK(std::fabs(a.x_end - b.x_end) <= 100 * dt);
    }
    SUBCASE("reproducible") {
        const auto m = test::binary("1", "1", "-1", "1", -5, 5, 0.1, R"(, "sigma": ["0.5", "1"])");
        const auto a = pdmp::simulate_sde(m, 0.0, 1, 2.0, 4, 1e-3);
        const auto b = pdmp::simulate_sde(m, 0.0, 1, 2.0, 4, 1e-3);
        CHECK(a.jump_times == b.jump_times);
        CHECK(a.x_end == b.x_end);
        REQUIRE(a.samples.size() == b.samples.size());
        CHECK(a.samples.back().x == b.samples.back().x);
    }
    SUBCASE("needs sigma") {
        CHECK_THROWS_AS(pdmp::simulate_sde(test::builtin("binary"), 0.0, 0, 1.0, 1, 1e-3), pdmp::ValidationError);
    }
}

TEST_CASE("termination flags") {
    SUBCASE("leaving the domain") {
        const auto m = test::binary("1", "1", "1", "2", -1, 1, 0.1);
        const auto tr = pdmp::simulate(m, 0.5, 0, 10.0, 1, 1e-3);
        CHECK(tr.termination == pdmp::Termination::left_domain);
        CHECK(tr.t_end < 10.0);
        CHECK(tr.x_end == Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("absorbing level") {
        const auto m = test::binary("1", "1", "1", "2", -1, 1, 0.1);
        pdmp::SimOptions opts;
        opts.absorb_at = 0.75;
        const auto tr = pdmp::simulate(m, 0.5, 0, 10.0, 1, 1e-3, opts);
        CHECK(tr.termination == pdmp::Termination::absorbed);
        CHECK(tr.x_end == Approx(0.75).epsilon(1e-9));
        CHECK(tr.t_end > 0.0);
    }
    SUBCASE("bad inputs") {
        const auto m = test::builtin("binary");
        CHECK_THROWS_AS(pdmp::simulate(m, 2.0, 0, 1.0, 1, 1e-3), pdmp::ValidationError);
        CHECK_THROWS_AS(pdmp::simulate(m, 0.0, 2, 1.0, 1, 1e-3), pdmp::ValidationError);
        CHECK_THROWS_AS(pdmp::simulate(m, 0.0, 0, 0.0, 1, 1e-3), pdmp::ValidationError);
        CHECK_THROWS_AS(pdmp::simulate(m, 0.0, 0, 1.0, 1, 0.0), pdmp::ValidationError);
    }
}

TEST_CASE("first-passage ensembles") {
    const auto m = test::builtin("bistable").with_epsilon(0.25);
    const auto fps = pdmp::fixed_points(m);
    const Eigen::VectorXd rho = pdmp::invariant_measure(m, fps[0].x);
    SUBCASE("precondition") {
        CHECK_THROWS_AS(pdmp::first_passage_ensemble(m, 0.5, rho, 0.0, 10.0, 10, 1), pdmp::ValidationError);
        CHECK_THROWS_AS(pdmp::first_passage_ensemble(m, 0.0, rho, 0.0, 10.0, 10, 1), pdmp::ValidationError);
    }
    SUBCASE("statistics and thread independence") {
        pdmp::FptOptions one;
        one.dt = 1e-2;
        one.threads = 1;
        pdmp::FptOptions many = one;
        many.threads = 4;
        const auto a = pdmp::first_passage_ensemble(m, fps[0].x, rho, fps[1].x, 1e3, 200, 5, one);
        const auto b = pdmp::first_passage_ensemble(m, fps[0].x, rho, fps[1].x, 1e3, 200, 5, many);
        REQUIRE(a.tau.size() == 200);
        CHECK(a.absorbed + a.timeouts + a.left_domain == 200);
        CHECK(a.absorbed > 150);
        bool same = a.mean == b.mean && a.stderr_ == b.stderr_ && a.cv == b.cv;
        for (size_t i = 0; i < a.tau.size(); ++i) {
            same = same && (a.tau[i] == b.tau[i] || (std::isnan(a.tau[i]) && std::isnan(b.tau[i])));
            if (!std::isnan(a.tau[i])) CHECK(a.tau[i] > 0.0);
        }
        CHECK(same);
        double sum = 0.0;
        int count = 0;
        for (double t : a.tau) {
            if (std::isnan(t)) continue;
            sum += t;
            ++count;
        }
        CHECK(a.mean == Approx(sum / count).epsilon(1e-12));
        CHECK(a.stderr_ > 0.0);
    }
    SUBCASE("every replica timing out") {
        CHECK_THROWS_AS(pdmp::first_passage_ensemble(m.with_epsilon(0.01), fps[0].x, rho, fps[1].x, 0.01, 4, 1),
                        pdmp::NumericError);
    }
}
