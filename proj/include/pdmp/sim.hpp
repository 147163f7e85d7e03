#pragma once

// Trajectory simulation of the hybrid process (jump rates scaled by 1/eps),
// frozen-x occupancy statistics and first-passage ensembles.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdmp/model.hpp"

namespace pdmp {

enum class Termination { reached_end, absorbed, left_domain };

struct TrajectorySample {
    double t = 0.0;
    double x = 0.0;
    int n = 0;  // 0-based
};

struct Trajectory {
    std::vector<double> jump_times;  // jump_times[0] = 0
    std::vector<int> states;         // state entered at each jump time
    std::vector<TrajectorySample> samples;  // every stride-th step plus both sides of each jump
    Termination termination = Termination::reached_end;
    double t_end = 0.0;
    double x_end = 0.0;
    int n_end = 0;
};

struct SimOptions {
    int stride = 1;       // record every stride-th step
    bool record = true;   // false keeps only jump bookkeeping and the end state
    std::optional<double> absorb_at;  // stop when x first reaches this level from below
    std::uint64_t replica = 0;
};

/// RK4 between jumps with step dt; jump times by integrating the total exit
/// rate (Simpson per step) against a unit exponential and bisecting the
/// crossing step to |H - E| <= 1e-10. Deterministic in (seed, replica, dt).
Trajectory simulate(const HybridModel& model, double x0, int n0, double t_end, std::uint64_t seed, double dt,
                    const SimOptions& opts = {});

/// Euler-Maruyama for dX = F_n dt + sqrt(eps) sigma_n dW between jumps, with
/// the hazard integrated by the trapezoid rule along the noisy path. Uses the
/// same jump and destination streams as simulate.
Trajectory simulate_sde(const HybridModel& model, double x0, int n0, double t_end, std::uint64_t seed, double dt,
                        const SimOptions& opts = {});

struct OccupancyResult {
    Eigen::VectorXd empirical;
    Eigen::VectorXd stderr_;  // batch-means standard errors (100 batches)
    Eigen::VectorXd rho;
    std::uint64_t jumps = 0;
    double expected_jumps = 0.0;
    std::optional<std::string> warning;
};

/// Fraction of time in each state for the chain with x frozen at x_frozen.
OccupancyResult occupancy(const HybridModel& model, double x_frozen, double t_end, std::uint64_t seed);

struct FptEnsemble {
    std::vector<double> tau;  // per replica, NaN when not absorbed
    int absorbed = 0;
    int timeouts = 0;
    int left_domain = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    double cv = 0.0;
};

struct FptOptions {
    double dt = 1e-3;
    unsigned threads = 0;  // 0 = hardware concurrency
};

/// Runs n_rep replicas from x_start with the initial discrete state drawn
/// from n_dist until x >= x_abs or t > t_max. Statistics use absorbed
/// replicas only. Throws NumericError if none is absorbed.
FptEnsemble first_passage_ensemble(const HybridModel& model, double x_start, const Eigen::VectorXd& n_dist,
                                   double x_abs, double t_max, int n_rep, std::uint64_t seed,
                                   const FptOptions& opts = {});

}  // namespace pdmp
