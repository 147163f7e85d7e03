#pragma once

// Stochastic hybrid model: K discrete states, a drift F_n(x) per state and an
// x-dependent transition-rate matrix. Rates are per unit slow time; the fast
// chain runs them at speed 1/epsilon. Indices are 0-based in C++; the JSON
// config uses 1-based indices and converts at load time.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pdmp/expr.hpp"

namespace pdmp {

struct Domain {
    double lower = 0.0;
    double upper = 1.0;

    [[nodiscard]] bool contains(double x) const noexcept { return x >= lower && x <= upper; }
    [[nodiscard]] double midpoint() const noexcept { return 0.5 * (lower + upper); }
};

/// Birth-death channel family: N two-state channels opening at alpha(x),
/// closing at beta(x), with drift F_n = (n/N) f(x) - g(x) for n open channels.
/// Kept alongside the expanded model so the closed-form oracles can use it.
struct IonChannelDefinition {
    std::string channels_param;  // name of the integer parameter N
    Expr alpha;
    Expr beta;
    Expr f;
    Expr g;
};

/// Plain description of a model, as loaded from a config.
struct ModelDefinition {
    std::string name;
    int states = 0;
    Domain domain;
    double epsilon = 1.0;
    ParamMap params;
    std::vector<Expr> drift;                     // one per state
    std::map<std::pair<int, int>, Expr> rates;   // (from, to), from != to; absent means zero
    std::optional<std::vector<Expr>> sigma;      // one per state when present
    std::optional<IonChannelDefinition> ion_channel;
};

/// Generator of the frozen-x chain: off-diagonals are rates, rows sum to zero.
struct GeneratorMatrix {
    Eigen::MatrixXd a;
    double x = 0.0;
};

enum class Stability { stable, unstable };

struct FixedPoint {
    double x = 0.0;
    Stability stability = Stability::stable;
};

/// Immutable, validated-at-construction model. Construction checks structure
/// (state count, indices, parameter references) and compiles expressions;
/// numeric checks on a grid live in validate().
class HybridModel {
public:
    explicit HybridModel(ModelDefinition def);

    [[nodiscard]] int states() const noexcept { return def_.states; }
    [[nodiscard]] const Domain& domain() const noexcept { return def_.domain; }
    [[nodiscard]] double epsilon() const noexcept { return def_.epsilon; }
    [[nodiscard]] bool has_sigma() const noexcept { return !sigma_.empty(); }
    [[nodiscard]] const ModelDefinition& definition() const noexcept { return def_; }

    /// Copy with a different timescale separation.
    [[nodiscard]] HybridModel with_epsilon(double epsilon) const;

    [[nodiscard]] double drift(int n, double x) const { return drift_[n](x); }
    [[nodiscard]] double sigma(int n, double x) const;
    /// Rate n -> m at x; zero when no expression was given.
    [[nodiscard]] double rate(int n, int m, double x) const;
    /// Total exit rate out of state n at x.
    [[nodiscard]] double exit_rate(int n, double x) const;

    /// Outgoing transitions of state n, in increasing target order.
    struct Transition {
        int target;
        CompiledExpr rate;
    };
    [[nodiscard]] const std::vector<Transition>& transitions(int n) const { return out_[n]; }

    [[nodiscard]] Eigen::VectorXd drifts(double x) const;
    [[nodiscard]] Eigen::VectorXd sigmas(double x) const;

private:
    ModelDefinition def_;
    std::vector<CompiledExpr> drift_;
    std::vector<CompiledExpr> sigma_;
    std::vector<std::vector<Transition>> out_;
};

/// A[n][m] = rate n->m, A[n][n] = -sum of the row. Throws ValidationError if x
/// is outside the domain or an evaluated rate is negative.
GeneratorMatrix generator(const HybridModel& model, double x);

/// True if the directed graph of strictly positive off-diagonal entries is
/// strongly connected.
bool is_irreducible(const Eigen::MatrixXd& a);

/// Stationary distribution of the frozen-x chain: rho^T A = 0, sum rho = 1.
Eigen::VectorXd invariant_measure(const HybridModel& model, double x);
Eigen::VectorXd invariant_measure(const GeneratorMatrix& gen);

/// F-bar(x) = sum_n rho(x,n) F_n(x).
double averaged_field(const HybridModel& model, double x);

/// Roots of F-bar found by a sign scan on a uniform grid of `grid_n` points,
/// refined by bisection. Sorted by x.
std::vector<FixedPoint> fixed_points(const HybridModel& model, int grid_n = 2001);

struct ValidationIssue {
    std::string what;
    // 1-based state indices, as in configs.
    std::optional<int> from;
    std::optional<int> to;
    std::optional<double> x;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    [[nodiscard]] bool ok() const noexcept { return issues.empty(); }
};

/// Grid checks: K >= 2, finite drifts, non-negative rates and irreducibility
/// at `grid_n` uniformly spaced points of the domain.
ValidationReport validate(const HybridModel& model, int grid_n = 101);

}  // namespace pdmp
