#include "pdmp/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pdmp {

namespace {

CompiledExpr compile_in_context(const Expr& e, const ParamMap& params, const std::string& where) {
    try {
        return CompiledExpr::compile(e, params);
    } catch (const EvalError& err) {
        throw ValidationError(where + ": " + err.what());
    }
}

std::string state_label(int n) { return std::to_string(n + 1); }

}  // namespace

HybridModel::HybridModel(ModelDefinition def) : def_(std::move(def)) {
    const int k = def_.states;
    if (k < 1) throw ValidationError("states must be a positive integer");
    if (!(std::isfinite(def_.domain.lower) && std::isfinite(def_.domain.upper)) ||
        !(def_.domain.lower < def_.domain.upper)) {
        throw ValidationError("domain must be a finite interval [a, b] with a < b");
    }
    if (!(std::isfinite(def_.epsilon) && def_.epsilon > 0.0)) {
        throw ValidationError("epsilon must be a positive finite number");
    }
    if (def_.params.count("x") != 0) throw ValidationError("params: 'x' is reserved for the continuous state");
    if (static_cast<int>(def_.drift.size()) != k) {
        throw ValidationError("drift: expected " + std::to_string(k) + " expressions, got " +
                              std::to_string(def_.drift.size()));
    }
    drift_.reserve(k);
    for (int n = 0; n < k; ++n) {
        drift_.push_back(compile_in_context(def_.drift[n], def_.params, "drift[" + state_label(n) + "]"));
    }
    out_.resize(k);
    for (const auto& [key, e] : def_.rates) {
        const auto [from, to] = key;
        const std::string where = "rates[\"" + state_label(from) + "," + state_label(to) + "\"]";
        if (from < 0 || from >= k || to < 0 || to >= k) throw ValidationError(where + ": state index out of range");
        if (from == to) throw ValidationError(where + ": diagonal entries are implied by the row sums");
        out_[from].push_back({to, compile_in_context(e, def_.params, where)});
    }
    for (auto& row : out_) {
        std::sort(row.begin(), row.end(), [](const Transition& a, const Transition& b) { return a.target < b.target; });
    }
    if (def_.sigma) {
        if (static_cast<int>(def_.sigma->size()) != k) {
            throw ValidationError("sigma: expected " + std::to_string(k) + " expressions, got " +
                                  std::to_string(def_.sigma->size()));
        }
        for (int n = 0; n < k; ++n) {
            sigma_.push_back(compile_in_context((*def_.sigma)[n], def_.params, "sigma[" + state_label(n) + "]"));
        }
    }
}

HybridModel HybridModel::with_epsilon(double epsilon) const {
    ModelDefinition def = def_;
    def.epsilon = epsilon;
    return HybridModel(std::move(def));
}

double HybridModel::sigma(int n, double x) const {
    if (sigma_.empty()) throw ValidationError("model has no sigma expressions");
    return sigma_[n](x);
}

double HybridModel::rate(int n, int m, double x) const {
    for (const auto& t : out_[n]) {
        if (t.target == m) return t.rate(x);
    }
    return 0.0;
}

double HybridModel::exit_rate(int n, double x) const {
    double total = 0.0;
    for (const auto& t : out_[n]) total += t.rate(x);
    return total;
}

Eigen::VectorXd HybridModel::drifts(double x) const {
    Eigen::VectorXd f(states());
    for (int n = 0; n < states(); ++n) f[n] = drift_[n](x);
    return f;
}

Eigen::VectorXd HybridModel::sigmas(double x) const {
    if (sigma_.empty()) throw ValidationError("model has no sigma expressions");
    Eigen::VectorXd s(states());
    for (int n = 0; n < states(); ++n) s[n] = sigma_[n](x);
    return s;
}

GeneratorMatrix generator(const HybridModel& model, double x) {
    if (!model.domain().contains(x)) {
        std::ostringstream os;
        os.precision(17);
        os << "x = " << x << " is outside the domain [" << model.domain().lower << ", " << model.domain().upper << "]";
        throw ValidationError(os.str());
    }
    const int k = model.states();
    GeneratorMatrix g{Eigen::MatrixXd::Zero(k, k), x};
    for (int n = 0; n < k; ++n) {
        double row = 0.0;
        for (const auto& t : model.transitions(n)) {
            const double r = t.rate(x);
            if (r < 0.0) {
                std::ostringstream os;
                os.precision(17);
                os << "negative rate " << r << " for transition (" << n + 1 << "," << t.target + 1 << ") at x = " << x;
                throw ValidationError(os.str());
            }
            g.a(n, t.target) = r;
            row += r;
        }
        g.a(n, n) = -row;
    }
    return g;
}

bool is_irreducible(const Eigen::MatrixXd& a) {
    const auto k = a.rows();
    if (k <= 1) return true;
    auto reach_all = [&](bool transpose) {
        std::vector<char> seen(k, 0);
        std::vector<Eigen::Index> stack{0};
        seen[0] = 1;
        Eigen::Index count = 1;
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            for (Eigen::Index j = 0; j < k; ++j) {
                const double v = transpose ? a(j, i) : a(i, j);
                if (j != i && v > 0.0 && !seen[j]) {
                    seen[j] = 1;
                    ++count;
                    stack.push_back(j);
                }
            }
        }
        return count == k;
    };
    return reach_all(false) && reach_all(true);
}

Eigen::VectorXd invariant_measure(const GeneratorMatrix& gen) {
    const Eigen::MatrixXd& a = gen.a;
    const auto k = a.rows();
    if (!is_irreducible(a)) throw ValidationError("generator is reducible; the invariant measure is not unique");
    // Grassmann-Taksar-Heyman state reduction: pivoted elimination that only
    // ever adds and divides positive numbers, so tiny stationary weights keep
    // full relative accuracy.
    Eigen::MatrixXd p = a;
    for (Eigen::Index n = k - 1; n >= 1; --n) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) s += p(n, j);
        if (!(s > 0.0)) throw ValidationError("generator is reducible; the invariant measure is not unique");
        for (Eigen::Index i = 0; i < n; ++i) p(i, n) /= s;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pin = p(i, n);
            if (pin == 0.0) continue;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j != i) p(i, j) += pin * p(n, j);
            }
        }
    }
    Eigen::VectorXd rho(k);
    rho[0] = 1.0;
    for (Eigen::Index j = 1; j < k; ++j) {
        double v = 0.0;
        for (Eigen::Index i = 0; i < j; ++i) v += rho[i] * p(i, j);
        rho[j] = v;
    }
    rho /= rho.sum();

    const double scale = std::max(1.0, a.cwiseAbs().rowwise().sum().maxCoeff());
    const double residual = (rho.transpose() * a).cwiseAbs().maxCoeff();
    if (residual > 1e-10 * scale) {
        throw NumericError("invariant measure residual " + std::to_string(residual) + " exceeds tolerance");
    }
    return rho;
}

Eigen::VectorXd invariant_measure(const HybridModel& model, double x) { return invariant_measure(generator(model, x)); }

double averaged_field(const HybridModel& model, double x) {
    return invariant_measure(model, x).dot(model.drifts(x));
}

namespace {

Stability classify(const HybridModel& model, double x) {
    const Domain& d = model.domain();
    const double h = 1e-6 * std::max(1.0, std::fabs(x));
    const double lo = std::max(d.lower, x - h);
    const double hi = std::min(d.upper, x + h);
    const double slope = (averaged_field(model, hi) - averaged_field(model, lo)) / (hi - lo);
    return slope < 0.0 ? Stability::stable : Stability::unstable;
}

double refine_root(const HybridModel& model, double lo, double hi, double flo) {
    double best = lo;
    double fbest = flo;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = averaged_field(model, mid);
        if (std::fabs(fm) < std::fabs(fbest)) {
            best = mid;
            fbest = fm;
        }
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        const double width = hi - lo;
        if (width <= 1e-12 * std::max(1.0, std::fabs(mid)) && std::fabs(fbest) <= 1e-10) break;
    }
    return best;
}

}  // namespace

std::vector<FixedPoint> fixed_points(const HybridModel& model, int grid_n) {
    if (grid_n < 2) throw ValidationError("fixed_points: grid_n must be at least 2");
    const Domain& d = model.domain();
    std::vector<double> xs(grid_n);
    std::vector<double> fs(grid_n);
    for (int i = 0; i < grid_n; ++i) {
        xs[i] = i == grid_n - 1 ? d.upper : d.lower + (d.upper - d.lower) * i / (grid_n - 1);
        fs[i] = averaged_field(model, xs[i]);
    }
    std::vector<FixedPoint> out;
    for (int i = 0; i < grid_n; ++i) {
        if (fs[i] == 0.0) {
            // Report the start of each run of exact zeros once.
            if (i == 0 || fs[i - 1] != 0.0) out.push_back({xs[i], classify(model, xs[i])});
            continue;
        }
        if (i + 1 < grid_n && fs[i + 1] != 0.0 && (fs[i] < 0.0) != (fs[i + 1] < 0.0)) {
            const double root = refine_root(model, xs[i], xs[i + 1], fs[i]);
            out.push_back({root, classify(model, root)});
        }
    }
    return out;
}

ValidationReport validate(const HybridModel& model, int grid_n) {
    ValidationReport report;
    const int k = model.states();
    if (k < 2) report.issues.push_back({"at least two discrete states are required", {}, {}, {}});
    if (grid_n < 2) grid_n = 2;
    const Domain& d = model.domain();
    bool reported_reducible = false;
    for (int i = 0; i < grid_n; ++i) {
        const double x = i == grid_n - 1 ? d.upper : d.lower + (d.upper - d.lower) * i / (grid_n - 1);
        bool rates_ok = true;
        for (int n = 0; n < k; ++n) {
            try {
                (void)model.drift(n, x);
            } catch (const Error& e) {
                report.issues.push_back({std::string("drift: ") + e.what(), n + 1, {}, x});
            }
            if (model.has_sigma()) {
                try {
                    (void)model.sigma(n, x);
                } catch (const Error& e) {
                    report.issues.push_back({std::string("sigma: ") + e.what(), n + 1, {}, x});
                }
            }
            for (const auto& t : model.transitions(n)) {
                try {
                    const double r = t.rate(x);
                    if (r < 0.0) {
                        rates_ok = false;
                        report.issues.push_back({"negative rate", n + 1, t.target + 1, x});
                    }
                } catch (const Error& e) {
                    rates_ok = false;
                    report.issues.push_back({std::string("rate: ") + e.what(), n + 1, t.target + 1, x});
                }
            }
        }
        if (rates_ok && !reported_reducible && k >= 2) {
            if (!is_irreducible(generator(model, x).a)) {
                report.issues.push_back({"generator is reducible", {}, {}, x});
                reported_reducible = true;
            }
        }
    }
    return report;
}

}  // namespace pdmp
