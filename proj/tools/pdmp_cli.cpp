// pdmp: command-line front end over the C API. Output is CSV with a header
// row, 17 significant digits and LF line endings.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdmp/pdmp.h"

namespace {

// Carries a status code up to main.
struct Failure {
    int code;
    std::string message;
};

void check(pdmp_status st, const std::string& what) {
    if (st != PDMP_OK) throw Failure{static_cast<int>(st), what + ": " + pdmp_last_error()};
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Csv {
public:
    explicit Csv(std::initializer_list<std::string> header) { row(std::vector<std::string>(header)); }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }
    const std::string& text() const { return text_; }

private:
    std::string text_;
};

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw Failure{PDMP_ERR_IO, "cannot open '" + out_path + "' for writing"};
    f << text;
    if (!f) throw Failure{PDMP_ERR_IO, "write to '" + out_path + "' failed"};
}

struct ModelHandle {
    pdmp_model* ptr = nullptr;
    ModelHandle() = default;
    ModelHandle(const ModelHandle&) = delete;
    ModelHandle& operator=(const ModelHandle&) = delete;
    ~ModelHandle() { pdmp_model_free(ptr); }
};

struct Options {
    std::string config;
    std::optional<double> epsilon;
    std::optional<double> x;
    double p = 0.0;
    std::optional<double> v;
    std::optional<double> t_end;
    std::optional<double> dt;
    int reps = 500;
    std::uint64_t seed = 1;
    int grid = 129;
    std::optional<double> from;
    std::optional<double> to;
    std::string out;
    int n = 1;
    std::string path;
    bool sde = false;
    bool trivial = false;
    double q1 = 0.0;
    double q2 = 0.0;
    std::string kind = "binary";
    int stride = 1;
    unsigned threads = 0;
};

// A path that exists is read as a file; otherwise a bundled model name is tried.
void load(ModelHandle& m, const Options& o) {
    if (o.config.empty()) throw Failure{PDMP_ERR_VALIDATION, "--config is required"};
    std::error_code ec;
    if (!std::filesystem::exists(o.config, ec)) {
        if (pdmp_model_load_builtin(o.config.c_str(), &m.ptr) == PDMP_OK) {
            if (o.epsilon) check(pdmp_model_set_epsilon(m.ptr, *o.epsilon), "--epsilon");
            return;
        }
    }
    check(pdmp_model_load_file(o.config.c_str(), &m.ptr), "config");
    if (o.epsilon) check(pdmp_model_set_epsilon(m.ptr, *o.epsilon), "--epsilon");
}

double need(const std::optional<double>& v, const char* flag) {
    if (!v) throw Failure{PDMP_ERR_VALIDATION, std::string(flag) + " is required"};
    return *v;
}

double midpoint(const pdmp_model* m) {
    double a = 0.0, b = 0.0;
    pdmp_model_domain(m, &a, &b);
    return 0.5 * (a + b);
}

struct Basin {
    double x_minus;
    double x0;
};

// Leftmost stable fixed point and the unstable one next to it.
Basin default_basin(const pdmp_model* m) {
    std::vector<double> xs(64);
    std::vector<int> stable(64);
    size_t count = 0;
    check(pdmp_fixed_points(m, 2001, xs.data(), stable.data(), xs.size(), &count), "fixed points");
    count = std::min(count, xs.size());
    for (size_t i = 0; i + 1 < count; ++i) {
        if (stable[i]) {
            if (!stable[i + 1]) return {xs[i], xs[i + 1]};
            break;
        }
    }
    throw Failure{PDMP_ERR_VALIDATION, "model has no stable/unstable fixed-point pair; pass --from and --to"};
}

void cmd_validate(const Options& o) {
    ModelHandle m;
    load(m, o);
    pdmp_report* report = nullptr;
    check(pdmp_validate(m.ptr, o.grid < 2 ? 101 : o.grid, &report), "validate");
    const size_t issues = pdmp_report_count(report);
    for (size_t i = 0; i < issues; ++i) {
        int from = 0, to = 0, has_x = 0;
        double x = 0.0;
        const char* what = pdmp_report_issue(report, i, &from, &to, &has_x, &x);
        std::string where;
        if (from && to) where += " (" + std::to_string(from) + "," + std::to_string(to) + ")";
        else if (from) where += " state " + std::to_string(from);
        if (has_x) where += " at x = " + num(x);
        std::fprintf(stderr, "%s: %s%s\n", o.config.c_str(), what, where.c_str());
    }
    pdmp_report_free(report);
    if (issues) throw Failure{PDMP_ERR_VALIDATION, "model is invalid (" + std::to_string(issues) + " issue(s))"};

    Csv csv{"kind", "index", "x", "value"};
    std::vector<double> xs(64);
    std::vector<int> stable(64);
    size_t count = 0;
    check(pdmp_fixed_points(m.ptr, 2001, xs.data(), stable.data(), xs.size(), &count), "fixed points");
    for (size_t i = 0; i < std::min(count, xs.size()); ++i) {
        csv.row({"fixed_point", std::to_string(i + 1), num(xs[i]), stable[i] ? "stable" : "unstable"});
    }
    const double xm = midpoint(m.ptr);
    std::vector<double> rho(pdmp_model_states(m.ptr));
    check(pdmp_invariant_measure(m.ptr, xm, rho.data()), "invariant measure");
    for (size_t n = 0; n < rho.size(); ++n) csv.row({"rho", std::to_string(n + 1), num(xm), num(rho[n])});
    emit(csv.text(), o.out);
}

void cmd_perron(const Options& o) {
    ModelHandle m;
    load(m, o);
    const int k = pdmp_model_states(m.ptr);
    const double x = o.x.value_or(midpoint(m.ptr));
    std::vector<double> right(k), left(k), psi(k), rho(k);
    pdmp_spectrum s{};
    if (o.sde) {
        check(pdmp_hamiltonian_sde(m.ptr, x, o.p, &s, right.data(), left.data(), psi.data()), "perron");
    } else {
        check(pdmp_hamiltonian(m.ptr, x, o.p, &s, right.data(), left.data(), psi.data()), "perron");
    }
    check(pdmp_invariant_measure(m.ptr, x, rho.data()), "invariant measure");
    Csv csv{"state", "lambda", "R", "z", "psi", "rho"};
    for (int n = 0; n < k; ++n) {
        csv.row({std::to_string(n + 1), num(s.lambda), num(right[n]), num(left[n]), num(psi[n]), num(rho[n])});
    }
    emit(csv.text(), o.out);
}

void cmd_flow(const Options& o) {
    ModelHandle m;
    load(m, o);
    pdmp_flow* f = nullptr;
    check(pdmp_flow_run(m.ptr, need(o.x, "--x"), o.p, o.t_end.value_or(10.0), o.dt.value_or(1e-2), &f), "flow");
    Csv csv{"t", "x", "p", "energy"};
    for (size_t i = 0; i < pdmp_flow_size(f); ++i) {
        double t, x, p, e;
        pdmp_flow_point(f, i, &t, &x, &p, &e);
        csv.row({num(t), num(x), num(p), num(e)});
    }
    if (pdmp_flow_left_domain(f)) std::fprintf(stderr, "flow: stopped early, x left the domain\n");
    pdmp_flow_free(f);
    emit(csv.text(), o.out);
}

void cmd_quasipotential(const Options& o) {
    ModelHandle m;
    load(m, o);
    double from = 0.0, to = 0.0;
    if (o.from && o.to) {
        from = *o.from;
        to = *o.to;
    } else {
        const Basin b = default_basin(m.ptr);
        from = o.from.value_or(b.x_minus);
        to = o.to.value_or(b.x0);
    }
    pdmp_profile* prof = nullptr;
    check(pdmp_quasipotential(m.ptr, from, to, o.grid, o.trivial ? 1 : 0, &prof), "quasipotential");
    Csv csv{"x", "p_star", "phi"};
    for (size_t i = 0; i < pdmp_profile_size(prof); ++i) {
        double x, p, phi;
        pdmp_profile_point(prof, i, &x, &p, &phi);
        csv.row({num(x), num(p), num(phi)});
    }
    pdmp_profile_free(prof);
    emit(csv.text(), o.out);
}

// Reads a CSV with a header naming columns t and x.
void read_path(const std::string& file, std::vector<double>& t, std::vector<double>& x) {
    std::ifstream in(file);
    if (!in) throw Failure{PDMP_ERR_IO, "cannot read path file '" + file + "'"};
    std::string line;
    if (!std::getline(in, line)) throw Failure{PDMP_ERR_VALIDATION, file + ": empty path file"};
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            header.push_back(cell);
        }
    }
    int it = -1, ix = -1;
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
        if (header[i] == "t") it = i;
        if (header[i] == "x") ix = i;
    }
    if (it < 0 || ix < 0) throw Failure{PDMP_ERR_VALIDATION, file + ": header must name columns t and x"};
    for (int row = 2; std::getline(in, line); ++row) {
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        try {
            t.push_back(std::stod(cells.at(it)));
            x.push_back(std::stod(cells.at(ix)));
        } catch (const std::exception&) {
            throw Failure{PDMP_ERR_VALIDATION, file + ":" + std::to_string(row) + ": malformed row"};
        }
    }
}

void cmd_action(const Options& o) {
    ModelHandle m;
    load(m, o);
    if (o.path.empty()) throw Failure{PDMP_ERR_VALIDATION, "--path is required"};
    std::vector<double> t, x;
    read_path(o.path, t, x);
    double j = 0.0;
    check(pdmp_action(m.ptr, t.data(), x.data(), t.size(), &j), "action");
    Csv csv{"action"};
    csv.row({num(j)});
    emit(csv.text(), o.out);
}

void cmd_lagrangian(const Options& o) {
    ModelHandle m;
    load(m, o);
    const double x = o.x.value_or(midpoint(m.ptr));
    const double v = need(o.v, "--v");
    if (o.sde) {
        double l, p, mu, s2;
        check(pdmp_lagrangian_sde(m.ptr, x, v, &l, &p, &mu, &s2), "lagrangian");
        Csv csv{"L", "p", "mu", "sigma2"};
        csv.row({num(l), num(p), num(mu), num(s2)});
        emit(csv.text(), o.out);
        return;
    }
    double l, mu;
    int ill = 0;
    check(pdmp_lagrangian(m.ptr, x, v, &l, &mu, &ill), "lagrangian");
    if (ill) std::fprintf(stderr, "lagrangian: velocity inversion is ill-conditioned at this x\n");
    Csv csv{"L", "mu"};
    csv.row({num(l), num(mu)});
    emit(csv.text(), o.out);
}

void cmd_simulate(const Options& o) {
    ModelHandle m;
    load(m, o);
    const double x = o.x.value_or(midpoint(m.ptr));
    pdmp_trajectory* tr = nullptr;
    const double t_end = o.t_end.value_or(10.0);
    const double dt = o.dt.value_or(1e-3);
    if (o.sde) {
        check(pdmp_simulate_sde(m.ptr, x, o.n, t_end, o.seed, dt, o.stride, &tr), "simulate");
    } else {
        check(pdmp_simulate(m.ptr, x, o.n, t_end, o.seed, dt, o.stride, &tr), "simulate");
    }
    Csv csv{"t", "x", "n"};
    for (size_t i = 0; i < pdmp_trajectory_size(tr); ++i) {
        double t, xx;
        int n;
        pdmp_trajectory_sample(tr, i, &t, &xx, &n);
        csv.row({num(t), num(xx), std::to_string(n)});
    }
    if (pdmp_trajectory_termination(tr) == PDMP_LEFT_DOMAIN) {
        std::fprintf(stderr, "simulate: trajectory left the domain\n");
    }
    pdmp_trajectory_free(tr);
    emit(csv.text(), o.out);
}

void cmd_occupancy(const Options& o) {
    ModelHandle m;
    load(m, o);
    const int k = pdmp_model_states(m.ptr);
    const double x = o.x.value_or(midpoint(m.ptr));
    std::vector<double> emp(k), se(k), rho(k);
    int warn = 0;
    check(pdmp_occupancy(m.ptr, x, o.t_end.value_or(1e4), o.seed, emp.data(), se.data(), rho.data(), &warn),
          "occupancy");
    if (warn) std::fprintf(stderr, "occupancy: fewer than 1e4 expected jumps; increase --T\n");
    Csv csv{"state", "empirical", "stderr", "rho"};
    for (int n = 0; n < k; ++n) csv.row({std::to_string(n + 1), num(emp[n]), num(se[n]), num(rho[n])});
    emit(csv.text(), o.out);
}

void cmd_mfpt(const Options& o) {
    ModelHandle m;
    load(m, o);
    double from = 0.0, to = 0.0;
    if (o.from && o.to) {
        from = *o.from;
        to = *o.to;
    } else {
        const Basin b = default_basin(m.ptr);
        from = o.from.value_or(b.x_minus);
        to = o.to.value_or(b.x0);
    }
    pdmp_fpt* fpt = nullptr;
    check(pdmp_first_passage(m.ptr, from, nullptr, to, o.t_end.value_or(1e4), o.reps, o.seed, o.dt.value_or(1e-3),
                             o.threads, &fpt),
          "mfpt");
    double mean, se, cv;
    int absorbed, timeouts, left;
    pdmp_fpt_summary(fpt, &mean, &se, &cv, &absorbed, &timeouts, &left);
    std::string samples;
    if (!o.out.empty()) {
        Csv per{"replica", "tau"};
        for (size_t i = 0; i < pdmp_fpt_size(fpt); ++i) {
            const double tau = pdmp_fpt_tau(fpt, i);
            per.row({std::to_string(i + 1), std::isnan(tau) ? "" : num(tau)});
        }
        samples = per.text();
    }
    pdmp_fpt_free(fpt);
    if (left) std::fprintf(stderr, "mfpt: %d replica(s) left the domain\n", left);
    Csv csv{"epsilon", "n_rep", "mean", "stderr", "cv", "timeouts"};
    csv.row({num(pdmp_model_epsilon(m.ptr)), std::to_string(o.reps), num(mean), num(se), num(cv),
             std::to_string(timeouts)});
    emit(csv.text(), "");
    if (!o.out.empty()) emit(samples, o.out);
}

void cmd_oracle(const Options& o) {
    if (o.kind == "appendix") {
        double psi[2];
        pdmp_oracle_appendix_psi(o.q1, o.q2, psi);
        const double a[4] = {0.5, 1.0 / 3.0, 0.5, 2.0 / 3.0};
        const double w[2] = {o.q1, o.q2};
        pdmp_spectrum s{};
        check(pdmp_perron_weighted(a, w, 2, &s, nullptr, nullptr, nullptr), "perron");
        Csv csv{"q1", "q2", "lambda", "psi_1", "psi_2", "lambda_perron"};
        csv.row({num(o.q1), num(o.q2), num(pdmp_oracle_appendix_lambda(o.q1, o.q2)), num(psi[0]), num(psi[1]),
                 num(s.lambda)});
        emit(csv.text(), o.out);
        return;
    }
    ModelHandle m;
    load(m, o);
    const double x = o.x.value_or(midpoint(m.ptr));
    pdmp_spectrum s{};
    check(pdmp_hamiltonian(m.ptr, x, o.p, &s, nullptr, nullptr, nullptr), "perron");
    if (o.kind == "binary") {
        double lam, psi[2], pstar;
        check(pdmp_oracle_binary_lambda(m.ptr, x, o.p, &lam), "oracle");
        check(pdmp_oracle_binary_psi(m.ptr, x, o.p, psi), "oracle");
        check(pdmp_oracle_binary_momentum(m.ptr, x, &pstar), "oracle");
        Csv csv{"x", "p", "lambda", "psi_1", "psi_2", "p_star", "lambda_perron"};
        csv.row({num(x), num(o.p), num(lam), num(psi[0]), num(psi[1]), num(pstar), num(s.lambda)});
        emit(csv.text(), o.out);
    } else if (o.kind == "ionchannel") {
        double lam, dphi;
        check(pdmp_oracle_ionchannel_lambda(m.ptr, x, o.p, &lam), "oracle");
        check(pdmp_oracle_ionchannel_phi_prime(m.ptr, x, &dphi), "oracle");
        Csv csv{"x", "p", "lambda", "phi_prime", "lambda_perron"};
        csv.row({num(x), num(o.p), num(lam), num(dphi), num(s.lambda)});
        emit(csv.text(), o.out);
    } else {
        throw Failure{PDMP_ERR_VALIDATION, "--kind must be binary, ionchannel or appendix"};
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Large deviations and simulation for stochastic hybrid systems"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Model config path or bundled name (binary, bistable, sodium_channel)");
        sub->add_option("--epsilon", o.epsilon, "Override the config's epsilon");
        sub->add_option("--out", o.out, "Write CSV here instead of standard output");
    };
    struct Entry {
        const char* name;
        const char* help;
        void (*run)(const Options&);
    };
    const Entry entries[] = {
        {"validate", "Check a model on a grid; list fixed points and rho at the domain midpoint", cmd_validate},
        {"perron", "Perron eigenvalue and vectors of the tilted generator at (x, p)", cmd_perron},
        {"flow", "Integrate Hamilton's equations from (x, p)", cmd_flow},
        {"quasipotential", "Zero-energy momentum and quasipotential on a grid", cmd_quasipotential},
        {"action", "Action of a (t, x) path read from CSV", cmd_action},
        {"lagrangian", "Lagrangian L(x, v) and conjugate momentum", cmd_lagrangian},
        {"simulate", "Simulate one trajectory", cmd_simulate},
        {"occupancy", "Time fractions of the chain with x frozen", cmd_occupancy},
        {"mfpt", "Mean first passage time ensemble", cmd_mfpt},
        {"oracle", "Closed-form reference values next to the numeric solver", cmd_oracle},
    };
    std::vector<std::pair<CLI::App*, void (*)(const Options&)>> subs;
    for (const auto& e : entries) {
        CLI::App* sub = app.add_subcommand(e.name, e.help);
        common(sub);
        subs.emplace_back(sub, e.run);
    }
    auto* perron = subs[1].first;
    perron->add_option("--x", o.x, "Continuous state");
    perron->add_option("--p", o.p, "Momentum");
    perron->add_flag("--sde", o.sde, "Use the sigma-augmented problem");
    auto* flow = subs[2].first;
    flow->add_option("--x", o.x, "Initial x")->required();
    flow->add_option("--p", o.p, "Initial p");
    flow->add_option("--T", o.t_end, "Final time (default 10)");
    flow->add_option("--dt", o.dt, "RK4 step (default 0.01)");
    auto* qp = subs[3].first;
    qp->add_option("--from", o.from, "Anchor (default: leftmost stable fixed point)");
    qp->add_option("--to", o.to, "End point (default: the adjacent unstable fixed point)");
    qp->add_option("--grid", o.grid, "Grid points (>= 16)");
    qp->add_flag("--trivial", o.trivial, "Use the p* = 0 branch");
    subs[0].first->add_option("--grid", o.grid, "Validation grid points");
    auto* action = subs[4].first;
    action->add_option("--path", o.path, "CSV with columns t and x")->required();
    auto* lag = subs[5].first;
    lag->add_option("--x", o.x, "Continuous state");
    lag->add_option("--v", o.v, "Velocity")->required();
    lag->add_flag("--sde", o.sde, "Use the sigma-augmented problem");
    auto* sim = subs[6].first;
    sim->add_option("--x", o.x, "Initial x (default: domain midpoint)");
    sim->add_option("--n", o.n, "Initial discrete state, 1-based");
    sim->add_option("--T", o.t_end, "Final time (default 10)");
    sim->add_option("--dt", o.dt, "Integrator step (default 1e-3)");
    sim->add_option("--seed", o.seed, "Random seed");
    sim->add_option("--stride", o.stride, "Record every stride-th step");
    sim->add_flag("--sde", o.sde, "Euler-Maruyama with sigma noise");
    auto* occ = subs[7].first;
    occ->add_option("--x", o.x, "Frozen x (default: domain midpoint)");
    occ->add_option("--T", o.t_end, "Simulated time (default 1e4)");
    occ->add_option("--seed", o.seed, "Random seed");
    auto* mfpt = subs[8].first;
    mfpt->add_option("--from", o.from, "Start (default: leftmost stable fixed point)");
    mfpt->add_option("--to", o.to, "Absorbing level (default: the adjacent unstable fixed point)");
    mfpt->add_option("--reps", o.reps, "Replicas");
    mfpt->add_option("--seed", o.seed, "Random seed");
    mfpt->add_option("--T", o.t_end, "Timeout per replica (default 1e4)");
    mfpt->add_option("--dt", o.dt, "Integrator step (default 1e-3)");
    mfpt->add_option("--threads", o.threads, "Worker threads (0 = all cores); output does not depend on it");
    auto* oracle = subs[9].first;
    oracle->add_option("--kind", o.kind, "binary, ionchannel or appendix");
    oracle->add_option("--x", o.x, "Continuous state");
    oracle->add_option("--p", o.p, "Momentum");
    oracle->add_option("--q1", o.q1, "Appendix example q1");
    oracle->add_option("--q2", o.q2, "Appendix example q2");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return PDMP_ERR_VALIDATION;
    }

    for (const auto& [sub, run] : subs) {
        if (!sub->parsed()) continue;
        try {
            run(o);
            return 0;
        } catch (const Failure& f) {
            std::fprintf(stderr, "pdmp %s: %s\n", sub->get_name().c_str(), f.message.c_str());
            return f.code;
        }
    }
    return PDMP_ERR_VALIDATION;
}
