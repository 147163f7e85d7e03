#include "pdmp/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "pdmp/rng.hpp"

namespace pdmp {

namespace {

double exit_rate_checked(const HybridModel& model, int n, double x) {
    double total = 0.0;
    for (const auto& tr : model.transitions(n)) {
        const double r = tr.rate(x);
        if (!(r >= 0.0)) {
            throw ValidationError("negative or non-finite rate " + std::to_string(n + 1) + "->" +
                                  std::to_string(tr.target + 1) + " at x = " + std::to_string(x));
        }
        total += r;
    }
    return total;
}

int draw_destination(const HybridModel& model, int n, double x, RandomStream& rng) {
    const auto& out = model.transitions(n);
    double total = 0.0;
    for (const auto& tr : out) total += tr.rate(x);
    const double u = rng.uniform() * total;
    double acc = 0.0;
    for (const auto& tr : out) {
        acc += tr.rate(x);
        if (u < acc) return tr.target;
    }
    // Rounding left u at the very top; take the last state with positive rate.
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
        if (it->rate(x) > 0.0) return it->target;
    }
    throw NumericError("jump from a state with zero exit rate");
}

double rk4(const HybridModel& model, int n, double x, double h, double f0) {
    const double k2 = model.drift(n, x + 0.5 * h * f0);
    const double k3 = model.drift(n, x + 0.5 * h * k2);
    const double k4 = model.drift(n, x + h * k3);
    return x + h / 6.0 * (f0 + 2.0 * k2 + 2.0 * k3 + k4);
}

enum class Event { none, jump, absorb, exit };

// Shared bookkeeping for both integrators.
class Recorder {
public:
    Recorder(Trajectory& tr, const SimOptions& opts) : tr_(tr), opts_(opts) {}

    void start(double x, int n) {
        tr_.jump_times.push_back(0.0);
        tr_.states.push_back(n);
        sample(0.0, x, n);
    }
    void step(double t, double x, int n, bool last) {
        ++steps_;
        if (opts_.record && (last || steps_ % opts_.stride == 0)) sample(t, x, n);
    }
    void jump(double t, double x, int from, int to) {
        sample(t, x, from);
        sample(t, x, to);
        tr_.jump_times.push_back(t);
        tr_.states.push_back(to);
    }
    void finish(double t, double x, int n, Termination why) {
        tr_.termination = why;
        tr_.t_end = t;
        tr_.x_end = x;
        tr_.n_end = n;
        if (opts_.record && (tr_.samples.empty() || tr_.samples.back().t != t || tr_.samples.back().n != n)) {
            sample(t, x, n);
        }
    }

private:
    void sample(double t, double x, int n) {
        if (opts_.record) tr_.samples.push_back({t, x, n});
    }

    Trajectory& tr_;
    const SimOptions& opts_;
    std::uint64_t steps_ = 0;
};

void check_inputs(const HybridModel& model, double x0, int n0, double t_end, double dt, const SimOptions& opts) {
    if (!std::isfinite(x0) || !model.domain().contains(x0)) throw ValidationError("x0 outside the domain");
    if (n0 < 0 || n0 >= model.states()) throw ValidationError("initial state out of range");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ValidationError("T must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be positive");
    if (opts.stride < 1) throw ValidationError("stride must be at least 1");
    if (opts.absorb_at && !std::isfinite(*opts.absorb_at)) throw ValidationError("absorbing level must be finite");
}

// Bisection for the first s in (0, h] where below(s) turns false, given
// below(0) true and below(h) false.
template <class F>
double bisect_crossing(double h, F below) {
    double lo = 0.0;
    double hi = h;
    for (int i = 0; i < 64; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (below(mid) ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace

Trajectory simulate(const HybridModel& model, double x0, int n0, double t_end, std::uint64_t seed, double dt,
                    const SimOptions& opts) {
    check_inputs(model, x0, n0, t_end, dt, opts);
    const double inv_eps = 1.0 / model.epsilon();
    const Domain& dom = model.domain();
    RandomStream clock(seed, opts.replica, StreamPurpose::jumps);
    RandomStream dest(seed, opts.replica, StreamPurpose::destinations);

    Trajectory tr;
    Recorder rec(tr, opts);
    double t = 0.0;
    double x = x0;
    int n = n0;
    rec.start(x, n);
    if (opts.absorb_at && x >= *opts.absorb_at) {
        rec.finish(t, x, n, Termination::absorbed);
        return tr;
    }
    double hazard = 0.0;
    double target = clock.exponential();

    while (t < t_end) {
        const double remaining = t_end - t;
        const double h = std::min(dt, remaining);
        const double f0 = model.drift(n, x);
        const double l0 = exit_rate_checked(model, n, x);
        // Position after s and hazard gained over [0, s], one RK4 step plus
        // Simpson's rule with the Hermite midpoint.
        auto advance = [&](double s) { return rk4(model, n, x, s, f0); };
        auto gained = [&](double s, double xs) {
            const double fs = model.drift(n, xs);
            const double xm = 0.5 * (x + xs) + s * (f0 - fs) / 8.0;
            return s / 6.0 * (l0 + 4.0 * exit_rate_checked(model, n, xm) + exit_rate_checked(model, n, xs)) * inv_eps;
        };
        const double x1 = advance(h);
        if (!std::isfinite(x1)) throw NumericError("simulate: non-finite state at t = " + std::to_string(t));
        const double dh = gained(h, x1);

        Event event = Event::none;
        double s_event = h;
        if (hazard + dh >= target) {
            double lo = 0.0;
            double hi = h;
            double s = h;
            for (int i = 0; i < 200; ++i) {
                s = 0.5 * (lo + hi);
                if (s <= lo || s >= hi) break;
                const double g = hazard + gained(s, advance(s)) - target;
                if (std::fabs(g) <= 1e-10) break;
                (g < 0.0 ? lo : hi) = s;
            }
            event = Event::jump;
            s_event = s;
        }
        if (opts.absorb_at && x1 >= *opts.absorb_at) {
            const double level = *opts.absorb_at;
            const double s = bisect_crossing(h, [&](double u) { return advance(u) < level; });
            if (event == Event::none || s < s_event) {
                event = Event::absorb;
                s_event = s;
            }
        }
        if (!dom.contains(x1)) {
            const double s = bisect_crossing(h, [&](double u) { return dom.contains(advance(u)); });
            if (event == Event::none || s < s_event) {
                event = Event::exit;
                s_event = s;
            }
        }

        switch (event) {
            case Event::none: {
                const bool last = h == remaining;
                t = last ? t_end : t + h;
                x = x1;
                hazard += dh;
                rec.step(t, x, n, last);
                break;
            }
            case Event::jump: {
                t += s_event;
                x = advance(s_event);
                const int m = draw_destination(model, n, x, dest);
                rec.jump(t, x, n, m);
                n = m;
                hazard = 0.0;
                target = clock.exponential();
                break;
            }
            case Event::absorb:
                rec.finish(t + s_event, *opts.absorb_at, n, Termination::absorbed);
                return tr;
            case Event::exit:
                rec.finish(t + s_event, x1 > dom.upper ? dom.upper : dom.lower, n, Termination::left_domain);
                return tr;
        }
    }
    rec.finish(t, x, n, Termination::reached_end);
    return tr;
}

Trajectory simulate_sde(const HybridModel& model, double x0, int n0, double t_end, std::uint64_t seed, double dt,
                        const SimOptions& opts) {
    check_inputs(model, x0, n0, t_end, dt, opts);
    if (!model.has_sigma()) throw ValidationError("simulate_sde: model has no sigma expressions");
    const double eps = model.epsilon();
    const double noise_scale = std::sqrt(eps);
    const Domain& dom = model.domain();
    RandomStream clock(seed, opts.replica, StreamPurpose::jumps);
    RandomStream dest(seed, opts.replica, StreamPurpose::destinations);
    RandomStream noise(seed, opts.replica, StreamPurpose::noise);

    Trajectory tr;
    Recorder rec(tr, opts);
    double t = 0.0;
    double x = x0;
    int n = n0;
    rec.start(x, n);
    if (opts.absorb_at && x >= *opts.absorb_at) {
        rec.finish(t, x, n, Termination::absorbed);
        return tr;
    }
    double hazard = 0.0;
    double target = clock.exponential();

    while (t < t_end) {
        const double remaining = t_end - t;
        const double h = std::min(dt, remaining);
        const double x1 = x + model.drift(n, x) * h + noise_scale * model.sigma(n, x) * std::sqrt(h) * noise.normal();
        if (!std::isfinite(x1)) throw NumericError("simulate_sde: non-finite state at t = " + std::to_string(t));
        const double l0 = exit_rate_checked(model, n, x);
        const double l1 = exit_rate_checked(model, n, dom.contains(x1) ? x1 : std::clamp(x1, dom.lower, dom.upper));
        const double dh = 0.5 * h * (l0 + l1) / eps;

        Event event = Event::none;
        double s_event = h;
        if (hazard + dh >= target) {
            // Rate linear in s over the step: (l0 s + (l1 - l0) s^2 / (2h)) / eps = need.
            const double need = (target - hazard) * eps;
            const double a = (l1 - l0) / (2.0 * h);
            const double disc = std::max(0.0, l0 * l0 + 4.0 * a * need);
            const double denom = l0 + std::sqrt(disc);
            const double s = denom > 0.0 ? 2.0 * need / denom : h;
            event = Event::jump;
            s_event = std::clamp(s, 0.0, h);
        }
        if (opts.absorb_at && x1 >= *opts.absorb_at) {
            const double s = h * (*opts.absorb_at - x) / (x1 - x);
            if (event == Event::none || s < s_event) {
                event = Event::absorb;
                s_event = s;
            }
        }
        if (!dom.contains(x1)) {
            const double bound = x1 > dom.upper ? dom.upper : dom.lower;
            const double s = h * (bound - x) / (x1 - x);
            if (event == Event::none || s < s_event) {
                event = Event::exit;
                s_event = s;
            }
        }

        switch (event) {
            case Event::none: {
                const bool last = h == remaining;
                t = last ? t_end : t + h;
                x = x1;
                hazard += dh;
                rec.step(t, x, n, last);
                break;
            }
            case Event::jump: {
                t += s_event;
                x += (x1 - x) * (s_event / h);
                const int m = draw_destination(model, n, x, dest);
                rec.jump(t, x, n, m);
                n = m;
                hazard = 0.0;
                target = clock.exponential();
                break;
            }
            case Event::absorb:
                rec.finish(t + s_event, *opts.absorb_at, n, Termination::absorbed);
                return tr;
            case Event::exit:
                rec.finish(t + s_event, x1 > dom.upper ? dom.upper : dom.lower, n, Termination::left_domain);
                return tr;
        }
    }
    rec.finish(t, x, n, Termination::reached_end);
    return tr;
}

OccupancyResult occupancy(const HybridModel& model, double x_frozen, double t_end, std::uint64_t seed) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ValidationError("occupancy: T must be positive");
    const GeneratorMatrix gen = generator(model, x_frozen);
    const int k = model.states();
    constexpr int kBatches = 100;

    OccupancyResult out;
    out.rho = k == 1 ? Eigen::VectorXd::Ones(1) : invariant_measure(gen);
    const double inv_eps = 1.0 / model.epsilon();
    Eigen::VectorXd total(k);
    for (int n = 0; n < k; ++n) total[n] = -gen.a(n, n) * inv_eps;
    out.expected_jumps = t_end * out.rho.dot(total);
    if (out.expected_jumps < 1e4) {
        out.warning = "expected number of jumps " + std::to_string(out.expected_jumps) +
                      " is below 1e4; occupancy estimates are unreliable";
    }

    RandomStream clock(seed, 0, StreamPurpose::jumps);
    RandomStream dest(seed, 0, StreamPurpose::destinations);
    Eigen::MatrixXd batch_time = Eigen::MatrixXd::Zero(kBatches, k);
    const double batch_len = t_end / kBatches;

    // Start from rho so the initial transient does not bias short runs.
    int n = 0;
    {
        const double u = dest.uniform();
        double acc = 0.0;
        for (n = 0; n < k - 1; ++n) {
            acc += out.rho[n];
            if (u < acc) break;
        }
    }
    double t = 0.0;
    while (t < t_end) {
        const double hold = total[n] > 0.0 ? clock.exponential() / total[n] : std::numeric_limits<double>::infinity();
        const double stop = std::min(t_end, t + hold);
        // Spread [t, stop) over the batches it overlaps.
        double s = t;
        while (s < stop) {
            const int b = std::min(kBatches - 1, static_cast<int>(s / batch_len));
            const double edge = b == kBatches - 1 ? t_end : (b + 1) * batch_len;
            const double e = std::min(stop, edge);
            batch_time(b, n) += e - s;
            if (e <= s) break;
            s = e;
        }
        t = stop;
        if (t >= t_end) break;
        // Destination in proportion to the generator row.
        const double u = dest.uniform() * total[n] * model.epsilon();
        double acc = 0.0;
        int m = -1;
        for (int j = 0; j < k; ++j) {
            if (j == n) continue;
            acc += gen.a(n, j);
            if (u < acc) {
                m = j;
                break;
            }
        }
        if (m < 0) {
            for (int j = k - 1; j >= 0; --j) {
                if (j != n && gen.a(n, j) > 0.0) {
                    m = j;
                    break;
                }
            }
        }
        n = m;
        ++out.jumps;
    }

    Eigen::MatrixXd frac(kBatches, k);
    for (int b = 0; b < kBatches; ++b) frac.row(b) = batch_time.row(b) / batch_time.row(b).sum();
    out.empirical = batch_time.colwise().sum().transpose() / batch_time.sum();
    out.stderr_.resize(k);
    for (int j = 0; j < k; ++j) {
        const double mean = frac.col(j).mean();
        const double var = (frac.col(j).array() - mean).square().sum() / (kBatches - 1);
        out.stderr_[j] = std::sqrt(var / kBatches);
    }
    return out;
}

FptEnsemble first_passage_ensemble(const HybridModel& model, double x_start, const Eigen::VectorXd& n_dist,
                                   double x_abs, double t_max, int n_rep, std::uint64_t seed,
                                   const FptOptions& opts) {
    if (!(x_start < x_abs)) throw ValidationError("first_passage_ensemble: x_start must lie below x_abs");
    if (n_rep < 1) throw ValidationError("first_passage_ensemble: need at least one replica");
    if (n_dist.size() != model.states() || (n_dist.array() < 0.0).any() || !(n_dist.sum() > 0.0)) {
        throw ValidationError("first_passage_ensemble: initial state distribution must be non-negative with K entries");
    }
    const Eigen::VectorXd dist = n_dist / n_dist.sum();

    FptEnsemble out;
    out.tau.assign(n_rep, std::numeric_limits<double>::quiet_NaN());
    std::vector<Termination> why(n_rep, Termination::reached_end);

    auto run = [&](int r) {
        RandomStream init(seed, static_cast<std::uint64_t>(r), StreamPurpose::initial);
        const double u = init.uniform();
        double acc = 0.0;
        int n0 = 0;
        for (; n0 < model.states() - 1; ++n0) {
            acc += dist[n0];
            if (u < acc) break;
        }
        SimOptions so;
        so.record = false;
        so.absorb_at = x_abs;
        so.replica = static_cast<std::uint64_t>(r);
        const Trajectory tr = simulate(model, x_start, n0, t_max, seed, opts.dt, so);
        why[r] = tr.termination;
        if (tr.termination == Termination::absorbed) out.tau[r] = tr.t_end;
    };

    unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(n_rep));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (int r; (r = next.fetch_add(1)) < n_rep;) {
            try {
                run(r);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_rep);
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    double sum = 0.0;
    for (int r = 0; r < n_rep; ++r) {
        switch (why[r]) {
            case Termination::absorbed:
                ++out.absorbed;
                sum += out.tau[r];
                break;
            case Termination::reached_end:
                ++out.timeouts;
                break;
            case Termination::left_domain:
                ++out.left_domain;
                break;
        }
    }
    if (out.absorbed == 0) throw NumericError("first_passage_ensemble: no replica reached x_abs before T_max");
    out.mean = sum / out.absorbed;
    if (out.absorbed > 1) {
        double ss = 0.0;
        for (double tau : out.tau) {
            if (!std::isnan(tau)) ss += (tau - out.mean) * (tau - out.mean);
        }
        const double sd = std::sqrt(ss / (out.absorbed - 1));
        out.stderr_ = sd / std::sqrt(static_cast<double>(out.absorbed));
        out.cv = sd / out.mean;
    }
    return out;
}

}  // namespace pdmp
