#include "pdmp/analytic.hpp"

#include <cmath>

namespace pdmp::analytic {

namespace {

struct BinaryValues {
    double wp, wm, f0, f1;
};

BinaryValues binary_at(const BinaryParams& bp, double x) {
    return {eval(bp.omega_plus, x, bp.params), eval(bp.omega_minus, x, bp.params), eval(bp.f0, x, bp.params),
            eval(bp.f1, x, bp.params)};
}

struct ChannelValues {
    double n, alpha, beta, f, g;
};

ChannelValues channel_at(const IonChannelParams& ip, double x) {
    return {static_cast<double>(ip.channels), eval(ip.alpha, x, ip.params), eval(ip.beta, x, ip.params),
            eval(ip.f, x, ip.params), eval(ip.g, x, ip.params)};
}

}  // namespace

BinaryParams binary_params(const HybridModel& model) {
    const ModelDefinition& def = model.definition();
    if (def.states != 2) throw ValidationError("binary oracle needs a two-state model");
    const auto up = def.rates.find({0, 1});
    const auto down = def.rates.find({1, 0});
    if (up == def.rates.end() || down == def.rates.end()) {
        throw ValidationError("binary oracle needs both rates \"1,2\" and \"2,1\"");
    }
    return {up->second, down->second, def.drift[0], def.drift[1], def.params};
}

IonChannelParams ion_channel_params(const HybridModel& model) {
    const ModelDefinition& def = model.definition();
    if (!def.ion_channel) throw ValidationError("ion channel oracle needs a model built from an ion_channel block");
    const IonChannelDefinition& ic = *def.ion_channel;
    return {def.states - 1, ic.alpha, ic.beta, ic.f, ic.g, def.params};
}

double binary_lambda(const BinaryParams& bp, double x, double p) {
    const auto [wp, wm, f0, f1] = binary_at(bp, x);
    const double sigma = p * (f0 + f1) - (wp + wm);
    const double gamma = (p * f1 - wm) * (p * f0 - wp) - wm * wp;
    return 0.5 * (sigma + std::sqrt(sigma * sigma - 4.0 * gamma));
}

std::pair<double, double> binary_psi(const BinaryParams& bp, double x, double p) {
    const auto [wp, wm, f0, f1] = binary_at(bp, x);
    const double u = p * (f0 - f1) - (wp - wm);
    const double d = u * u + 4.0 * wp * wm;  // equals Sigma^2 - 4 gamma
    const double ratio = u / std::sqrt(d);
    return {0.5 * (1.0 + ratio), 0.5 * (1.0 - ratio)};
}

double binary_zero_energy_momentum(const BinaryParams& bp, double x) {
    const auto [wp, wm, f0, f1] = binary_at(bp, x);
    return wp / f0 + wm / f1;
}

double ionchannel_lambda(const IonChannelParams& ip, double x, double p) {
    const auto [n, alpha, beta, f, g] = channel_at(ip, x);
    const double s = p * (2.0 * g - f) + n * (alpha + beta);
    const double h = p * (-n * beta * g + (n * alpha + p * g) * (f - g));
    const double disc = s * s + 4.0 * h;
    if (disc < 0.0) throw NumericError("ionchannel_lambda: negative discriminant");
    return 0.5 * (-s + std::sqrt(disc));
}

double ionchannel_phi_prime(const IonChannelParams& ip, double x) {
    const auto [n, alpha, beta, f, g] = channel_at(ip, x);
    const double denom = g * (f - g);
    if (denom == 0.0) throw NumericError("ionchannel_phi_prime: g (f - g) vanishes");
    return -n * (alpha * f - (alpha + beta) * g) / denom;
}

double ionchannel_gamma(const IonChannelParams& ip, double x, double p) {
    const ChannelValues c = channel_at(ip, x);
    const double alpha = c.alpha, beta = c.beta;
    // beta G^2 + (beta - alpha - p f / N) G - alpha = 0, positive root.
    const double b = beta - alpha - p * c.f / c.n;
    const double disc = b * b + 4.0 * alpha * beta;
    // Rationalized form avoids cancellation when b > 0.
    return b > 0.0 ? 2.0 * alpha / (b + std::sqrt(disc)) : (-b + std::sqrt(disc)) / (2.0 * beta);
}

std::vector<double> ionchannel_left_vector(const IonChannelParams& ip, double x, double p) {
    const double gamma = ionchannel_gamma(ip, x, p);
    const int nc = ip.channels;
    std::vector<double> z(nc + 1);
    for (int k = 0; k <= nc; ++k) {
        // Gamma^k / ((N-k)! k!) in log space to stay finite for large N.
        const double log_z = k * std::log(gamma) - std::lgamma(nc - k + 1.0) - std::lgamma(k + 1.0);
        z[k] = std::exp(log_z);
    }
    return z;
}

std::vector<double> ionchannel_invariant_measure(const IonChannelParams& ip, double x) {
    const ChannelValues c = channel_at(ip, x);
    const double a = c.alpha / (c.alpha + c.beta);
    const double b = c.beta / (c.alpha + c.beta);
    const int nc = ip.channels;
    std::vector<double> rho(nc + 1);
    for (int k = 0; k <= nc; ++k) {
        const double log_c = std::lgamma(nc + 1.0) - std::lgamma(k + 1.0) - std::lgamma(nc - k + 1.0);
        rho[k] = std::exp(log_c + k * std::log(a) + (nc - k) * std::log(b));
    }
    return rho;
}

double appendix_a_lambda(double q1, double q2) {
    const double q = q1 - q2;
    return 0.5 * (q1 + q2) + 7.0 / 12.0 + 0.5 * std::sqrt(q * q - q / 3.0 + 25.0 / 36.0);
}

double appendix_a_f(double q) { return 0.25 * (2.0 * q - 1.0 / 3.0) / std::sqrt(q * q - q / 3.0 + 25.0 / 36.0); }

std::pair<double, double> appendix_a_psi(double q1, double q2) {
    const double f = appendix_a_f(q1 - q2);
    return {0.5 + f, 0.5 - f};
}

}  // namespace pdmp::analytic
