#pragma once

// Small model builders shared by the unit tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "pdmp/config.hpp"
#include "pdmp/model.hpp"

namespace test {

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline pdmp::HybridModel from_json(const std::string& json) { return pdmp::load_model_json(json, "<test>"); }

/// Two-state model with expression rates and drifts.
inline pdmp::HybridModel binary(const std::string& wp, const std::string& wm, const std::string& f0,
                                const std::string& f1, double lo = -1.0, double hi = 1.0, double eps = 1.0,
                                const std::string& extra = "") {
    return from_json(R"({"states": 2, "domain": [)" + num(lo) + "," + num(hi) + R"(], "epsilon": )" + num(eps) +
                     R"(, "drift": [")" + f0 + R"(", ")" + f1 + R"("], "rates": {"1,2": ")" + wp + R"(", "2,1": ")" +
                     wm + "\"}" + extra + "}");
}

/// Birth-death ion channel model with N channels.
inline pdmp::HybridModel ion(int n, const std::string& alpha, const std::string& beta, const std::string& f,
                             const std::string& g, double lo = -1.0, double hi = 1.0) {
    return from_json(R"({"domain": [)" + num(lo) + "," + num(hi) + R"(], "epsilon": 1, "params": {"N": )" +
                     std::to_string(n) + R"(}, "ion_channel": {"channels": "N", "alpha": ")" + alpha +
                     R"(", "beta": ")" + beta + R"(", "f": ")" + f + R"(", "g": ")" + g + "\"}}");
}

inline pdmp::HybridModel builtin(const std::string& name) {
    return pdmp::load_model_json(pdmp::builtin_model_json(name), name);
}

/// Random irreducible model on [-1, 1]: K states in a ring plus random extra
/// edges, rates c*exp(b*x), drifts a + b*x.
inline pdmp::HybridModel random_model(std::mt19937_64& rng, int k) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_real_distribution<double> scale(0.2, 3.0);
    std::bernoulli_distribution extra(0.4);
    std::ostringstream js;
    js.precision(17);
    js << R"({"states": )" << k << R"(, "domain": [-1, 1], "epsilon": 0.1, "drift": [)";
    for (int n = 0; n < k; ++n) js << (n ? "," : "") << '"' << 2.0 * coef(rng) << " + " << coef(rng) << "*x\"";
    js << R"(], "rates": {)";
    bool first = true;
    for (int n = 0; n < k; ++n) {
        for (int m = 0; m < k; ++m) {
            if (n == m) continue;
            if (m != (n + 1) % k && !extra(rng)) continue;
            js << (first ? "" : ",") << '"' << n + 1 << ',' << m + 1 << R"(": ")" << scale(rng) << "*exp("
               << coef(rng) << "*x)\"";
            first = false;
        }
    }
    js << "}}";
    return from_json(js.str());
}

}  // namespace test
