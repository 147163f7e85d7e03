#include "pdmp/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pdmp {

namespace {

using nlohmann::json;

class Reader {
public:
    explicit Reader(std::string origin) : origin_(std::move(origin)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ValidationError(origin_ + ": " + key + ": " + msg);
    }

    double number(const json& j, const std::string& key) const {
        if (!j.is_number()) fail(key, "expected a number");
        const double v = j.get<double>();
        if (!std::isfinite(v)) fail(key, "expected a finite number");
        return v;
    }

    Expr expression(const json& j, const std::string& key) const {
        if (j.is_number()) {
            // Bare numbers are accepted as constant expressions.
            std::ostringstream os;
            os.precision(17);
            os << j.get<double>();
            return parse(os.str());
        }
        if (!j.is_string()) fail(key, "expected an expression string");
        const auto src = j.get<std::string>();
        try {
            return parse(src);
        } catch (const ParseError& e) {
            fail(key, "offset " + std::to_string(e.offset()) + ": " + e.message() + " in \"" + src + "\"");
        }
    }

    void check_names(const Expr& e, const ParamMap& params, const std::string& key) const {
        for (const auto& name : e.variables()) {
            if (name != "x" && params.find(name) == params.end()) fail(key, "undeclared parameter '" + name + "'");
        }
    }

private:
    std::string origin_;
};

std::pair<int, int> parse_rate_key(const std::string& key, const Reader& r) {
    const auto comma = key.find(',');
    if (comma == std::string::npos) r.fail("rates[\"" + key + "\"]", "key must look like \"n,m\"");
    try {
        std::size_t used_a = 0;
        std::size_t used_b = 0;
        const std::string a = key.substr(0, comma);
        const std::string b = key.substr(comma + 1);
        const int from = std::stoi(a, &used_a);
        const int to = std::stoi(b, &used_b);
        if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument(key);
        return {from, to};
    } catch (const std::logic_error&) {
        r.fail("rates[\"" + key + "\"]", "key must look like \"n,m\" with integer state indices");
    }
}

void expand_ion_channel(const json& block, ModelDefinition& def, const Reader& r) {
    if (!block.is_object()) r.fail("ion_channel", "expected an object");
    for (const char* k : {"channels", "alpha", "beta", "f", "g"}) {
        if (!block.contains(k)) r.fail(std::string("ion_channel.") + k, "missing");
    }
    if (!block["channels"].is_string()) r.fail("ion_channel.channels", "expected the name of a parameter");
    IonChannelDefinition ic;
    ic.channels_param = block["channels"].get<std::string>();
    const auto it = def.params.find(ic.channels_param);
    if (it == def.params.end()) r.fail("ion_channel.channels", "undeclared parameter '" + ic.channels_param + "'");
    const double nd = it->second;
    if (!(nd >= 1.0 && nd <= 100000.0 && std::floor(nd) == nd)) {
        r.fail("params." + ic.channels_param, "channel count must be a positive integer");
    }
    const int n_channels = static_cast<int>(nd);
    ic.alpha = r.expression(block["alpha"], "ion_channel.alpha");
    ic.beta = r.expression(block["beta"], "ion_channel.beta");
    ic.f = r.expression(block["f"], "ion_channel.f");
    ic.g = r.expression(block["g"], "ion_channel.g");
    r.check_names(ic.alpha, def.params, "ion_channel.alpha");
    r.check_names(ic.beta, def.params, "ion_channel.beta");
    r.check_names(ic.f, def.params, "ion_channel.f");
    r.check_names(ic.g, def.params, "ion_channel.g");

    const std::string& nn = ic.channels_param;
    def.states = n_channels + 1;
    def.drift.clear();
    def.rates.clear();
    for (int n = 0; n <= n_channels; ++n) {
        const std::string ns = std::to_string(n);
        def.drift.push_back(parse("(" + ns + "/" + nn + ")*(" + ic.f.source() + ")-(" + ic.g.source() + ")"));
        if (n < n_channels) def.rates[{n, n + 1}] = parse("(" + nn + "-" + ns + ")*(" + ic.alpha.source() + ")");
        if (n > 0) def.rates[{n, n - 1}] = parse(ns + "*(" + ic.beta.source() + ")");
    }
    def.ion_channel = std::move(ic);
}

}  // namespace

ModelDefinition parse_model_definition(std::string_view text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ValidationError(origin + ": malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    const Reader r(origin);
    if (!doc.is_object()) r.fail("<root>", "expected a JSON object");

    ModelDefinition def;
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) r.fail("name", "expected a string");
        def.name = doc["name"].get<std::string>();
    }

    if (!doc.contains("domain")) r.fail("domain", "missing");
    const json& dom = doc["domain"];
    if (!dom.is_array() || dom.size() != 2) r.fail("domain", "expected [a, b]");
    def.domain.lower = r.number(dom[0], "domain[0]");
    def.domain.upper = r.number(dom[1], "domain[1]");
    if (!(def.domain.lower < def.domain.upper)) r.fail("domain", "need a < b");

    if (!doc.contains("epsilon")) r.fail("epsilon", "missing");
    def.epsilon = r.number(doc["epsilon"], "epsilon");
    if (!(def.epsilon > 0.0)) r.fail("epsilon", "must be positive");

    if (doc.contains("params")) {
        if (!doc["params"].is_object()) r.fail("params", "expected an object of named numbers");
        for (const auto& [name, value] : doc["params"].items()) {
            if (name == "x") r.fail("params.x", "'x' is reserved for the continuous state");
            try {
                (void)parse(name);
            } catch (const ParseError&) {
                r.fail("params." + name, "not a valid identifier");
            }
            if (parse(name).root().kind != ExprNode::Kind::variable) r.fail("params." + name, "not a valid identifier");
            def.params[name] = r.number(value, "params." + name);
        }
    }

    if (doc.contains("ion_channel")) {
        if (doc.contains("drift") || doc.contains("rates") || doc.contains("states")) {
            r.fail("ion_channel", "cannot be combined with states/drift/rates");
        }
        expand_ion_channel(doc["ion_channel"], def, r);
    } else {
        if (!doc.contains("states")) r.fail("states", "missing");
        if (!doc["states"].is_number_integer() || doc["states"].get<long long>() < 1 ||
            doc["states"].get<long long>() > 100000) {
            r.fail("states", "expected a positive integer");
        }
        def.states = static_cast<int>(doc["states"].get<long long>());

        if (!doc.contains("drift")) r.fail("drift", "missing");
        const json& drift = doc["drift"];
        if (!drift.is_array() || static_cast<int>(drift.size()) != def.states) {
            r.fail("drift", "expected an array of " + std::to_string(def.states) + " expressions");
        }
        for (std::size_t n = 0; n < drift.size(); ++n) {
            const std::string key = "drift[" + std::to_string(n + 1) + "]";
            def.drift.push_back(r.expression(drift[n], key));
            r.check_names(def.drift.back(), def.params, key);
        }

        if (doc.contains("rates")) {
            const json& rates = doc["rates"];
            if (!rates.is_object()) r.fail("rates", "expected an object mapping \"n,m\" to expressions");
            for (const auto& [key, value] : rates.items()) {
                const auto [from, to] = parse_rate_key(key, r);
                const std::string where = "rates[\"" + key + "\"]";
                if (from < 1 || from > def.states || to < 1 || to > def.states) r.fail(where, "state index out of range");
                if (from == to) r.fail(where, "diagonal entries are implied by the row sums");
                Expr e = r.expression(value, where);
                r.check_names(e, def.params, where);
                def.rates[{from - 1, to - 1}] = std::move(e);
            }
        }
    }

    if (doc.contains("sigma")) {
        const json& sigma = doc["sigma"];
        if (!sigma.is_array() || static_cast<int>(sigma.size()) != def.states) {
            r.fail("sigma", "expected an array of " + std::to_string(def.states) + " expressions");
        }
        std::vector<Expr> s;
        for (std::size_t n = 0; n < sigma.size(); ++n) {
            const std::string key = "sigma[" + std::to_string(n + 1) + "]";
            s.push_back(r.expression(sigma[n], key));
            r.check_names(s.back(), def.params, key);
        }
        def.sigma = std::move(s);
    }
    return def;
}

HybridModel load_model_json(std::string_view json_text, const std::string& origin) {
    return HybridModel(parse_model_definition(json_text, origin));
}

HybridModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("error reading config file '" + path + "'");
    return load_model_json(buf.str(), path);
}

}  // namespace pdmp
