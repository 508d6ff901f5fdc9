#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "harness.hpp"
#include "problems.hpp"
#include "solver.hpp"

namespace imexl1 {

/// Flat run configuration: key=value lines, '#' comments, command-line overrides on top.
struct RunConfig {
    ExampleId example = ExampleId::Ex7_1;
    std::vector<double> alphas{0.5};
    std::vector<int> N_ladder{4, 8, 16, 32, 64};
    std::optional<double> gamma;  // empty: "paper", (2 - alpha)/alpha + 0.1
    int element_order = 1;
    double epsilon = 0.1, delta = 1.1;
    std::optional<TimeWeight> flux_weight;  // empty: "auto", from the problem
    StepPolicy step_policy = StepPolicy::Warn;
    std::string output_dir = ".";
    unsigned seed = 12345;
    LinearSolver linear_solver = LinearSolver::Direct;
    bool allow_large = false;  // N > 512
};

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> k{"example", "alphas",      "N_ladder",   "gamma",
                                            "element_order", "epsilon", "delta", "flux_weight",
                                            "step_policy", "output_dir", "seed", "linear_solver",
                                            "allow_large"};
    return k;
}

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(std::string s) {
    for (char& c : s)
        if (c == '[' || c == ']' || c == ';') c = ' ';
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

inline double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + v + "' is not a number");
    }
}

inline long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long i = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + v + "' is not an integer");
    }
}

inline bool to_bool(const std::string& key, std::string v) {
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

inline std::string keys_list() {
    std::string s;
    for (const auto& k : config_keys()) s += (s.empty() ? "" : ", ") + k;
    return s;
}

}  // namespace detail

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& raw) {
    const std::string v = detail::trim(raw);
    if (key == "example") {
        try {
            c.example = parse_example(v);
        } catch (const CatalogError& e) {
            throw ConfigError(e.what());
        }
    } else if (key == "alphas" || key == "alpha") {
        c.alphas.clear();
        for (const auto& w : detail::split_list(v)) c.alphas.push_back(detail::to_real(key, w));
    } else if (key == "N_ladder" || key == "N") {
        c.N_ladder.clear();
        for (const auto& w : detail::split_list(v)) c.N_ladder.push_back(static_cast<int>(detail::to_int(key, w)));
    } else if (key == "gamma") {
        if (v == "paper") c.gamma.reset();
        else c.gamma = detail::to_real(key, v);
    } else if (key == "element_order") {
        c.element_order = static_cast<int>(detail::to_int(key, v));
    } else if (key == "epsilon") {
        c.epsilon = detail::to_real(key, v);
    } else if (key == "delta") {
        c.delta = detail::to_real(key, v);
    } else if (key == "flux_weight") {
        if (v == "auto") c.flux_weight.reset();
        else try {
                c.flux_weight = parse_time_weight(v);
            } catch (const InputError& e) {
                throw ConfigError(std::string("flux_weight: ") + e.what());
            }
    } else if (key == "step_policy") {
        if (v == "warn") c.step_policy = StepPolicy::Warn;
        else if (v == "enforce") c.step_policy = StepPolicy::Enforce;
        else throw ConfigError("step_policy: expected warn or enforce, got '" + v + "'");
    } else if (key == "output_dir") {
        c.output_dir = v;
    } else if (key == "seed") {
        const long s = detail::to_int(key, v);
        if (s < 0) throw ConfigError("seed must be nonnegative");
        c.seed = static_cast<unsigned>(s);
    } else if (key == "linear_solver") {
        if (v == "direct") c.linear_solver = LinearSolver::Direct;
        else if (v == "iterative") c.linear_solver = LinearSolver::Iterative;
        else throw ConfigError("linear_solver: expected direct or iterative, got '" + v + "'");
    } else if (key == "allow_large") {
        c.allow_large = detail::to_bool(key, v);
    } else {
        throw ConfigError("unknown config key '" + key + "'; valid keys: " + detail::keys_list());
    }
}

inline void validate(const RunConfig& c) {
    if (c.alphas.empty()) throw ConfigError("alphas is empty");
    for (double a : c.alphas)
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha " + std::to_string(a) + " outside (0,1)");
    if (c.N_ladder.empty()) throw ConfigError("N_ladder is empty");
    for (std::size_t i = 0; i < c.N_ladder.size(); ++i) {
        if (c.N_ladder[i] < 1) throw ConfigError("N_ladder entries must be >= 1");
        if (i > 0 && c.N_ladder[i] <= c.N_ladder[i - 1]) throw ConfigError("N_ladder must be strictly increasing");
        if (c.N_ladder[i] > 512 && !c.allow_large)
            throw ConfigError("N = " + std::to_string(c.N_ladder[i]) + " > 512 needs allow_large");
    }
    if (c.gamma && !(*c.gamma >= 1.0)) throw ConfigError("gamma must be >= 1 or 'paper'");
    if (c.element_order != 0 && c.element_order != 1) throw ConfigError("element_order must be 0 or 1");
    if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    if (!(c.delta > 1.0)) throw ConfigError("delta must be > 1");
}

/// Parses key=value lines on top of `base`. Does not validate.
inline RunConfig parse_config(std::istream& is, RunConfig base = {}) {
    std::string line;
    int no = 0;
    while (std::getline(is, line)) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(no) + ": expected key=value");
        set_config_value(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return base;
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(f, base);
}

inline double gamma_for(const RunConfig& c, double alpha) { return c.gamma ? *c.gamma : paper_gamma(alpha); }

inline StudyOptions study_options(const RunConfig& c) {
    StudyOptions o;
    o.order = c.element_order;
    o.gamma = c.gamma;
    o.epsilon = c.epsilon;
    o.delta = c.delta;
    o.solver.linear_solver = c.linear_solver;
    o.solver.step_policy = StepPolicy::Warn;  // the CLI checks the condition itself
    o.errors.seed = c.seed;
    if (c.flux_weight) {
        o.weights_from_problem = false;
        o.weights = ErrorWeights::standard();
        o.weights.sigma = *c.flux_weight;
        o.weights.inf = *c.flux_weight;
    }
    return o;
}

}  // namespace imexl1
