#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <imexl1.hpp>

using namespace imexl1;
namespace fs = std::filesystem;

namespace {

enum Exit { Ok = 0, Usage = 1, Numerical = 2, Hypothesis = 3 };

// thrown by commands to select the exit status
struct ExitWith {
    int code;
};

std::string num(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%g", v);
    return b;
}

std::string sci(double v) {
    if (std::isinf(v)) return "unbounded";
    char b[32];
    std::snprintf(b, sizeof b, "%.3e", v);
    return b;
}

fs::path out_file(const RunConfig& c, const std::string& name) {
    fs::create_directories(c.output_dir);
    return fs::path(c.output_dir) / name;
}

// Checks the step condition; under enforce a violation ends the command with status 3.
StepBounds check_steps(const RunConfig& c, const ProblemSpec& p, double alpha, int N) {
    const GradedTimeGrid g = build_graded_grid(N, gamma_for(c, alpha), p.T);
    const StepBounds sb = step_condition(p, g, alpha, c.epsilon, c.delta);
    if (!sb.satisfied) {
        std::cerr << (c.step_policy == StepPolicy::Enforce ? "error" : "warning") << ": alpha=" << num(alpha)
                  << " N=" << N << ": max dt " << sci(sb.max_dt) << " exceeds the step bound " << sci(sb.dt_tilde)
                  << "\n";
        if (c.step_policy == StepPolicy::Enforce) throw ExitWith{Hypothesis};
    }
    return sb;
}

int cmd_convergence(const RunConfig& c) {
    const StudyOptions opt = study_options(c);
    for (double alpha : c.alphas) {
        const ProblemSpec p = catalog(c.example, alpha);
        std::vector<RunReport> rs;
        for (int N : c.N_ladder) {
            check_steps(c, p, alpha, N);
            rs.push_back(study_run(p, alpha, N, opt).report);
            std::cerr << "  alpha=" << num(alpha) << " N=" << N << " E_u=" << sci(rs.back().E_u) << "\n";
        }
        rs = reports_with_rates(rs);
        const fs::path f = out_file(c, to_string(c.example) + "_alpha" + num(alpha) + ".csv");
        std::ofstream os(f);
        write_csv(os, rs);
        if (!os) throw Error("cannot write " + f.string());
        write_csv(std::cout, rs);
        std::cout << "wrote " << f.string() << "\n";
    }
    return Ok;
}

int cmd_verify(const std::string& suite, const RunConfig& c, std::optional<double> alpha) {
    VerifyOptions o;
    o.seed = c.seed;
    o.alpha = alpha;
    const auto rs = verify_suite(suite, o);
    print_results(std::cout, rs);
    return all_pass(rs) ? Ok : Numerical;
}

void summary(const StabilityReport& r) {
    std::cout << "  " << r.quantity << ": " << (r.all_pass() ? "pass" : "FAIL") << "  worst norm/bound "
              << sci(r.worst_ratio()) << "  step limit " << sci(r.step_limit)
              << (r.hypothesis_ok ? "" : "  (hypothesis violated, bound advisory)") << "\n";
}

int cmd_stability(const RunConfig& c) {
    int status = Ok;
    SolverConfig cfg;
    cfg.linear_solver = c.linear_solver;
    cfg.epsilon = c.epsilon;
    cfg.delta = c.delta;
    for (double alpha : c.alphas) {
        const ProblemSpec p = catalog(c.example, alpha);
        for (int N : c.N_ladder) {
            const StepBounds sb = check_steps(c, p, alpha, N);
            const GradedTimeGrid g = build_graded_grid(N, gamma_for(c, alpha), p.T);
            const KernelTable k(g, alpha);
            const MixedSpace S = build_space(coupled_mesh(p, N, alpha), c.element_order);
            const StateHistory h = run(p, S, g, k, cfg);
            const StabilityReport ru = stability_bound_u(h, p, k, c.epsilon, c.delta);
            const StabilityReport rf = stability_bound_flux(h, p, k, c.epsilon, c.delta);
            const std::string stem = to_string(c.example) + "_alpha" + num(alpha) + "_N" + std::to_string(N);
            for (const auto* r : {&ru, &rf}) {
                std::ofstream os(out_file(c, stem + "_stability_" + r->quantity + ".csv"));
                write_stability_csv(os, *r);
                if (!os) throw Error("cannot write stability CSV");
            }
            std::cout << to_string(c.example) << " alpha=" << num(alpha) << " N=" << N
                      << "  dt_tilde=" << sci(sb.dt_tilde_tables) << "  max dt=" << sci(sb.max_dt)
                      << (sb.satisfied ? "  (satisfied)" : "  (NOT satisfied)") << "\n";
            summary(ru);
            summary(rf);
            for (const auto* r : {&ru, &rf}) {
                if (!r->hypothesis_ok && c.step_policy == StepPolicy::Enforce) status = std::max(status, int(Hypothesis));
                else if (r->hypothesis_ok && !r->all_pass()) status = std::max(status, int(Numerical));
            }
        }
    }
    return status;
}

int cmd_list() {
    for (ExampleId id : all_examples()) {
        const ProblemSpec p = catalog(id, 0.5);
        std::cout << to_string(id) << "  T=" << num(p.T) << "  " << (p.exact ? "exact" : "reference")
                  << (p.has_integral() ? "  integral" : "") << "\n    " << p.description << "\n";
    }
    return Ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"L1 mixed finite element solver for time-fractional PIDEs"};
    app.require_subcommand(1);

    std::string config_file;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;
    app.add_option("--config", config_file, "key=value configuration file")->check(CLI::ExistingFile);
    app.add_option("--set", sets, "override, key=value (repeatable)");
    // one flag per RunConfig key
    for (const std::string& key : config_keys()) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        app.add_option_function<std::string>(
            flag, [&flags, key](const std::string& v) { flags[key] = v; }, "config key " + key);
    }

    auto* conv = app.add_subcommand("convergence", "convergence table, one CSV per alpha");
    auto* ver = app.add_subcommand("verify", "kernel, Gronwall and finite element property suites");
    std::string suite = "all";
    std::optional<double> valpha;
    ver->add_option("suite", suite, "kernels | gronwall | fem | all");
    ver->add_option("--alpha-fixed", valpha, "fix alpha in the suites instead of drawing it");
    auto* stab = app.add_subcommand("stability", "stability monitors and step bounds");
    auto* list = app.add_subcommand("list-problems", "list the example catalog");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? Ok : Usage;
    }

    RunConfig c;
    try {
        if (!config_file.empty()) c = load_config_file(config_file);
        for (const auto& [k, v] : flags) set_config_value(c, k, v);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
            set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
        }
        validate(c);
        if (*ver && suite != "kernels" && suite != "gronwall" && suite != "fem" && suite != "all")
            throw ConfigError("unknown suite '" + suite + "' (kernels, gronwall, fem, all)");
    } catch (const Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return Usage;
    }

    try {
        if (*conv) return cmd_convergence(c);
        if (*ver) return cmd_verify(suite, c, valpha);
        if (*stab) return cmd_stability(c);
        if (*list) return cmd_list();
    } catch (const ExitWith& e) {
        return e.code;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Usage;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return Numerical;
    }
    return Ok;
}
