// Acceptance criteria 1..11; `acceptance N` runs one, no argument runs all.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <imexl1.hpp>

using namespace imexl1;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string g(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

std::string failed_names(const std::vector<PropertyResult>& rs) {
    std::string s;
    for (const auto& r : rs)
        if (!r.pass) s += " [" + r.name + " worst=" + g(r.worst) + "]";
    return s;
}

// Suite run with a time limit; `names` restricts which properties count (empty: all).
Outcome suite(const std::string& name, double limit_s, const VerifyOptions& o = {},
              const std::vector<std::string>& names = {}) {
    const auto t0 = Clock::now();
    std::vector<PropertyResult> rs = verify_suite(name, o);
    const double el = seconds_since(t0);
    if (!names.empty()) {
        std::vector<PropertyResult> keep;
        for (const auto& r : rs)
            for (const auto& n : names)
                if (r.name == n) keep.push_back(r);
        rs = keep;
    }
    print_results(std::cout, rs);
    const bool ok = !rs.empty() && all_pass(rs) && el < limit_s;
    return {ok, std::to_string(rs.size()) + " properties, " + g(el) + " s (limit " + g(limit_s) + " s)" + failed_names(rs)};
}

const std::vector<std::string> kernel_props{"sum_j P^{n,j} K^{j,i} = 1", "0 <= P^{n,j} <= Gamma(2-a) dt_j^a",
                                            "K^{n,j-1} <= K^{n,j}, no reversals",
                                            "uniform P^{n,n}/P^{n,n-1} = 1/(2-2^{1-a})"};
const std::vector<std::string> l1_props{"L1 exact on phi(t) = t", "L1 order on phi(t) = t^2"};
const std::vector<std::string> dfgi_props{"saturated recurrence v^n <= bound^n"};
const std::vector<std::string> lemma_props{"1/2 D^a |phi|^2 <= (D^a phi, phi)", "B-weighted form with the L_B term"};

Outcome c1(const VerifyOptions& o = {}) { return suite("kernels", 30, o, kernel_props); }
Outcome c2(const VerifyOptions& o = {}) { return suite("kernels", 10, o, l1_props); }
Outcome c3(const VerifyOptions& o = {}) { return suite("gronwall", 60, o, dfgi_props); }
Outcome c4(const VerifyOptions& o = {}) { return suite("gronwall", 60, o, lemma_props); }
Outcome c5(const VerifyOptions& o = {}) { return suite("fem", 60, o); }

Outcome c6() {
    const auto t0 = Clock::now();
    const double alphas[] = {0.2, 0.5, 0.8, 0.99};
    const double table[] = {8.859e-01, 1.052e+00, 9.877e-01, 9.135e-01};
    bool ok = true;
    std::ostringstream d;
    for (int i = 0; i < 4; ++i) {
        const ProblemSpec p = catalog(ExampleId::Ex7_2, alphas[i]);
        const StepBounds sb = step_condition(p, build_graded_grid(64, paper_gamma(alphas[i]), p.T), alphas[i], 0.1, 1.1);
        const double rel = std::fabs(sb.dt_tilde_tables / table[i] - 1.0);
        std::cout << "  alpha=" << alphas[i] << "  dt_tilde=" << g(sb.dt_tilde_tables) << "  table=" << g(table[i])
                  << "  rel=" << g(rel) << "\n";
        ok = ok && rel <= 0.05;
        d << g(sb.dt_tilde_tables) << " ";
    }
    const double el = seconds_since(t0);
    ok = ok && el < 30;
    d << "in " << g(el) << " s";
    return {ok, d.str()};
}

Outcome c7() {
    const double alpha = 0.5;
    const ProblemSpec p = catalog(ExampleId::Ex7_1, alpha);
    StudyOptions o;
    o.gamma = 3.1;
    std::vector<RunReport> rs;
    for (int N : {4, 8, 16, 32, 64}) rs.push_back(study_run(p, alpha, N, o).report);
    rs = reports_with_rates(rs);
    std::ostringstream os;
    write_csv(os, rs);
    std::cout << os.str();
    const double table[] = {1.71, 1.46, 1.46, 1.68};
    bool cols = true;
    std::string d = "R_udt";
    for (int i = 1; i < 5; ++i) {
        d += " " + g(rs[i].R_udt);
        cols = cols && std::fabs(rs[i].R_udt - table[i - 1]) <= 0.25;
    }
    // slopes over the N >= 8 columns
    const std::vector<RunReport> tail(rs.begin() + 1, rs.end());
    const double sdt = aggregate_slope(tail, &RunReport::E_u, Against::Dt);
    const double sh = aggregate_slope(tail, &RunReport::E_u, Against::H);
    std::cout << "  per-column within 0.25: " << (cols ? "yes" : "no") << "  dt slope " << g(sdt) << " (>= 1.25)"
              << "  h slope " << g(sh) << " (>= 1.75)\n";
    d += "; dt slope " + g(sdt) + ", h slope " + g(sh) + (cols ? "" : "; per-column rates outside +-0.25");
    return {cols && sdt >= 1.25 && sh >= 1.75, d};
}

Outcome c8() {
    const auto t0 = Clock::now();
    const double alpha = 0.5;
    const ProblemSpec p = catalog(ExampleId::Ex7_3, alpha);
    StudyOptions o;
    o.solver.linear_solver = LinearSolver::Iterative;
    o.errors.max_norm = false;
    std::vector<double> dts, ew, eu;
    for (int N : {4, 8, 16, 32}) {
        const StudyRun r = study_run(p, alpha, N, o);
        dts.push_back(r.report.dt);
        ew.push_back(weighted_max(r.errors.t, r.errors.sigma, TimeWeight::HalfAlpha, alpha));
        eu.push_back(weighted_max(r.errors.t, r.errors.sigma, TimeWeight::None, alpha));
        std::cout << "  N=" << N << "  dt=" << g(dts.back()) << "  weighted=" << g(ew.back())
                  << "  unweighted=" << g(eu.back()) << "\n";
    }
    const double sw = loglog_slope(dts, ew), su = loglog_slope(dts, eu);
    const double el = seconds_since(t0);
    return {sw - su >= 0.15 && el <= 600,
            "weighted slope " + g(sw) + ", unweighted " + g(su) + ", gap " + g(sw - su) + ", " + g(el) + " s"};
}

Outcome c9() {
    const auto t0 = Clock::now();
    const double alpha = 0.5;
    bool ok = true;
    std::string d;
    for (ExampleId id : {ExampleId::Ex7_1, ExampleId::Ex7_2, ExampleId::Ex7_3}) {
        const ProblemSpec p = catalog(id, alpha);
        int N = 8;
        StepBounds sb;
        for (; N <= 64; N *= 2) {
            sb = step_condition(p, build_graded_grid(N, paper_gamma(alpha), p.T), alpha, 0.1, 1.1);
            if (sb.satisfied) break;
        }
        if (!sb.satisfied) {
            ok = false;
            d += to_string(id) + ": no N <= 64 satisfies the step condition; ";
            continue;
        }
        const GradedTimeGrid grid = build_graded_grid(N, paper_gamma(alpha), p.T);
        const KernelTable k(grid, alpha);
        const MixedSpace S = build_space(coupled_mesh(p, N, alpha), 1);
        const StateHistory h = run(p, S, grid, k);
        for (const StabilityReport& r :
             {stability_bound_u(h, p, k, 0.1, 1.1), stability_bound_flux(h, p, k, 0.1, 1.1)}) {
            // an overflowing Mittag-Leffler factor gives an infinite (valid, uninformative) bound
            int finite = 0;
            for (std::size_t i = 0; i < r.bound.size(); ++i) finite += std::isfinite(r.bound[i]) ? 1 : 0;
            std::cout << "  " << to_string(id) << " N=" << N << " " << r.quantity << ": "
                      << (r.all_pass() ? "pass" : "FAIL") << "  worst ratio " << g(r.worst_ratio()) << "  finite bounds "
                      << finite << "/" << r.bound.size() << (r.hypothesis_ok ? "" : "  (hypothesis violated)") << "\n";
            const bool good = r.hypothesis_ok && r.all_pass();
            ok = ok && good;
            d += to_string(id) + "/" + r.quantity + (good ? " ok" : " FAIL") + " (" + std::to_string(finite) + "/" +
                 std::to_string(r.bound.size()) + " finite); ";
        }
    }
    const double el = seconds_since(t0);
    return {ok && el <= 600, d + g(el) + " s"};
}

Outcome c10() {
    const auto t0 = Clock::now();
    const double alpha = 0.5;
    bool ok = true;
    std::string d;
    for (ExampleId id : {ExampleId::Ex7_7, ExampleId::Ex7_8}) {
        const ProblemSpec p = catalog(id, alpha);
        StudyOptions o;
        o.solver.linear_solver = LinearSolver::Iterative;
        std::vector<RunReport> rs;
        for (int N : {4, 8, 16}) rs.push_back(study_run(p, alpha, N, o).report);
        rs = reports_with_rates(rs);
        std::ostringstream os;
        write_csv(os, rs);
        std::cout << to_string(id) << "\n" << os.str();
        bool mono = true;
        for (std::size_t i = 1; i < rs.size(); ++i)
            mono = mono && rs[i].E_u < rs[i - 1].E_u && rs[i].E_sigma < rs[i - 1].E_sigma &&
                   rs[i].E_inf < rs[i - 1].E_inf;
        ok = ok && mono;
        d += to_string(id) + (mono ? " decreasing; " : " NOT decreasing; ");
    }
    const double el = seconds_since(t0);
    return {ok && el <= 600, d + g(el) + " s"};
}

Outcome c11() {
    bool ok = true;
    std::string d;
    for (double a : {0.99, 0.999}) {
        VerifyOptions o;
        o.alpha = a;
        const Outcome rs[] = {c1(o), c2(o), c3(o), c4(o), c5(o)};
        std::string s;
        for (int i = 0; i < 5; ++i) {
            ok = ok && rs[i].pass;
            s += rs[i].pass ? "" : " " + std::to_string(i + 1) + ":" + rs[i].detail;
        }
        d += "alpha=" + g(a) + (s.empty() ? " all pass; " : " failed" + s + "; ");
    }
    return {ok, d};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
    {"kernel identity, bounds, monotonicity, uniform ratio", [] { return c1(); }},
    {"L1 exactness on t and order on t^2", [] { return c2(); }},
    {"discrete fractional Gronwall bound", [] { return c3(); }},
    {"energy inequalities for the L1 operator", [] { return c4(); }},
    {"mixed space structure", [] { return c5(); }},
    {"step bounds for Ex7_2", c6},
    {"temporal convergence Ex7_1, alpha=0.5", c7},
    {"flux weighting effect Ex7_3", c8},
    {"stability monitors Ex7_1..Ex7_3", c9},
    {"pricing examples self-convergence", c10},
    {"alpha robustness at 0.99 and 0.999", c11},
};

}  // namespace

int main(int argc, char** argv) {
    int first = 1, last = static_cast<int>(criteria.size());
    if (argc > 1) {
        first = last = std::atoi(argv[1]);
        if (first < 1 || first > static_cast<int>(criteria.size())) {
            std::cerr << "usage: acceptance [1-" << criteria.size() << "]\n";
            return 1;
        }
    }
    bool all = true;
    for (int c = first; c <= last; ++c) {
        Outcome o{false, ""};
        try {
            o = criteria[c - 1].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << "criterion " << c << ": " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[c - 1].first
                  << "  (" << o.detail << ")\n";
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
