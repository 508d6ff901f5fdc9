#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "special.hpp"

namespace imexl1 {

/// Partition t_n = (n/N)^gamma T of [0, T].
struct GradedTimeGrid {
    int N = 0;
    double gamma = 1.0;
    double T = 1.0;
    std::vector<double> times;  // t_0 .. t_N
    std::vector<double> steps;  // steps[n-1] = dt_n, n = 1..N

    double t(int n) const { return times[static_cast<std::size_t>(n)]; }
    double dt(int n) const { return steps[static_cast<std::size_t>(n - 1)]; }
    // mu_n = dt_n / dt_{n-1}, n >= 2
    double mu(int n) const { return dt(n) / dt(n - 1); }
    double max_step() const { return steps.empty() ? 0.0 : dt(N); }
};

inline GradedTimeGrid build_graded_grid(int N, double gamma, double T) {
    if (N < 1) throw ParameterError("build_graded_grid: N must be >= 1");
    if (!(gamma >= 1.0) || !std::isfinite(gamma)) throw ParameterError("build_graded_grid: gamma must be >= 1");
    if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("build_graded_grid: T must be > 0");
    GradedTimeGrid g;
    g.N = N;
    g.gamma = gamma;
    g.T = T;
    g.times.resize(static_cast<std::size_t>(N) + 1);
    g.times[0] = 0.0;
    for (int n = 1; n < N; ++n) {
        const long double r = static_cast<long double>(n) / N;
        g.times[n] = static_cast<double>(std::pow(r, static_cast<long double>(gamma)) * T);
    }
    g.times[N] = T;
    g.steps.resize(static_cast<std::size_t>(N));
    for (int n = 1; n <= N; ++n) g.steps[n - 1] = g.times[n] - g.times[n - 1];
    return g;
}

inline int n_alpha_of(double alpha, int N) {
    const int k = static_cast<int>(std::floor(1.0 / alpha));
    return k < N ? k : N;
}

/// Dense lower-triangular L1 kernels K^{n,j} and complementary kernels P^{n,j}.
class KernelTable {
public:
    KernelTable() = default;

    KernelTable(const GradedTimeGrid& grid, double alpha) : grid_(grid), alpha_(alpha) {
        if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("build_kernels: alpha must lie in (0,1)");
        const int N = grid.N;
        n_alpha_ = n_alpha_of(alpha, N);
        const double g2a = gamma_fn(2.0 - alpha);
        K_.assign(idx(N, N) + 1, 0.0);
        P_.assign(idx(N, N) + 1, 0.0);
        // extended precision, rounded once: keeps K^{n,j} nondecreasing in j even when
        // dt_j / t_n is below double resolution
        const long double p = 1.0L - alpha;
        for (int n = 1; n <= N; ++n) {
            const long double tn = grid.t(n);
            for (int j = 1; j < n; ++j) {
                const long double a = tn - static_cast<long double>(grid.t(j - 1));
                const long double d = static_cast<long double>(grid.t(j)) - grid.t(j - 1);
                const long double diff = -std::pow(a, p) * std::expm1(p * std::log1p(-d / a));
                K_[idx(n, j)] = static_cast<double>(diff / (static_cast<long double>(g2a) * d));
            }
            K_[idx(n, n)] = 1.0 / (std::pow(grid.dt(n), alpha) * g2a);
        }
        // P^{n,n} = Gamma(2-alpha) dt_n^alpha = 1/K^{n,n};  P^{n,i} = (1/K^{i,i}) sum_{j>i} P^{n,j} (K^{j,i+1} - K^{j,i})
        for (int n = 1; n <= N; ++n) {
            P_[idx(n, n)] = g2a * std::pow(grid.dt(n), alpha);
            for (int i = n - 1; i >= 1; --i) {
                double s = 0.0;
                for (int j = i + 1; j <= n; ++j) s += P(n, j) * (K(j, i + 1) - K(j, i));
                P_[idx(n, i)] = s / K(i, i);
            }
        }
    }

    double alpha() const { return alpha_; }
    int N() const { return grid_.N; }
    int n_alpha() const { return n_alpha_; }
    const GradedTimeGrid& grid() const { return grid_; }

    double K(int n, int j) const { return K_[idx(n, j)]; }
    double P(int n, int j) const { return P_[idx(n, j)]; }

private:
    static std::size_t idx(int n, int j) {
        return static_cast<std::size_t>(n) * (n - 1) / 2 + static_cast<std::size_t>(j - 1);
    }

    GradedTimeGrid grid_;
    double alpha_ = 0.5;
    int n_alpha_ = 0;
    std::vector<double> K_, P_;
};

inline KernelTable build_kernels(const GradedTimeGrid& grid, double alpha) { return KernelTable(grid, alpha); }

namespace detail {

inline void check_same_shape(double, double) {}
inline void check_same_shape(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw ShapeError("history entries have different lengths");
}
inline double zero_like(double) { return 0.0; }
inline Eigen::VectorXd zero_like(const Eigen::VectorXd& v) { return Eigen::VectorXd::Zero(v.size()); }

}  // namespace detail

/// D^alpha phi^n = sum_{j=1}^n K^{n,j} (phi^j - phi^{j-1}). Value is double or Eigen::VectorXd.
template <class Value>
Value l1_derivative(const std::vector<Value>& history, const KernelTable& k, int n) {
    if (n < 1 || n > k.N()) throw DomainError("l1_derivative: step index out of range");
    if (history.size() < static_cast<std::size_t>(n) + 1) throw ShapeError("l1_derivative: history too short");
    Value out = detail::zero_like(history[0]);
    for (int j = 1; j <= n; ++j) {
        detail::check_same_shape(history[j], history[0]);
        out += k.K(n, j) * (history[j] - history[j - 1]);
    }
    return out;
}

/// Memory part of the L1 sum: sum_{j=1}^{n-1} (K^{n,j+1} - K^{n,j}) phi^j + K^{n,1} phi^0,
/// so that D^alpha phi^n = K^{n,n} phi^n - l1_history(...).
template <class Value>
Value l1_history(const std::vector<Value>& history, const KernelTable& k, int n) {
    if (n < 1 || n > k.N()) throw DomainError("l1_history: step index out of range");
    if (history.size() < static_cast<std::size_t>(n)) throw ShapeError("l1_history: history too short");
    Value out = k.K(n, 1) * history[0];
    for (int j = 1; j < n; ++j) {
        detail::check_same_shape(history[j], history[0]);
        out += (k.K(n, j + 1) - k.K(n, j)) * history[j];
    }
    return out;
}

/// E phi^n: phi^{n-1} for n <= n_alpha, (1+mu_n) phi^{n-1} - mu_n phi^{n-2} afterwards.
template <class Value>
Value extrapolate(const std::vector<Value>& history, const KernelTable& k, int n) {
    if (n < 1) throw DomainError("extrapolate: n must be >= 1");
    if (history.size() < static_cast<std::size_t>(n)) throw ShapeError("extrapolate: history too short");
    if (n <= k.n_alpha()) return history[n - 1];
    const double mu = k.grid().mu(n);
    detail::check_same_shape(history[n - 1], history[n - 2]);
    return Value((1.0 + mu) * history[n - 1] - mu * history[n - 2]);
}

/// The two weights (w1, w2) with E phi^n = w1 phi^{n-1} + w2 phi^{n-2}.
inline std::pair<double, double> extrapolation_weights(const KernelTable& k, int n) {
    if (n < 1) throw DomainError("extrapolate: n must be >= 1");
    if (n <= k.n_alpha()) return {1.0, 0.0};
    const double mu = k.grid().mu(n);
    return {1.0 + mu, -mu};
}

}  // namespace imexl1
