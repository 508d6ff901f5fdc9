#pragma once

#include <cmath>

#include "errors.hpp"
#include "mesh2d.hpp"
#include "problems.hpp"

namespace imexl1 {

/// Target mesh size from h^2 = N^{-(2-alpha)} / 2.
inline double h_for_N(int N, double alpha) {
    if (N < 1) throw ParameterError("h_for_N: N must be >= 1");
    return std::sqrt(0.5) * std::pow(static_cast<double>(N), -(2.0 - alpha) / 2.0);
}

/// Cells per side so that the cell diagonal does not exceed h: ceil(sqrt(2) * width / h).
inline int cells_for_h(double width, double h) {
    // slack so that exact ratios do not round up
    return std::max(1, static_cast<int>(std::ceil(std::sqrt(2.0) * width / h - 1e-9)));
}

inline TriMesh coupled_mesh(const ProblemSpec& p, int N, double alpha) {
    const double h = h_for_N(N, alpha);
    return rect_mesh(p.xmin, p.xmax, p.ymin, p.ymax, cells_for_h(p.xmax - p.xmin, h), cells_for_h(p.ymax - p.ymin, h));
}

/// Paper grading gamma = (2 - alpha)/alpha + 0.1.
inline double paper_gamma(double alpha) { return (2.0 - alpha) / alpha + 0.1; }

}  // namespace imexl1
