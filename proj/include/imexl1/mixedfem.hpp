#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "errors.hpp"
#include "mesh2d.hpp"
#include "quadrature.hpp"

namespace imexl1 {

using Mat2 = Eigen::Matrix2d;
using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

using ScalarFn = std::function<double(const Vec2&)>;
using VectorFn = std::function<Vec2(const Vec2&)>;

/// Raviart-Thomas flux space of order k (RT0 or RT1) paired with discontinuous P_k.
///
/// Flux DOFs: for every edge, k+1 normal moments against Legendre polynomials in the edge
/// parameter s (s = -1 at the lower vertex index), normalised by the edge length; for RT1
/// also two interior moments (1/|K|) int_K w_d. Local flux basis i = 3 * (k+1) edge DOFs in
/// local-edge order, then interior DOFs. Pressure basis per element: 1, xi_1, xi_2 with
/// xi = (x - x_K)/h_K.
class MixedSpace {
public:
    std::shared_ptr<const TriMesh> mesh;
    int order = 0;
    int nf_loc = 0, np_loc = 0, nprim = 0;
    int n_flux = 0, n_pressure = 0;
    TriangleRule rule;
    std::vector<std::vector<int>> flux_dof;  // per element, local -> global
    std::vector<Eigen::MatrixXd> coef;       // per element, primitives x local basis
    std::vector<Vec2> center;
    std::vector<double> scale;

    const TriMesh& m() const { return *mesh; }
    int num_elements() const { return mesh->num_triangles(); }
    int pressure_dof(int t, int i) const { return t * np_loc + i; }

    Vec2 point(int t, const std::array<double, 3>& l) const {
        const auto& v = mesh->triangles[t];
        return l[0] * mesh->vertices[v[0]] + l[1] * mesh->vertices[v[1]] + l[2] * mesh->vertices[v[2]];
    }

    /// values of the primitive fields at x (2 x nprim) and their divergences
    void primitives(int t, const Vec2& x, Eigen::Matrix<double, 2, Eigen::Dynamic>& P, Eigen::RowVectorXd& div) const {
        const double h = scale[t];
        const double a = (x.x() - center[t].x()) / h, b = (x.y() - center[t].y()) / h;
        P.setZero(2, nprim);
        div.setZero(nprim);
        if (order == 0) {
            P(0, 0) = 1.0;
            P(1, 1) = 1.0;
            P(0, 2) = a;
            P(1, 2) = b;
            div(2) = 2.0 / h;
        } else {
            P(0, 0) = 1.0;
            P(1, 1) = 1.0;
            P(0, 2) = a;
            P(0, 3) = b;
            P(1, 4) = a;
            P(1, 5) = b;
            P(0, 6) = a * a;
            P(1, 6) = a * b;
            P(0, 7) = a * b;
            P(1, 7) = b * b;
            div(2) = 1.0 / h;
            div(5) = 1.0 / h;
            div(6) = 3.0 * a / h;
            div(7) = 3.0 * b / h;
        }
    }

    /// flux basis values (2 x nf_loc) and divergences at x inside element t
    void flux_basis(int t, const Vec2& x, Eigen::Matrix<double, 2, Eigen::Dynamic>& Phi, Eigen::RowVectorXd& div) const {
        Eigen::Matrix<double, 2, Eigen::Dynamic> P;
        Eigen::RowVectorXd dp;
        primitives(t, x, P, dp);
        Phi = P * coef[t];
        div = dp * coef[t];
    }

    void pressure_basis(int t, const Vec2& x, Eigen::VectorXd& q) const {
        q.resize(np_loc);
        q(0) = 1.0;
        if (order == 1) {
            q(1) = (x.x() - center[t].x()) / scale[t];
            q(2) = (x.y() - center[t].y()) / scale[t];
        }
    }

    /// divergence of local flux basis function i expressed in the pressure basis
    Eigen::VectorXd divergence_coefficients(int t, int i) const {
        const auto& C = coef[t];
        const double h = scale[t];
        Eigen::VectorXd d(np_loc);
        if (order == 0) {
            d(0) = 2.0 * C(2, i) / h;
        } else {
            d(0) = (C(2, i) + C(5, i)) / h;
            d(1) = 3.0 * C(6, i) / h;
            d(2) = 3.0 * C(7, i) / h;
        }
        return d;
    }

    double eval_pressure(const Vec& u, int t, const Vec2& x) const {
        Eigen::VectorXd q;
        pressure_basis(t, x, q);
        return q.dot(u.segment(t * np_loc, np_loc));
    }

    Vec2 eval_flux(const Vec& s, int t, const Vec2& x) const {
        Eigen::Matrix<double, 2, Eigen::Dynamic> Phi;
        Eigen::RowVectorXd div;
        flux_basis(t, x, Phi, div);
        Vec2 out = Vec2::Zero();
        for (int i = 0; i < nf_loc; ++i) out += Phi.col(i) * s(flux_dof[t][i]);
        return out;
    }

    double eval_pressure_at(const Vec& u, const Vec2& x) const {
        const auto loc = mesh->locate(x);
        return eval_pressure(u, loc.triangle, x);
    }
};

namespace detail {

inline int edge_dofs_per_edge(int order) { return order + 1; }

// Legendre polynomial of degree m at s in [-1,1]
inline double legendre(int m, double s) { return m == 0 ? 1.0 : s; }

}  // namespace detail

inline MixedSpace build_space(const TriMesh& mesh, int order) {
    if (order != 0 && order != 1) throw ParameterError("build_space: order must be 0 or 1");
    MixedSpace S;
    S.mesh = std::make_shared<const TriMesh>(mesh);
    S.order = order;
    S.nf_loc = order == 0 ? 3 : 8;
    S.nprim = S.nf_loc;
    S.np_loc = order == 0 ? 1 : 3;
    S.rule = triangle_rule(order == 0 ? 2 : 4);
    const int ne = mesh.num_edges(), nt = mesh.num_triangles();
    const int epe = detail::edge_dofs_per_edge(order);
    S.n_flux = ne * epe + (order == 1 ? 2 * nt : 0);
    S.n_pressure = nt * S.np_loc;
    S.flux_dof.resize(nt);
    S.coef.resize(nt);
    S.center.resize(nt);
    S.scale.resize(nt);

    const LineRule gl = gauss_legendre(3);
    const TriangleRule tr = triangle_rule(2);
    for (int t = 0; t < nt; ++t) {
        S.center[t] = mesh.centroid(t);
        S.scale[t] = mesh.diameter(t);
        auto& dofs = S.flux_dof[t];
        dofs.resize(S.nf_loc);
        for (int le = 0; le < 3; ++le)
            for (int m = 0; m < epe; ++m) dofs[le * epe + m] = mesh.tri_edges[t][le] * epe + m;
        if (order == 1) {
            dofs[6] = ne * epe + 2 * t;
            dofs[7] = ne * epe + 2 * t + 1;
        }

        // DOF functionals applied to the primitives
        Eigen::MatrixXd Dm = Eigen::MatrixXd::Zero(S.nf_loc, S.nprim);
        Eigen::Matrix<double, 2, Eigen::Dynamic> P;
        Eigen::RowVectorXd dp;
        for (int le = 0; le < 3; ++le) {
            const int e = mesh.tri_edges[t][le];
            const Vec2 a = mesh.vertices[mesh.edges[e][0]], b = mesh.vertices[mesh.edges[e][1]];
            const Vec2 n = mesh.edge_normal(e);
            for (int q = 0; q < static_cast<int>(gl.x.size()); ++q) {
                const double s = 2.0 * gl.x[q] - 1.0;
                const Vec2 x = a + gl.x[q] * (b - a);
                S.primitives(t, x, P, dp);
                const Eigen::RowVectorXd pn = n.transpose() * P;
                for (int m = 0; m < epe; ++m) Dm.row(le * epe + m) += gl.w[q] * detail::legendre(m, s) * pn;
            }
        }
        if (order == 1) {
            for (int q = 0; q < tr.size(); ++q) {
                const Vec2 x = S.point(t, tr.bary[q]);
                S.primitives(t, x, P, dp);
                Dm.row(6) += tr.w[q] * P.row(0);
                Dm.row(7) += tr.w[q] * P.row(1);
            }
        }
        S.coef[t] = Dm.partialPivLu().inverse();
    }
    return S;
}

/// Element-local L2 projection onto the pressure space.
inline Vec l2_project(const MixedSpace& S, const ScalarFn& v, const TriangleRule* rule = nullptr) {
    const TriangleRule& r = rule ? *rule : S.rule;
    Vec out(S.n_pressure);
    Eigen::VectorXd q;
    for (int t = 0; t < S.num_elements(); ++t) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(S.np_loc, S.np_loc);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S.np_loc);
        for (int k = 0; k < r.size(); ++k) {
            const Vec2 x = S.point(t, r.bary[k]);
            S.pressure_basis(t, x, q);
            M += r.w[k] * q * q.transpose();
            rhs += r.w[k] * v(x) * q;
        }
        out.segment(t * S.np_loc, S.np_loc) = M.ldlt().solve(rhs);
    }
    return out;
}

/// Canonical RT interpolant (Fortin projection) of a vector field.
inline Vec fortin_project(const MixedSpace& S, const VectorFn& w, int edge_points = 5) {
    const TriMesh& mesh = S.m();
    const int epe = detail::edge_dofs_per_edge(S.order);
    Vec out = Vec::Zero(S.n_flux);
    const LineRule gl = gauss_legendre(edge_points);
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Vec2 a = mesh.vertices[mesh.edges[e][0]], b = mesh.vertices[mesh.edges[e][1]];
        const Vec2 n = mesh.edge_normal(e);
        for (int q = 0; q < edge_points; ++q) {
            const double s = 2.0 * gl.x[q] - 1.0;
            const double wn = w(a + gl.x[q] * (b - a)).dot(n);
            for (int m = 0; m < epe; ++m) out(e * epe + m) += gl.w[q] * detail::legendre(m, s) * wn;
        }
    }
    if (S.order == 1) {
        const TriangleRule tr = triangle_rule(6);
        const int base = mesh.num_edges() * epe;
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            Vec2 acc = Vec2::Zero();
            for (int q = 0; q < tr.size(); ++q) acc += tr.w[q] * w(S.point(t, tr.bary[q]));
            out(base + 2 * t) = acc.x();
            out(base + 2 * t + 1) = acc.y();
        }
    }
    return out;
}

/// Divergence of a discrete flux as a pressure-space vector (exact, since div W_h is in V_h).
inline Vec discrete_divergence(const MixedSpace& S, const Vec& sigma) {
    Vec out = Vec::Zero(S.n_pressure);
    for (int t = 0; t < S.num_elements(); ++t)
        for (int i = 0; i < S.nf_loc; ++i)
            out.segment(t * S.np_loc, S.np_loc) += sigma(S.flux_dof[t][i]) * S.divergence_coefficients(t, i);
    return out;
}

/// Unweighted pressure mass matrix (block diagonal).
inline SpMat pressure_mass(const MixedSpace& S) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(S.num_elements()) * S.np_loc * S.np_loc);
    Eigen::VectorXd q;
    for (int t = 0; t < S.num_elements(); ++t) {
        const double area = S.m().area(t);
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(S.np_loc, S.np_loc);
        for (int k = 0; k < S.rule.size(); ++k) {
            S.pressure_basis(t, S.point(t, S.rule.bary[k]), q);
            M += S.rule.w[k] * area * q * q.transpose();
        }
        for (int i = 0; i < S.np_loc; ++i)
            for (int j = 0; j < S.np_loc; ++j) trip.emplace_back(t * S.np_loc + i, t * S.np_loc + j, M(i, j));
    }
    SpMat out(S.n_pressure, S.n_pressure);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

/// L2 norm of a pressure-space function.
inline double pressure_norm(const MixedSpace& S, const Vec& u) {
    double s = 0.0;
    Eigen::VectorXd q;
    for (int t = 0; t < S.num_elements(); ++t) {
        const double area = S.m().area(t);
        for (int k = 0; k < S.rule.size(); ++k) {
            S.pressure_basis(t, S.point(t, S.rule.bary[k]), q);
            const double v = q.dot(u.segment(t * S.np_loc, S.np_loc));
            s += S.rule.w[k] * area * v * v;
        }
    }
    return std::sqrt(s);
}

/// L2 norm of a flux-space function.
inline double flux_norm(const MixedSpace& S, const Vec& sigma) {
    double s = 0.0;
    Eigen::Matrix<double, 2, Eigen::Dynamic> Phi;
    Eigen::RowVectorXd div;
    Eigen::VectorXd loc(S.nf_loc);
    for (int t = 0; t < S.num_elements(); ++t) {
        const double area = S.m().area(t);
        for (int i = 0; i < S.nf_loc; ++i) loc(i) = sigma(S.flux_dof[t][i]);
        for (int k = 0; k < S.rule.size(); ++k) {
            S.flux_basis(t, S.point(t, S.rule.bary[k]), Phi, div);
            s += S.rule.w[k] * area * (Phi * loc).squaredNorm();
        }
    }
    return std::sqrt(s);
}

/// Unweighted RT mass matrix.
inline SpMat flux_mass(const MixedSpace& S, const std::function<Mat2(const Vec2&)>& weight = {}) {
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::Matrix<double, 2, Eigen::Dynamic> Phi;
    Eigen::RowVectorXd div;
    for (int t = 0; t < S.num_elements(); ++t) {
        const double area = S.m().area(t);
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(S.nf_loc, S.nf_loc);
        for (int k = 0; k < S.rule.size(); ++k) {
            const Vec2 x = S.point(t, S.rule.bary[k]);
            S.flux_basis(t, x, Phi, div);
            if (weight)
                M += S.rule.w[k] * area * Phi.transpose() * weight(x) * Phi;
            else
                M += S.rule.w[k] * area * Phi.transpose() * Phi;
        }
        for (int i = 0; i < S.nf_loc; ++i)
            for (int j = 0; j < S.nf_loc; ++j) trip.emplace_back(S.flux_dof[t][i], S.flux_dof[t][j], M(i, j));
    }
    SpMat out(S.n_flux, S.n_flux);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

/// Coefficients of the flux/pressure system at one time level.
struct Coefficients {
    std::function<Mat2(const Vec2&, double)> A;
    std::function<Vec2(const Vec2&, double)> b;  // empty means b = 0
    std::function<double(const Vec2&, double)> c;  // empty means c = 0
    std::function<double(const Vec2&, double)> dirichlet;  // empty means homogeneous
};

struct AssembledSystem {
    SpMat M_B;   // (B sigma, w)
    SpMat D;     // (div w, v): pressure rows, flux columns
    SpMat C_b;   // (b . B sigma, v)
    SpMat M_c;   // ((Knn + c) u, v)
    Vec rhs_flux;
    Vec rhs_pressure;

    /// [M_B  D^T; -D + C_b  M_c]
    SpMat block() const {
        const Eigen::Index nf = M_B.rows(), np = M_c.rows();
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(M_B.nonZeros() + 2 * D.nonZeros() + C_b.nonZeros() + M_c.nonZeros()));
        for (int k = 0; k < M_B.outerSize(); ++k)
            for (SpMat::InnerIterator it(M_B, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
        for (int k = 0; k < D.outerSize(); ++k)
            for (SpMat::InnerIterator it(D, k); it; ++it) {
                trip.emplace_back(it.col(), nf + it.row(), it.value());
                trip.emplace_back(nf + it.row(), it.col(), -it.value());
            }
        for (int k = 0; k < C_b.outerSize(); ++k)
            for (SpMat::InnerIterator it(C_b, k); it; ++it) trip.emplace_back(nf + it.row(), it.col(), it.value());
        for (int k = 0; k < M_c.outerSize(); ++k)
            for (SpMat::InnerIterator it(M_c, k); it; ++it) trip.emplace_back(nf + it.row(), nf + it.col(), it.value());
        SpMat out(nf + np, nf + np);
        out.setFromTriplets(trip.begin(), trip.end());
        return out;
    }
};

inline Mat2 invert_coefficient(const Mat2& A, const Vec2& x, double t) {
    const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    if (!(std::fabs(det) > 1e-300) || !std::isfinite(det))
        throw CoefficientError("A is not invertible at (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                               "), t = " + std::to_string(t));
    Mat2 B;
    B << A(1, 1), -A(0, 1), -A(1, 0), A(0, 0);
    return B / det;
}

/// Boundary functional <u_D, w.n> on boundary edges.
inline Vec boundary_flux_rhs(const MixedSpace& S, const std::function<double(const Vec2&, double)>& gD, double t,
                             int edge_points = 4) {
    Vec out = Vec::Zero(S.n_flux);
    if (!gD) return out;
    const TriMesh& mesh = S.m();
    const LineRule gl = gauss_legendre(edge_points);
    Eigen::Matrix<double, 2, Eigen::Dynamic> Phi;
    Eigen::RowVectorXd div;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        if (!mesh.boundary_edge[e]) continue;
        const int tri = mesh.edge_tris[e][0];
        int le = 0;
        while (mesh.tri_edges[tri][le] != e) ++le;
        const Vec2 n = mesh.edge_normal(e) * mesh.tri_edge_sign[tri][le];  // outward
        const Vec2 a = mesh.vertices[mesh.edges[e][0]], b = mesh.vertices[mesh.edges[e][1]];
        const double len = mesh.edge_length(e);
        for (int q = 0; q < edge_points; ++q) {
            const Vec2 x = a + gl.x[q] * (b - a);
            S.flux_basis(tri, x, Phi, div);
            const double g = gD(x, t);
            const Eigen::RowVectorXd pn = n.transpose() * Phi;
            for (int i = 0; i < S.nf_loc; ++i) out(S.flux_dof[tri][i]) += gl.w[q] * len * g * pn(i);
        }
    }
    return out;
}

struct ElementMatrices {
    Eigen::MatrixXd MB, D, Cb, Mc;  // nf x nf, np x nf, np x nf, np x np
};

/// Local blocks of element k at time t.
inline void element_matrices(const MixedSpace& S, const Coefficients& co, double t, double Knn, int k,
                             ElementMatrices& E) {
    const int nf = S.nf_loc, np = S.np_loc;
    E.MB.setZero(nf, nf);
    E.D.setZero(np, nf);
    E.Cb.setZero(np, nf);
    E.Mc.setZero(np, np);
    Eigen::Matrix<double, 2, Eigen::Dynamic> Phi;
    Eigen::RowVectorXd div;
    Eigen::VectorXd q;
    const double area = S.m().area(k);
    for (int r = 0; r < S.rule.size(); ++r) {
        const Vec2 x = S.point(k, S.rule.bary[r]);
        const double w = S.rule.w[r] * area;
        S.flux_basis(k, x, Phi, div);
        S.pressure_basis(k, x, q);
        const Mat2 B = invert_coefficient(co.A(x, t), x, t);
        const Eigen::Matrix<double, 2, Eigen::Dynamic> BPhi = B * Phi;
        E.MB.noalias() += w * Phi.transpose() * BPhi;
        E.D.noalias() += w * q * div;
        if (co.b) E.Cb.noalias() += w * q * (co.b(x, t).transpose() * BPhi);
        const double cc = co.c ? co.c(x, t) : 0.0;
        E.Mc.noalias() += w * (Knn + cc) * q * q.transpose();
    }
}

/// Assemble all blocks at time t; rhs_pressure is left at zero for the caller.
inline AssembledSystem assemble(const MixedSpace& S, const Coefficients& co, double t, double Knn) {
    const int nt = S.num_elements();
    const int nf = S.nf_loc, np = S.np_loc;
    std::vector<Eigen::Triplet<double>> tB, tD, tC, tM;
    tB.reserve(static_cast<std::size_t>(nt) * nf * nf);
    tD.reserve(static_cast<std::size_t>(nt) * nf * np);
    if (co.b) tC.reserve(static_cast<std::size_t>(nt) * nf * np);
    tM.reserve(static_cast<std::size_t>(nt) * np * np);
    ElementMatrices E;
    for (int k = 0; k < nt; ++k) {
        element_matrices(S, co, t, Knn, k, E);
        const auto& fd = S.flux_dof[k];
        for (int i = 0; i < nf; ++i)
            for (int j = 0; j < nf; ++j) tB.emplace_back(fd[i], fd[j], E.MB(i, j));
        for (int i = 0; i < np; ++i) {
            const int pi = k * np + i;
            for (int j = 0; j < nf; ++j) {
                tD.emplace_back(pi, fd[j], E.D(i, j));
                if (co.b) tC.emplace_back(pi, fd[j], E.Cb(i, j));
            }
            for (int j = 0; j < np; ++j) tM.emplace_back(pi, k * np + j, E.Mc(i, j));
        }
    }
    AssembledSystem A;
    A.M_B.resize(S.n_flux, S.n_flux);
    A.M_B.setFromTriplets(tB.begin(), tB.end());
    A.D.resize(S.n_pressure, S.n_flux);
    A.D.setFromTriplets(tD.begin(), tD.end());
    A.C_b.resize(S.n_pressure, S.n_flux);
    A.C_b.setFromTriplets(tC.begin(), tC.end());
    A.M_c.resize(S.n_pressure, S.n_pressure);
    A.M_c.setFromTriplets(tM.begin(), tM.end());
    A.rhs_flux = boundary_flux_rhs(S, co.dirichlet, t);
    A.rhs_pressure = Vec::Zero(S.n_pressure);
    return A;
}

/// The block system with the element-local pressure eliminated:
///   (M_B + D^T M_c^{-1} (D - C_b)) sigma = rhs_flux - D^T M_c^{-1} rhs_p,
///   u_K = M_c,K^{-1} (rhs_p,K + (D - C_b)_K sigma_K).
/// K has the sparsity of M_B and is symmetric when b = 0.
struct CondensedSystem {
    SpMat K;
    Vec rhs_flux;
    std::vector<ElementMatrices> local;
    std::vector<Eigen::MatrixXd> Mc_inv;
    bool symmetric = true;

    Vec reduced_rhs(const MixedSpace& S, const Vec& rhs_p) const {
        Vec r = rhs_flux;
        const int np = S.np_loc;
        for (int k = 0; k < S.num_elements(); ++k) {
            const Eigen::VectorXd y = local[k].D.transpose() * (Mc_inv[k] * rhs_p.segment(k * np, np));
            for (int i = 0; i < S.nf_loc; ++i) r(S.flux_dof[k][i]) -= y(i);
        }
        return r;
    }

    Vec recover_pressure(const MixedSpace& S, const Vec& sigma, const Vec& rhs_p) const {
        const int np = S.np_loc;
        Vec u(S.n_pressure);
        Eigen::VectorXd sk(S.nf_loc);
        for (int k = 0; k < S.num_elements(); ++k) {
            for (int i = 0; i < S.nf_loc; ++i) sk(i) = sigma(S.flux_dof[k][i]);
            u.segment(k * np, np) = Mc_inv[k] * (rhs_p.segment(k * np, np) + (local[k].D - local[k].Cb) * sk);
        }
        return u;
    }

    /// ||block residual|| / ||block rhs|| of the unreduced system
    double block_residual(const MixedSpace& S, const Vec& sigma, const Vec& u, const Vec& rhs_p) const {
        const int np = S.np_loc, nf = S.nf_loc;
        Vec r1 = -rhs_flux;
        Vec r2 = -rhs_p;
        Eigen::VectorXd sk(nf);
        for (int k = 0; k < S.num_elements(); ++k) {
            const auto& E = local[k];
            const auto& fd = S.flux_dof[k];
            for (int i = 0; i < nf; ++i) sk(i) = sigma(fd[i]);
            const Eigen::VectorXd uk = u.segment(k * np, np);
            const Eigen::VectorXd a = E.MB * sk + E.D.transpose() * uk;
            for (int i = 0; i < nf; ++i) r1(fd[i]) += a(i);
            r2.segment(k * np, np) += (E.Cb - E.D) * sk + E.Mc * uk;
        }
        const double nb = std::sqrt(rhs_flux.squaredNorm() + rhs_p.squaredNorm());
        const double nr = std::sqrt(r1.squaredNorm() + r2.squaredNorm());
        return nb > 0.0 ? nr / nb : nr;
    }
};

inline CondensedSystem assemble_condensed(const MixedSpace& S, const Coefficients& co, double t, double Knn) {
    const int nt = S.num_elements();
    const int nf = S.nf_loc;
    CondensedSystem C;
    C.local.resize(nt);
    C.Mc_inv.resize(nt);
    C.symmetric = !co.b;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(nt) * nf * nf);
    for (int k = 0; k < nt; ++k) {
        ElementMatrices& E = C.local[k];
        element_matrices(S, co, t, Knn, k, E);
        C.Mc_inv[k] = E.Mc.inverse();
        Eigen::MatrixXd Kl = E.MB + E.D.transpose() * C.Mc_inv[k] * (E.D - E.Cb);
        if (C.symmetric) Kl = 0.5 * (Kl + Kl.transpose()).eval();
        const auto& fd = S.flux_dof[k];
        for (int i = 0; i < nf; ++i)
            for (int j = 0; j < nf; ++j) trip.emplace_back(fd[i], fd[j], Kl(i, j));
    }
    C.K.resize(S.n_flux, S.n_flux);
    C.K.setFromTriplets(trip.begin(), trip.end());
    C.rhs_flux = boundary_flux_rhs(S, co.dirichlet, t);
    return C;
}

/// Load vector (f, v) for a pressure-space test function.
inline Vec load_vector(const MixedSpace& S, const std::function<double(const Vec2&)>& f) {
    Vec out = Vec::Zero(S.n_pressure);
    Eigen::VectorXd q;
    for (int t = 0; t < S.num_elements(); ++t) {
        const double area = S.m().area(t);
        for (int r = 0; r < S.rule.size(); ++r) {
            const Vec2 x = S.point(t, S.rule.bary[r]);
            S.pressure_basis(t, x, q);
            out.segment(t * S.np_loc, S.np_loc) += S.rule.w[r] * area * f(x) * q;
        }
    }
    return out;
}

using KernelFn = std::function<double(const Vec2&, const Vec2&)>;

/// G[i][j] = int int phi_j(y) g(x,y) phi_i(x) dy dx, scaled by lambda.
inline Eigen::MatrixXd assemble_integral_matrix(const MixedSpace& S, const KernelFn& g, double lambda,
                                                const TriangleRule* rule = nullptr) {
    const TriangleRule& r = rule ? *rule : S.rule;
    const int nt = S.num_elements(), np = S.np_loc, nq = r.size();
    const int Q = nt * nq;
    std::vector<Vec2> X(Q);
    Eigen::MatrixXd Wq(np, Q);  // weight * basis value per quadrature point
    Eigen::VectorXd q;
    for (int t = 0; t < nt; ++t) {
        const double area = S.m().area(t);
        for (int k = 0; k < nq; ++k) {
            X[t * nq + k] = S.point(t, r.bary[k]);
            S.pressure_basis(t, X[t * nq + k], q);
            Wq.col(t * nq + k) = r.w[k] * area * q;
        }
    }
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(S.n_pressure, S.n_pressure);
    Eigen::MatrixXd kern(nq, nq);
    for (int ti = 0; ti < nt; ++ti)
        for (int tj = 0; tj < nt; ++tj) {
            for (int a = 0; a < nq; ++a)
                for (int b = 0; b < nq; ++b) kern(a, b) = g(X[ti * nq + a], X[tj * nq + b]);
            G.block(ti * np, tj * np, np, np) =
                lambda * Wq.middleCols(ti * nq, nq) * kern * Wq.middleCols(tj * nq, nq).transpose();
        }
    return G;
}

/// Product Gaussian kernel amp * exp(-(y1-x1-m1)^2/(2 s1^2) - (y2-x2-m2)^2/(2 s2^2)).
struct SeparableGaussian {
    double amp = 1.0;
    double m1 = 0.0, m2 = 0.0;
    double s1 = 1.0, s2 = 1.0;

    double operator()(const Vec2& x, const Vec2& y) const {
        const double d1 = y.x() - x.x() - m1, d2 = y.y() - x.y() - m2;
        return amp * std::exp(-d1 * d1 / (2 * s1 * s1) - d2 * d2 / (2 * s2 * s2));
    }
};

/// Applies v -> (I u_h, v) for every pressure basis function v. Product kernels use the
/// tensor structure of the quadrature coordinates; others fall back to a stored dense matrix.
class IntegralOperator {
public:
    IntegralOperator() = default;

    IntegralOperator(const MixedSpace& S, const KernelFn& g, std::optional<SeparableGaussian> sep,
                     const TriangleRule* rule = nullptr)
        : np_(S.np_loc), n_(S.n_pressure) {
        const TriangleRule& r = rule ? *rule : S.rule;
        if (!sep) {
            dense_ = assemble_integral_matrix(S, g, 1.0, &r);
            is_dense_ = true;
            return;
        }
        sep_ = *sep;
        const int nt = S.num_elements(), nq = r.size();
        const int Q = nt * nq;
        std::vector<double> x1(Q), x2(Q);
        Wq_.resize(np_, Q);
        Eigen::VectorXd q;
        for (int t = 0; t < nt; ++t) {
            const double area = S.m().area(t);
            for (int k = 0; k < nq; ++k) {
                const Vec2 x = S.point(t, r.bary[k]);
                x1[t * nq + k] = x.x();
                x2[t * nq + k] = x.y();
                S.pressure_basis(t, x, q);
                Wq_.col(t * nq + k) = r.w[k] * area * q;
            }
        }
        nq_ = nq;
        auto index = [](const std::vector<double>& c, std::vector<double>& uniq, std::vector<int>& id) {
            std::vector<int> order(c.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a, int b) { return c[a] < c[b]; });
            id.resize(c.size());
            uniq.clear();
            const double span = c[order.back()] - c[order.front()] + 1.0;
            for (int k : order) {
                if (uniq.empty() || c[k] - uniq.back() > 1e-13 * span) uniq.push_back(c[k]);
                id[k] = static_cast<int>(uniq.size()) - 1;
            }
        };
        std::vector<double> u1, u2;
        index(x1, u1, id1_);
        index(x2, u2, id2_);
        const int n1 = static_cast<int>(u1.size()), n2 = static_cast<int>(u2.size());
        G1_.resize(n1, n1);
        G2_.resize(n2, n2);
        for (int a = 0; a < n1; ++a)
            for (int b = 0; b < n1; ++b) {
                const double d = u1[b] - u1[a] - sep_.m1;
                G1_(a, b) = std::exp(-d * d / (2 * sep_.s1 * sep_.s1));
            }
        for (int a = 0; a < n2; ++a)
            for (int b = 0; b < n2; ++b) {
                const double d = u2[b] - u2[a] - sep_.m2;
                G2_(a, b) = std::exp(-d * d / (2 * sep_.s2 * sep_.s2));
            }
    }

    bool dense() const { return is_dense_; }

    /// r_i = int int g(x,y) u_h(y) v_i(x) dy dx
    Vec apply(const Vec& u) const {
        if (is_dense_) return dense_ * u;
        const int Q = static_cast<int>(id1_.size());
        Eigen::MatrixXd Sg = Eigen::MatrixXd::Zero(G1_.rows(), G2_.rows());
        for (int k = 0; k < Q; ++k) {
            const int t = k / nq_;
            Sg(id1_[k], id2_[k]) += Wq_.col(k).dot(u.segment(t * np_, np_));
        }
        const Eigen::MatrixXd T = sep_.amp * (G1_ * Sg * G2_.transpose());
        Vec out = Vec::Zero(n_);
        for (int k = 0; k < Q; ++k) {
            const int t = k / nq_;
            out.segment(t * np_, np_) += T(id1_[k], id2_[k]) * Wq_.col(k);
        }
        return out;
    }

private:
    int np_ = 1, n_ = 0, nq_ = 1;
    bool is_dense_ = false;
    Eigen::MatrixXd dense_;
    SeparableGaussian sep_;
    Eigen::MatrixXd Wq_, G1_, G2_;
    std::vector<int> id1_, id2_;
};

}  // namespace imexl1
