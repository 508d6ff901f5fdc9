#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace imexl1 {

using Vec2 = Eigen::Vector2d;

struct PointLocation {
    int triangle = -1;
    std::array<double, 3> bary{};
};

/// Conforming triangulation. Local edge i of a triangle is opposite local vertex i.
/// Edge (a,b) is stored with a < b; its reference normal is the tangent a->b turned clockwise.
class TriMesh {
public:
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 2>> edges;
    std::vector<std::array<int, 3>> tri_edges;
    // +1 when the edge's reference normal points out of the triangle
    std::vector<std::array<int, 3>> tri_edge_sign;
    std::vector<std::array<int, 2>> edge_tris;  // second entry -1 on the boundary
    std::vector<bool> boundary_edge;
    double h = 0.0;
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;

    TriMesh() = default;

    TriMesh(std::vector<Vec2> verts, std::vector<std::array<int, 3>> tris)
        : vertices(std::move(verts)), triangles(std::move(tris)) {
        finalize();
    }

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
    int num_edges() const { return static_cast<int>(edges.size()); }

    double area(int t) const {
        const auto& v = triangles[t];
        const Vec2 a = vertices[v[1]] - vertices[v[0]], b = vertices[v[2]] - vertices[v[0]];
        return 0.5 * (a.x() * b.y() - a.y() * b.x());
    }

    double diameter(int t) const {
        const auto& v = triangles[t];
        double d = 0.0;
        for (int i = 0; i < 3; ++i) d = std::max(d, (vertices[v[(i + 1) % 3]] - vertices[v[i]]).norm());
        return d;
    }

    Vec2 centroid(int t) const {
        const auto& v = triangles[t];
        return (vertices[v[0]] + vertices[v[1]] + vertices[v[2]]) / 3.0;
    }

    double edge_length(int e) const { return (vertices[edges[e][1]] - vertices[edges[e][0]]).norm(); }

    Vec2 edge_normal(int e) const {
        const Vec2 t = vertices[edges[e][1]] - vertices[edges[e][0]];
        return Vec2(t.y(), -t.x()) / t.norm();
    }

    double min_angle() const {
        double m = std::numbers::pi;
        for (const auto& v : triangles)
            for (int i = 0; i < 3; ++i) {
                const Vec2 a = vertices[v[(i + 1) % 3]] - vertices[v[i]];
                const Vec2 b = vertices[v[(i + 2) % 3]] - vertices[v[i]];
                m = std::min(m, std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)));
            }
        return m;
    }

    std::array<double, 3> barycentric(int t, const Vec2& p) const {
        const auto& v = triangles[t];
        const Vec2& a = vertices[v[0]];
        const Vec2& b = vertices[v[1]];
        const Vec2& c = vertices[v[2]];
        const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
        const double l1 = ((p.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (p.y() - a.y())) / det;
        const double l2 = ((b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y())) / det;
        return {1.0 - l1 - l2, l1, l2};
    }

    PointLocation locate(const Vec2& p, double tol = 1e-12) const {
        const double span = std::max(xmax - xmin, ymax - ymin);
        if (p.x() < xmin - tol * span || p.x() > xmax + tol * span || p.y() < ymin - tol * span ||
            p.y() > ymax + tol * span)
            throw LocationError("locate_point: point outside the mesh bounding box");
        const int bi = bucket_index(p);
        PointLocation best;
        double best_min = -std::numeric_limits<double>::infinity();
        auto scan = [&](const std::vector<int>& cand) {
            for (int t : cand) {
                const auto l = barycentric(t, p);
                const double m = std::min({l[0], l[1], l[2]});
                if (m > best_min) {
                    best_min = m;
                    best.triangle = t;
                    best.bary = l;
                }
            }
        };
        scan(buckets_[bi]);
        if (best_min < -tol) {
            std::vector<int> all(triangles.size());
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
            scan(all);
        }
        if (best_min < -tol) throw LocationError("locate_point: point is not inside any triangle");
        return best;
    }

    void write_text(std::ostream& os) const {
        os.precision(17);
        os << "vertices " << vertices.size() << "\n";
        for (const auto& v : vertices) os << v.x() << " " << v.y() << "\n";
        os << "triangles " << triangles.size() << "\n";
        for (const auto& t : triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
    }

private:
    int nbx_ = 1, nby_ = 1;
    std::vector<std::vector<int>> buckets_;

    int bucket_index(const Vec2& p) const {
        const int i = std::clamp(static_cast<int>((p.x() - xmin) / (xmax - xmin) * nbx_), 0, nbx_ - 1);
        const int j = std::clamp(static_cast<int>((p.y() - ymin) / (ymax - ymin) * nby_), 0, nby_ - 1);
        return j * nbx_ + i;
    }

    void finalize() {
        if (triangles.empty()) throw ParameterError("TriMesh: no triangles");
        const int nt = num_triangles();
        for (int t = 0; t < nt; ++t)
            if (!(area(t) > 0.0)) throw ParameterError("TriMesh: triangle with nonpositive area");

        std::unordered_map<std::uint64_t, int> lookup;
        lookup.reserve(static_cast<std::size_t>(nt) * 2);
        tri_edges.resize(nt);
        tri_edge_sign.resize(nt);
        edges.clear();
        edge_tris.clear();
        const auto nv = static_cast<std::uint64_t>(vertices.size());
        for (int t = 0; t < nt; ++t) {
            const auto& v = triangles[t];
            for (int i = 0; i < 3; ++i) {
                const int p = v[(i + 1) % 3], q = v[(i + 2) % 3];
                const int a = std::min(p, q), b = std::max(p, q);
                const std::uint64_t key = static_cast<std::uint64_t>(a) * nv + static_cast<std::uint64_t>(b);
                auto [it, fresh] = lookup.emplace(key, static_cast<int>(edges.size()));
                if (fresh) {
                    edges.push_back({a, b});
                    edge_tris.push_back({t, -1});
                } else {
                    auto& et = edge_tris[it->second];
                    if (et[1] != -1) throw ParameterError("TriMesh: edge shared by more than two triangles");
                    et[1] = t;
                }
                tri_edges[t][i] = it->second;
                // counterclockwise traversal p->q; the reference normal is outward iff p < q
                tri_edge_sign[t][i] = p < q ? 1 : -1;
            }
        }
        boundary_edge.assign(edges.size(), false);
        for (std::size_t e = 0; e < edges.size(); ++e) boundary_edge[e] = edge_tris[e][1] == -1;

        h = 0.0;
        for (int t = 0; t < nt; ++t) h = std::max(h, diameter(t));
        xmin = ymin = std::numeric_limits<double>::infinity();
        xmax = ymax = -std::numeric_limits<double>::infinity();
        for (const auto& p : vertices) {
            xmin = std::min(xmin, p.x());
            xmax = std::max(xmax, p.x());
            ymin = std::min(ymin, p.y());
            ymax = std::max(ymax, p.y());
        }
        const int nb = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(nt) / 2.0)));
        nbx_ = nby_ = nb;
        buckets_.assign(static_cast<std::size_t>(nb) * nb, {});
        for (int t = 0; t < nt; ++t) {
            const auto& v = triangles[t];
            Vec2 lo = vertices[v[0]], hi = vertices[v[0]];
            for (int i = 1; i < 3; ++i) {
                lo = lo.cwiseMin(vertices[v[i]]);
                hi = hi.cwiseMax(vertices[v[i]]);
            }
            const int i0 = bucket_index(lo) % nbx_, j0 = bucket_index(lo) / nbx_;
            const int i1 = bucket_index(hi) % nbx_, j1 = bucket_index(hi) / nbx_;
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nbx_ + i].push_back(t);
        }
    }
};

/// Structured mesh of [xmin,xmax]x[ymin,ymax]: each cell is cut along its
/// lower-left to upper-right diagonal. Minimum angle is atan(min(dx,dy)/max(dx,dy)).
inline TriMesh rect_mesh(double xmin, double xmax, double ymin, double ymax, int nx, int ny) {
    if (nx < 1 || ny < 1) throw ParameterError("rect_mesh: nx and ny must be >= 1");
    if (!(xmax > xmin) || !(ymax > ymin)) throw ParameterError("rect_mesh: empty rectangle");
    std::vector<Vec2> v;
    v.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            // exact end points
            const double x = i == nx ? xmax : xmin + (xmax - xmin) * i / nx;
            const double y = j == ny ? ymax : ymin + (ymax - ymin) * j / ny;
            v.emplace_back(x, y);
        }
    std::vector<std::array<int, 3>> t;
    t.reserve(static_cast<std::size_t>(2) * nx * ny);
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            t.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return TriMesh(std::move(v), std::move(t));
}

/// Red refinement: every triangle split into four through its edge midpoints.
/// Coarse vertices keep their indices; the midpoint of edge e gets index V + e.
inline TriMesh refine_uniform(const TriMesh& m) {
    std::vector<Vec2> v = m.vertices;
    const int nv = m.num_vertices();
    v.reserve(v.size() + m.edges.size());
    for (const auto& e : m.edges) v.push_back(0.5 * (m.vertices[e[0]] + m.vertices[e[1]]));
    std::vector<std::array<int, 3>> t;
    t.reserve(m.triangles.size() * 4);
    for (int k = 0; k < m.num_triangles(); ++k) {
        const auto& c = m.triangles[k];
        const auto& te = m.tri_edges[k];
        const int m0 = nv + te[0], m1 = nv + te[1], m2 = nv + te[2];  // midpoints opposite c0, c1, c2
        t.push_back({c[0], m2, m1});
        t.push_back({m2, c[1], m0});
        t.push_back({m1, m0, c[2]});
        t.push_back({m2, m0, m1});
    }
    return TriMesh(std::move(v), std::move(t));
}

inline PointLocation locate_point(const TriMesh& m, const Vec2& p, double tol = 1e-12) { return m.locate(p, tol); }

}  // namespace imexl1
