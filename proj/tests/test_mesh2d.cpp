#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include <imexl1.hpp>

using namespace imexl1;

namespace {

void check_structure(const TriMesh& m) {
    EXPECT_EQ(m.num_vertices() - m.num_edges() + m.num_triangles(), 1);
    std::vector<int> count(m.num_edges(), 0), signsum(m.num_edges(), 0);
    double hmax = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t) {
        EXPECT_GT(m.area(t), 0.0);
        for (int i = 0; i < 3; ++i) {
            ++count[m.tri_edges[t][i]];
            signsum[m.tri_edges[t][i]] += m.tri_edge_sign[t][i];
            const auto& v = m.triangles[t];
            hmax = std::max(hmax, (m.vertices[v[(i + 1) % 3]] - m.vertices[v[(i + 2) % 3]]).norm());
        }
    }
    for (int e = 0; e < m.num_edges(); ++e) {
        EXPECT_LT(m.edges[e][0], m.edges[e][1]);
        EXPECT_EQ(count[e], m.boundary_edge[e] ? 1 : 2);
        if (!m.boundary_edge[e]) EXPECT_EQ(signsum[e], 0);
    }
    EXPECT_DOUBLE_EQ(m.h, hmax);
}

}  // namespace

TEST(RectMesh, UnitSquare) {
    const TriMesh m = rect_mesh(0, 1, 0, 1, 1, 1);
    EXPECT_EQ(m.num_triangles(), 2);
    EXPECT_EQ(m.num_vertices(), 4);
    EXPECT_EQ(m.num_edges(), 5);
    check_structure(m);
}

TEST(RectMesh, DiameterAndArea) {
    const TriMesh m = rect_mesh(-1, 1, -1, 1, 8, 8);
    EXPECT_NEAR(m.h, 0.25 * std::sqrt(2.0), 1e-15);
    check_structure(m);
    for (auto [nx, ny] : {std::pair{3, 7}, std::pair{10, 1}, std::pair{5, 5}}) {
        const TriMesh r = rect_mesh(-1, 2, 0.5, 1.5, nx, ny);
        EXPECT_EQ(r.num_triangles(), 2 * nx * ny);
        double a = 0.0;
        for (int t = 0; t < r.num_triangles(); ++t) a += r.area(t);
        EXPECT_NEAR(a, 3.0, 1e-12);
        check_structure(r);
        EXPECT_NEAR(r.min_angle(), std::atan(std::min(3.0 / nx, 1.0 / ny) / std::max(3.0 / nx, 1.0 / ny)), 1e-12);
    }
    EXPECT_THROW(rect_mesh(0, 1, 0, 1, 0, 1), ParameterError);
    EXPECT_THROW(rect_mesh(1, 1, 0, 1, 2, 1), ParameterError);
}

TEST(Refine, Nested) {
    const TriMesh m = rect_mesh(0, 1, 0, 1, 1, 1);
    const TriMesh r1 = refine_uniform(m);
    EXPECT_EQ(r1.num_triangles(), 8);
    const TriMesh r2 = refine_uniform(r1);
    EXPECT_EQ(r2.num_triangles(), 32);
    EXPECT_NEAR(r1.h, m.h / 2, 1e-15);
    EXPECT_NEAR(r2.h, m.h / 4, 1e-15);
    for (int i = 0; i < m.num_vertices(); ++i) EXPECT_EQ(r1.vertices[i], m.vertices[i]);
    check_structure(r1);
    check_structure(r2);
}

TEST(Locate, CentroidVertexAndLinearReproduction) {
    const TriMesh m = rect_mesh(-1, 1, -1, 1, 6, 4);
    for (int t = 0; t < m.num_triangles(); ++t) {
        const auto loc = locate_point(m, m.centroid(t));
        EXPECT_EQ(loc.triangle, t);
        for (double b : loc.bary) EXPECT_NEAR(b, 1.0 / 3.0, 1e-13);
    }
    const auto lv = locate_point(m, m.vertices[9]);
    const auto& tv = m.triangles[lv.triangle];
    int at = -1;
    for (int i = 0; i < 3; ++i)
        if (tv[i] == 9) at = i;
    ASSERT_GE(at, 0);
    EXPECT_NEAR(lv.bary[at], 1.0, 1e-13);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1, 1);
    auto f = [](const Vec2& p) { return 2.0 - 3.0 * p.x() + 0.5 * p.y(); };
    for (int s = 0; s < 200; ++s) {
        const Vec2 p(U(rng), U(rng));
        const auto loc = locate_point(m, p);
        double sum = 0.0, val = 0.0;
        for (int i = 0; i < 3; ++i) {
            EXPECT_GE(loc.bary[i], -1e-12);
            EXPECT_LE(loc.bary[i], 1.0 + 1e-12);
            sum += loc.bary[i];
            val += loc.bary[i] * f(m.vertices[m.triangles[loc.triangle][i]]);
        }
        EXPECT_NEAR(sum, 1.0, 1e-14);
        EXPECT_NEAR(val, f(p), 1e-13);
    }
    EXPECT_THROW(locate_point(m, Vec2(1.5, 0.0)), LocationError);
}

TEST(Mesh, TextDump) {
    std::ostringstream os;
    rect_mesh(0, 1, 0, 1, 1, 1).write_text(os);
    EXPECT_NE(os.str().find("4"), std::string::npos);
}
