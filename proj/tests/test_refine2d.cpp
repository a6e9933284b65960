#include "polygrade/fixtures.hpp"

#include <gtest/gtest.h>

using namespace polygrade;

namespace {

/// Shortest mesh edge at vertex v.
double nearest_to(const SimplicialMesh &m, int v) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto &c : m.cells)
        if (c[0] == v || c[1] == v || c[2] == v)
            for (int k = 0; k < 3; ++k)
                if (c[k] != v) d = std::min(d, distance(m.points[c[k]], m.points[v]));
    return d;
}

double min_angle(const SimplicialMesh &m) {
    double a = 4.0;
    for (const auto &c : m.cells) a = std::min(a, min_triangle_angle(m.points[c[0]], m.points[c[1]], m.points[c[2]]));
    return a;
}

Domain with_kappa(const std::string &text, double kappa) {
    Domain d = load_domain(text);
    d.grading.kappa_global = kappa;
    d.grading.validate();
    return d;
}

} // namespace

TEST(Refine2d, SplitEdgePlacement) {
    const Vec3 a{0, 0, 0}, b{1, 0, 0};
    EXPECT_EQ(split_edge(a, VertexType::V, b, VertexType::S, 0.25)[0], 0.25);
    EXPECT_EQ(split_edge(a, VertexType::S, b, VertexType::V, 0.25)[0], 0.75);
    EXPECT_EQ(split_edge(a, VertexType::S, b, VertexType::S, 0.25)[0], 0.5);
    EXPECT_EQ(split_edge(a, VertexType::E, b, VertexType::V, 0.1)[0], 0.9);
}

TEST(Refine2d, VssCornerChild) {
    const Triangle2 t{{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}}, {VertexType::V, VertexType::S, VertexType::S}};
    const std::array<double, 3> kappa{0.25, 0.5, 0.5};
    const auto ch = refine_triangle2(t, kappa);
    EXPECT_NEAR(signed_area(ch[0].x[0], ch[0].x[1], ch[0].x[2]), 1.0 / 32.0, 1e-15);
    EXPECT_EQ(ch[0].type[0], VertexType::V);
    double sum = 0.0;
    for (const auto &c : ch) {
        const double a = signed_area(c.x[0], c.x[1], c.x[2]);
        EXPECT_GT(a, 0.0);
        sum += a;
        EXPECT_EQ(c.level, 1);
    }
    EXPECT_NEAR(sum, 0.5, 1e-15);
    for (std::size_t k = 1; k < 4; ++k)
        for (VertexType ty : ch[k].type) EXPECT_EQ(ty, VertexType::S);
}

TEST(Refine2d, SssChildrenAreCongruent) {
    const Triangle2 t{{Vec3{0, 0, 0}, Vec3{2, 0, 0}, Vec3{0.5, 1, 0}}};
    const std::array<double, 3> kappa{0.5, 0.5, 0.5};
    for (const auto &c : refine_triangle2(t, kappa))
        EXPECT_NEAR(std::abs(signed_area(c.x[0], c.x[1], c.x[2])), 0.25, 1e-15);
}

TEST(Refine2d, InitialMeshHasNoVVEdges) {
    for (const std::string name : {"lshape2d", "square2d", "sector2d(5.5)"}) {
        const Domain d = load_domain(builtin_domain_text(name));
        const GradedMesh2 g = initial_mesh2(d);
        for (const auto &c : g.mesh.cells) {
            int nv = 0;
            for (int k = 0; k < 3; ++k) nv += g.mesh.types[c[k]] == VertexType::V;
            EXPECT_LE(nv, 1) << name;
        }
        EXPECT_TRUE(check_conformity(g.mesh, &d).ok) << name;
    }
}

TEST(Refine2d, SequenceInvariants) {
    for (const std::string name : {"lshape2d", "square2d", "sector2d(5.5)", "sector2d(1.0)"})
        for (double kappa : {0.5, 0.25, 0.1}) {
            const Domain d = with_kappa(builtin_domain_text(name), kappa);
            const auto seq = mesh2_sequence(d, d.grading, 4);
            std::map<int, double> d0;
            for (int v : d.singular_vertices) d0[v] = nearest_to(seq[0].mesh, v);
            for (std::size_t n = 0; n < seq.size(); ++n) {
                const SimplicialMesh &m = seq[n].mesh;
                const auto rep = check_conformity(m, &d);
                EXPECT_TRUE(rep.ok) << name << " level " << n;
                EXPECT_NEAR(total_measure(m), d.measure(), 1e-10 * d.measure());
                EXPECT_EQ(m.num_cells(), seq[0].mesh.num_cells() << (2 * n));
                for (int v : d.singular_vertices) {
                    const double expect = std::pow(kappa, n) * d0[v];
                    EXPECT_NEAR(nearest_to(m, v), expect, std::max(1e-12 * expect, 1e-15)) << name << " vertex " << v;
                }
            }
        }
}

TEST(Refine2d, UniformKeepsShape) {
    const Domain d = with_kappa(fixtures::lshape2d_text(), 0.5);
    const auto seq = mesh2_sequence(d, d.grading, 4);
    for (const auto &g : seq) EXPECT_NEAR(min_angle(g.mesh), min_angle(seq[0].mesh), 1e-12);
}

TEST(Refine2d, GradedAnglesBounded) {
    const Domain d = with_kappa(fixtures::lshape2d_text(), 0.1);
    const auto seq = mesh2_sequence(d, d.grading, 6);
    const double a1 = min_angle(seq[1].mesh);
    for (std::size_t n = 2; n < seq.size(); ++n) EXPECT_GE(min_angle(seq[n].mesh), 0.9 * a1);
}

TEST(Refine2d, PerCornerKappa) {
    Domain d = load_domain(fixtures::lshape2d_text() + "[grading]\nkappa 2 0.2\nkappa 0 0.1\n");
    const auto seq = mesh2_sequence(d, d.grading, 3);
    for (auto [v, k] : std::map<int, double>{{2, 0.2}, {0, 0.1}, {4, 0.25}}) {
        const double expect = std::pow(k, 3) * nearest_to(seq[0].mesh, v);
        EXPECT_NEAR(nearest_to(seq[3].mesh, v), expect, 1e-12 * expect) << v;
    }
}

TEST(Refine2d, BoundaryFlagsFollowFacets) {
    const Domain d = load_domain(fixtures::square2d_text("NNDD"));
    const auto seq = mesh2_sequence(d, d.grading, 2);
    const SimplicialMesh &m = seq.back().mesh;
    double neumann = 0.0;
    for (const auto &b : m.boundary)
        if (b.flag == BoundaryFlag::Neumann) {
            neumann += distance(m.points[b.v[0]], m.points[b.v[1]]);
            const Vec3 mid = lerp(m.points[b.v[0]], m.points[b.v[1]], 0.5);
            EXPECT_TRUE(std::abs(mid[1]) < 1e-14 || std::abs(mid[0] - 1) < 1e-14);
        }
    EXPECT_NEAR(neumann, 2.0, 1e-14);
}

TEST(Refine2d, BrokenMeshDetected) {
    const Domain d = load_domain(fixtures::lshape2d_text());
    GradedMesh2 g = initial_mesh2(d);
    g.mesh.cells.pop_back();
    EXPECT_FALSE(check_conformity(g.mesh, &d).ok);
}
