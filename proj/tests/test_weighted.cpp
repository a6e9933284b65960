#include "polygrade/fixtures.hpp"
#include "polygrade/weighted.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace polygrade;

namespace {

Domain lshape() { return load_domain(fixtures::lshape2d_text()); }

SimplicialMesh mesh2(const Domain &d, int levels) { return mesh2_sequence(d, d.grading, levels).back().mesh; }

double fd_value(const CornerSingularFunction &sf, Vec3 x, int k, double h) {
    Vec3 xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    return (eval_singular(sf, xp).value - eval_singular(sf, xm).value) / (2 * h);
}

double fd_grad(const CornerSingularFunction &sf, Vec3 x, int k, int j, double h) {
    Vec3 xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    return (eval_singular(sf, xp).grad[k] - eval_singular(sf, xm).grad[k]) / (2 * h);
}

void check_derivatives(const CornerSingularFunction &sf, const std::vector<Vec3> &points, int dim) {
    // hessian layout xx, yy, zz, xy, xz, yz
    const int hidx[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
    for (const Vec3 &x : points) {
        const SingularEval e = eval_singular(sf, x);
        double lap = 0.0;
        for (int k = 0; k < dim; ++k) {
            EXPECT_NEAR(e.grad[k], fd_value(sf, x, k, 1e-6), 1e-6) << x[0] << ' ' << x[1] << ' ' << x[2];
            for (int j = 0; j < dim; ++j) EXPECT_NEAR(e.hessian[hidx[k][j]], fd_grad(sf, x, k, j, 1e-6), 1e-5);
            lap += e.hessian[hidx[k][k]];
        }
        EXPECT_NEAR(e.laplacian, lap, 1e-12 * std::max(1.0, std::abs(lap)));
    }
}

} // namespace

TEST(Weighted, CutoffIsC2) {
    const double r1 = 0.3, r2 = 0.9;
    for (double r : {r1, r2}) {
        const auto lo = cutoff(r - 1e-9, r1, r2), hi = cutoff(r + 1e-9, r1, r2);
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(lo[k], hi[k], 1e-6);
    }
    for (double r : {0.35, 0.5, 0.77}) {
        const double h = 1e-6;
        const auto c = cutoff(r, r1, r2), p = cutoff(r + h, r1, r2), m = cutoff(r - h, r1, r2);
        EXPECT_NEAR(c[1], (p[0] - m[0]) / (2 * h), 1e-7);
        EXPECT_NEAR(c[2], (p[1] - m[1]) / (2 * h), 1e-6);
    }
    EXPECT_NEAR(cutoff(0.6, r1, r2)[0], 0.5, 1e-15);
}

TEST(Weighted, LShapeSingularFunction) {
    const Domain d = lshape();
    const CornerSingularFunction sf = corner_singular_function(d, CornerId::vertex(2), 0.3, 0.9);
    EXPECT_NEAR(sf.exponent(), 2.0 / 3.0, 1e-15);
    // both legs of the re-entrant corner
    for (double t : {0.01, 0.1, 0.29, 0.5, 0.95}) {
        EXPECT_NEAR(eval_singular(sf, {t, 0, 0}).value, 0.0, 1e-14);
        EXPECT_NEAR(eval_singular(sf, {0, -t, 0}).value, 0.0, 1e-14);
    }
    // value inside the plateau: r^(2/3) sin(2 theta / 3), theta from the positive x axis
    const Vec3 x{-0.1, 0.2, 0};
    const double r = std::hypot(0.1, 0.2), th = std::atan2(0.2, -0.1);
    EXPECT_NEAR(eval_singular(sf, x).value, std::pow(r, 2.0 / 3) * std::sin(2 * th / 3), 1e-15);
    const double th2 = std::atan2(-0.1, -0.2) + 2 * pi;
    EXPECT_NEAR(eval_singular(sf, {-0.2, -0.1, 0}).value, std::pow(std::hypot(0.2, 0.1), 2.0 / 3) * std::sin(2 * th2 / 3),
                1e-15);
    EXPECT_EQ(eval_singular(sf, {0.95, 0.95, 0}).value, 0.0);
    EXPECT_FALSE(eval_singular(sf, {0, 0, 0}).gradient_bounded);
    std::vector<Vec3> pts;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-0.95, 0.95);
    while (pts.size() < 60) {
        const Vec3 p{u(rng), u(rng), 0};
        if ((p[0] > 0 && p[1] < 0) || std::hypot(p[0], p[1]) < 0.05) continue;
        pts.push_back(p);
    }
    check_derivatives(sf, pts, 2);
}

TEST(Weighted, PureSingularFunctionIsHarmonic) {
    const Domain d = lshape();
    CornerSingularFunction sf = corner_singular_function(d, CornerId::vertex(2), 0.3, 0.9);
    sf.pure = true;
    const double h = 1e-3;
    for (const Vec3 &x : {Vec3{-0.5, 0.5, 0}, Vec3{0.3, 0.4, 0}, Vec3{-0.2, -0.6, 0}, Vec3{-0.7, 0.05, 0}}) {
        auto u = [&](double dx, double dy) { return eval_singular(sf, {x[0] + dx, x[1] + dy, 0}).value; };
        const double lap5 = (u(h, 0) + u(-h, 0) + u(0, h) + u(0, -h) - 4 * u(0, 0)) / (h * h);
        EXPECT_NEAR(lap5, 0.0, 1e-5);
        EXPECT_NEAR(eval_singular(sf, x).laplacian, 0.0, 1e-12);
    }
}

TEST(Weighted, CutoffBallMustStayInside) {
    const Domain d = lshape();
    EXPECT_THROW(corner_singular_function(d, CornerId::vertex(2), 0.3, 1.1), ValidationError);
    EXPECT_THROW(corner_singular_function(d, CornerId::vertex(2), 0.5, 0.4), ValidationError);
    const Domain p = load_domain("[vertices]\n0 0\n2 0\n2 2\n1 0.8\n0 2\n[facets]\n0 1 D\n1 2 D\n2 3 D\n3 4 D\n4 0 D\n");
    EXPECT_THROW(corner_singular_function(p, CornerId::vertex(3), 0.3, 0.9), ValidationError);
    EXPECT_NO_THROW(corner_singular_function(p, CornerId::vertex(3), 0.25, 0.7));
}

TEST(Weighted, EdgeSingularFunction) {
    const Domain d = load_domain(fixtures::prismwedge3d_text());
    const CornerSingularFunction sf = corner_singular_function(d, CornerId::edge(2, 8), 0.3, 0.9);
    EXPECT_TRUE(sf.axial);
    EXPECT_NEAR(sf.t1 - sf.t0, 1.0, 1e-15);
    for (double z : {0.1, 0.5, 0.9})
        for (double t : {0.05, 0.4, 0.8}) {
            EXPECT_NEAR(eval_singular(sf, {t, 0, z}).value, 0.0, 1e-14);
            EXPECT_NEAR(eval_singular(sf, {0, -t, z}).value, 0.0, 1e-14);
        }
    // vanishes on the bottom and top faces through the axial factor
    EXPECT_NEAR(eval_singular(sf, {-0.2, 0.1, 0}).value, 0.0, 1e-14);
    EXPECT_NEAR(eval_singular(sf, {-0.2, 0.1, 1}).value, 0.0, 1e-14);
    // in each cross-section it is the 2D function times sin(pi z)
    const CornerSingularFunction s2 = corner_singular_function(lshape(), CornerId::vertex(2), 0.3, 0.9);
    for (double z : {0.25, 0.5})
        EXPECT_NEAR(eval_singular(sf, {-0.3, 0.2, z}).value,
                    std::abs(eval_singular(s2, {-0.3, 0.2, 0}).value) * std::sin(pi * z), 1e-14);
    std::vector<Vec3> pts;
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-0.95, 0.95), w(0.02, 0.98);
    while (pts.size() < 40) {
        const Vec3 p{u(rng), u(rng), w(rng)};
        if ((p[0] > 0 && p[1] < 0) || std::hypot(p[0], p[1]) < 0.05) continue;
        pts.push_back(p);
    }
    check_derivatives(sf, pts, 3);
}

TEST(Weighted, GradedIntegrationOfInverseDistance) {
    // int_T 1/r over the unit right triangle with r measured from the origin: sqrt(2) asinh(1)
    Domain d = load_domain(fixtures::square2d_text());
    d.singular_vertices = {0};
    SimplicialMesh m;
    m.points = {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}};
    m.cells = {{0, 1, 2, -1}};
    const CellGeometry g = cell_geometry(m, 0);
    const double exact = std::sqrt(2.0) * std::asinh(1.0);
    double prev_err = 1.0;
    for (int depth : {4, 8, 12}) {
        double s = 0.0;
        detail::integrate_graded(g, 2, quadrature(6, 2), d, depth, 1e-14,
                                 [&](const Vec3 &xi, double w) { s += w / norm(g.map(xi)); });
        const double err = std::abs(s - exact);
        EXPECT_LT(err, prev_err);
        prev_err = err;
    }
    EXPECT_LT(prev_err, 1e-3);
    double area = 0.0;
    detail::integrate_graded(g, 2, quadrature(2, 2), d, 7, 1e-14, [&](const Vec3 &, double w) { area += w; });
    EXPECT_NEAR(area, 0.5, 1e-14);
}

TEST(Weighted, NormOfConstantOnSquare) {
    const Domain d = load_domain(fixtures::square2d_text());
    const SimplicialMesh m = mesh2(d, 1);
    const DerivField one{[](const Vec3 &) { return 1.0; }, [](const Vec3 &) { return Vec3{0, 0, 0}; },
                         [](const Vec3 &) { return std::array<double, 6>{}; }};
    for (int order : {0, 1, 2}) {
        WeightedNormSpec spec;
        spec.m = order;
        spec.a = 0.0;
        EXPECT_NEAR(weighted_norm_value(one, d, m, spec), 1.0, 1e-13);
    }
}

TEST(Weighted, UnweightedNormIsL2) {
    const Domain d = load_domain(fixtures::square2d_text());
    const SimplicialMesh m = mesh2(d, 2);
    const DerivField xy{[](const Vec3 &x) { return x[0] * x[1]; }, [](const Vec3 &x) { return Vec3{x[1], x[0], 0}; },
                        [](const Vec3 &) { return std::array<double, 6>{0, 0, 0, 1, 0, 0}; }};
    WeightedNormSpec spec;
    spec.m = 0;
    spec.a = 0.0;
    EXPECT_NEAR(weighted_norm_value(xy, d, m, spec), 1.0 / 3.0, 1e-14);
    // homogeneity
    const DerivField twice{[](const Vec3 &x) { return 2 * x[0] * x[1]; },
                           [](const Vec3 &x) { return Vec3{2 * x[1], 2 * x[0], 0}; },
                           [](const Vec3 &) { return std::array<double, 6>{0, 0, 0, 2, 0, 0}; }};
    spec.m = 2;
    spec.a = 0.7;
    EXPECT_NEAR(weighted_norm_value(twice, d, m, spec), 2 * weighted_norm_value(xy, d, m, spec), 1e-12);
}

TEST(Weighted, SingularFunctionMembership) {
    Domain d = lshape();
    d.grading.kappa_global = 0.5;
    const SimplicialMesh m = mesh2(d, 2);
    const DerivField u = as_deriv_field(corner_singular_function(d, CornerId::vertex(2), 0.3, 0.9));
    WeightedNormSpec spec;
    spec.m = 2;
    spec.a = 1.5;
    const auto inside = weighted_norm_sweep(u, d, m, spec, 10);
    EXPECT_TRUE(sweep_stabilizes(inside));
    EXPECT_FALSE(sweep_monotone_growth(inside));
    spec.a = 1.9;
    const auto outside = weighted_norm_sweep(u, d, m, spec, 10);
    EXPECT_FALSE(sweep_stabilizes(outside));
    EXPECT_TRUE(sweep_monotone_growth(outside));
    const WeightedNormResult r = weighted_norm(u, d, m, {2, 1.5, 10, 6});
    EXPECT_NEAR(r.value, inside.back().value, 1e-14 * r.value);
    EXPECT_NEAR(r.rel_change, inside.back().rel_change, 1e-12);
}

TEST(Weighted, HardyMonotoneInDirichletSet) {
    // Dirichlet sets {1,3} within {1,2,3} within {0,1,2,3}
    const Domain small = load_domain(fixtures::square2d_text("NDND"));
    const Domain mid = load_domain(fixtures::square2d_text("NDDD"));
    const Domain full = load_domain(fixtures::square2d_text("DDDD"));
    for (int n : {1, 3}) {
        const double ls = hardy_min_eigenvalue(mesh2(small, n), small).lambda_min;
        const double lm = hardy_min_eigenvalue(mesh2(mid, n), mid).lambda_min;
        const double lf = hardy_min_eigenvalue(mesh2(full, n), full).lambda_min;
        EXPECT_GT(ls, 0.0);
        EXPECT_LE(ls, lm * (1 + 1e-9));
        EXPECT_LE(lm, lf * (1 + 1e-9));
    }
}

TEST(Weighted, HardyAdjacentNeumannDecays) {
    const Domain d = load_domain(fixtures::square2d_text("NNDD"));
    double prev = std::numeric_limits<double>::infinity();
    const auto seq = mesh2_sequence(d, d.grading, 4);
    for (const auto &g : seq) {
        const double l = hardy_min_eigenvalue(g.mesh, d).lambda_min;
        EXPECT_LT(l, prev);
        prev = l;
    }
}

TEST(Weighted, HardyMassIsSymmetricPositive) {
    const Domain d = lshape();
    const SimplicialMesh m = mesh2(d, 1);
    const DofMap dm = build_dofmap(m, 2);
    const CsrMatrix mw = assemble_hardy_mass(m, dm, d);
    for (int i = 0; i < mw.n; ++i) {
        EXPECT_GT(mw.at(i, i), 0.0);
        for (int k = mw.row_ptr[i]; k < mw.row_ptr[i + 1]; ++k) EXPECT_NEAR(mw.val[k], mw.at(mw.col[k], i), 1e-10 * mw.at(i, i));
    }
}
