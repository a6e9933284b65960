#include "polygrade/fem.hpp"
#include "polygrade/fixtures.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace polygrade;

namespace {

SimplicialMesh lshape_mesh(int levels, double kappa) {
    Domain d = load_domain(fixtures::lshape2d_text());
    d.grading.kappa_global = kappa;
    return mesh2_sequence(d, d.grading, levels).back().mesh;
}

SimplicialMesh wedge_mesh(int levels) {
    Domain d = load_domain(fixtures::prismwedge3d_text());
    d.grading.kappa_global = 0.25;
    Decomposition dec = builtin_decomposition("prismwedge3d", d);
    for (int n = 0; n < levels; ++n) dec = refine_decomposition(dec, d, d.grading);
    return tetrahedralize(dec, &d);
}

struct Poly {
    std::function<double(const Vec3 &)> u, f;
};

/// Polynomial of exact degree m and its load -Laplace(u).
Poly patch_polynomial(int m, int dim) {
    if (m == 1)
        return {[](const Vec3 &x) { return 1 + 2 * x[0] - 3 * x[1] + 0.5 * x[2]; }, [](const Vec3 &) { return 0.0; }};
    if (m == 2) {
        if (dim == 2) return {[](const Vec3 &x) { return x[0] * x[0] + 3 * x[0] * x[1] + x[0]; }, [](const Vec3 &) { return -2.0; }};
        return {[](const Vec3 &x) { return x[0] * x[0] + 3 * x[0] * x[1] + x[2] * x[2] + x[0]; },
                [](const Vec3 &) { return -4.0; }};
    }
    if (dim == 2)
        return {[](const Vec3 &x) { return x[0] * x[0] * x[0] + x[0] * x[1] * x[1] + x[1]; },
                [](const Vec3 &x) { return -8 * x[0]; }};
    return {[](const Vec3 &x) { return x[0] * x[0] * x[0] + x[1] * x[2] * x[2]; },
            [](const Vec3 &x) { return -6 * x[0] - 2 * x[1]; }};
}

SimplicialMesh single_cell(int dim) {
    SimplicialMesh m;
    m.dim = dim;
    m.points = {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}};
    if (dim == 3) m.points.push_back({0, 0, 1});
    m.cells.push_back({0, 1, 2, dim == 3 ? 3 : -1});
    return m;
}

void expect_matrix(const std::vector<double> &k, const std::vector<double> &ref, double tol) {
    ASSERT_EQ(k.size(), ref.size());
    for (std::size_t i = 0; i < k.size(); ++i) EXPECT_NEAR(k[i], ref[i], tol) << i;
}

} // namespace

TEST(Fem, ReferenceTriangleStiffness) {
    const SimplicialMesh m = single_cell(2);
    expect_matrix(element_stiffness(m, 0, 1), {1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5}, 1e-14);
    // vertices, then edge nodes 01, 02, 12
    const LagrangeBasis b(2, 2);
    ASSERT_EQ(b.node(3), (std::array<int, 4>{1, 1, 0, 0}));
    ASSERT_EQ(b.node(4), (std::array<int, 4>{1, 0, 1, 0}));
    ASSERT_EQ(b.node(5), (std::array<int, 4>{0, 1, 1, 0}));
    const double s = 1.0 / 6, t = 2.0 / 3, e = 8.0 / 3, h = 4.0 / 3;
    expect_matrix(element_stiffness(m, 0, 2),
                  {1, s, s, -t, -t, 0,   s, 0.5, 0, -t, 0, 0,   s, 0, 0.5, 0, -t, 0,
                   -t, -t, 0, e, 0, -h,  -t, 0, -t, 0, e, -h,   0, 0, 0, -h, -h, e},
                  1e-14);
}

TEST(Fem, ReferenceTetrahedronStiffness) {
    const SimplicialMesh m = single_cell(3);
    const double a = 1.0 / 6;
    expect_matrix(element_stiffness(m, 0, 1), {0.5, -a, -a, -a, -a, a, 0, 0, -a, 0, a, 0, -a, 0, 0, a}, 1e-14);
}

TEST(Fem, PatchTests) {
    for (int dim : {2, 3})
        for (int m = 1; m <= 3; ++m) {
            if (dim == 3 && m == 3) continue;
            const SimplicialMesh mesh = dim == 2 ? lshape_mesh(2, 0.25) : wedge_mesh(1);
            const DofMap dm = build_dofmap(mesh, m);
            const Poly p = patch_polynomial(m, dim);
            CgOptions opt;
            opt.rtol = 1e-14;
            const SolveResult sol = solve_poisson(mesh, dm, p.f, p.u, opt);
            const auto exact = interpolate(p.u, dm);
            double err = 0.0;
            for (int i = 0; i < dm.num_dofs; ++i) err = std::max(err, std::abs(sol.coeffs[i] - exact[i]));
            EXPECT_LT(err, 1e-10) << "dim " << dim << " degree " << m;
        }
}

TEST(Fem, PatchTestLowerDegreeExact) {
    const SimplicialMesh mesh = lshape_mesh(1, 0.25);
    const Poly p = patch_polynomial(2, 2);
    const DofMap dm = build_dofmap(mesh, 3);
    CgOptions opt;
    opt.rtol = 1e-14;
    const SolveResult sol = solve_poisson(mesh, dm, p.f, p.u, opt);
    const ScalarField u{p.u, [](const Vec3 &x) { return Vec3{2 * x[0] + 3 * x[1] + 1, 3 * x[0], 0}; }, {}};
    const ErrorNorms e = error_h1(sol.coeffs, mesh, dm, u);
    EXPECT_LT(e.l2, 1e-10);
    EXPECT_LT(e.h1, 1e-10);
}

TEST(Fem, CgMatchesDenseSolve) {
    std::mt19937 rng(42);
    std::normal_distribution<double> nd;
    const int n = 50;
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::MatrixXd b(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) b(i, j) = nd(rng);
        const Eigen::MatrixXd a = b * b.transpose() + n * Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd rhs(n);
        for (int i = 0; i < n; ++i) rhs(i) = nd(rng);
        const Eigen::VectorXd ref = a.llt().solve(rhs);
        std::vector<double> dense(n * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) dense[i * n + j] = a(i, j);
        const CsrMatrix csr = csr_from_dense(dense, n);
        std::vector<double> x(n, 0.0), r(rhs.data(), rhs.data() + n);
        CgOptions opt;
        opt.rtol = 1e-14;
        solve_cg(csr, r, x, opt);
        for (int i = 0; i < n; ++i) EXPECT_NEAR(x[i], ref(i), 1e-8);
    }
}

TEST(Fem, CgReportsFailure) {
    const CsrMatrix indefinite = csr_from_dense({1, 0, 0, -1}, 2);
    std::vector<double> x(2, 0.0), b{1, 1};
    EXPECT_THROW(solve_cg(indefinite, b, x), NumericalError);
    const CsrMatrix spd = csr_from_dense({4, 1, 1, 3}, 2);
    CgOptions opt;
    opt.max_iter = 1;
    opt.rtol = 1e-15;
    std::vector<double> y(2, 0.0);
    EXPECT_THROW(solve_cg(spd, b, y, opt), NumericalError);
}

TEST(Fem, DofCounts) {
    for (int dim : {2, 3}) {
        const SimplicialMesh mesh = dim == 2 ? lshape_mesh(2, 0.25) : wedge_mesh(1);
        std::set<std::pair<int, int>> edges;
        std::set<std::array<int, 3>> faces;
        const int nb = dim + 1;
        for (const auto &c : mesh.cells) {
            for (int i = 0; i < nb; ++i)
                for (int j = i + 1; j < nb; ++j) edges.insert({std::min(c[i], c[j]), std::max(c[i], c[j])});
            for (int skip = 0; skip < nb; ++skip) {
                std::vector<int> f;
                for (int k = 0; k < nb; ++k)
                    if (k != skip) f.push_back(c[k]);
                std::sort(f.begin(), f.end());
                faces.insert({f[0], f[1], dim == 3 ? f[2] : -1});
            }
        }
        const std::size_t nv = mesh.points.size(), ne = edges.size();
        const std::size_t nf = dim == 2 ? mesh.num_cells() : faces.size();
        EXPECT_EQ(static_cast<std::size_t>(build_dofmap(mesh, 1).num_dofs), nv);
        EXPECT_EQ(static_cast<std::size_t>(build_dofmap(mesh, 2).num_dofs), nv + ne);
        EXPECT_EQ(static_cast<std::size_t>(build_dofmap(mesh, 3).num_dofs), nv + 2 * ne + nf);
    }
}

TEST(Fem, StiffnessSymmetricWithZeroRowSums) {
    for (int m = 1; m <= 3; ++m) {
        const SimplicialMesh mesh = lshape_mesh(2, 0.25);
        const DofMap dm = build_dofmap(mesh, m);
        const SparseSystem sys = assemble(mesh, dm, {});
        const CsrMatrix &a = sys.matrix;
        double scale = 0.0;
        for (double v : a.val) scale = std::max(scale, std::abs(v));
        for (int i = 0; i < a.n; ++i) {
            double row = 0.0;
            for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
                row += a.val[k];
                EXPECT_NEAR(a.val[k], a.at(a.col[k], i), 1e-13 * scale);
            }
            EXPECT_NEAR(row, 0.0, 1e-12 * scale);
        }
    }
}

TEST(Fem, MassMatrixIntegratesArea) {
    const SimplicialMesh mesh = wedge_mesh(1);
    const DofMap dm = build_dofmap(mesh, 2);
    const CsrMatrix m = assemble_mass(mesh, dm);
    double total = 0.0;
    for (double v : m.val) total += v;
    EXPECT_NEAR(total, 3.0, 1e-12);
}

TEST(Fem, AssemblyIndependentOfThreads) {
    const SimplicialMesh mesh = lshape_mesh(5, 0.25);
    const DofMap dm = build_dofmap(mesh, 2);
    const auto f = [](const Vec3 &x) { return std::sin(3 * x[0]) + x[1]; };
    setenv("POLYGRADE_THREADS", "1", 1);
    const SparseSystem one = assemble(mesh, dm, f);
    const SolveResult s1 = solve_poisson(mesh, dm, f, {});
    setenv("POLYGRADE_THREADS", "4", 1);
    const SparseSystem four = assemble(mesh, dm, f);
    const SolveResult s4 = solve_poisson(mesh, dm, f, {});
    unsetenv("POLYGRADE_THREADS");
    EXPECT_EQ(one.matrix.val, four.matrix.val);
    EXPECT_EQ(one.rhs, four.rhs);
    EXPECT_EQ(s1.coeffs, s4.coeffs);
}

TEST(Fem, PureNeumannRejected) {
    Domain d = load_domain(fixtures::square2d_text("NNNN"));
    const SimplicialMesh mesh = initial_mesh2(d).mesh;
    const DofMap dm = build_dofmap(mesh, 1);
    EXPECT_EQ(dm.num_dirichlet(), 0);
    EXPECT_THROW(solve_poisson(mesh, dm, {}, {}), ValidationError);
}

TEST(Fem, DirichletDofsOnDirichletFacetsOnly) {
    Domain d = load_domain(fixtures::square2d_text("NDND"));
    const SimplicialMesh mesh = mesh2_sequence(d, d.grading, 2).back().mesh;
    const DofMap dm = build_dofmap(mesh, 2);
    for (int i = 0; i < dm.num_dofs; ++i) {
        const Vec3 &x = dm.node_points[i];
        const bool on_d = std::abs(x[0] - 1) < 1e-14 || std::abs(x[0]) < 1e-14;
        EXPECT_EQ(static_cast<bool>(dm.dirichlet[i]), on_d) << x[0] << ' ' << x[1];
    }
}

TEST(Fem, NonFiniteDataRejected) {
    const SimplicialMesh mesh = lshape_mesh(0, 0.25);
    const DofMap dm = build_dofmap(mesh, 1);
    EXPECT_THROW(interpolate([](const Vec3 &) { return std::nan(""); }, dm), NumericalError);
}
