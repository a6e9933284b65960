#pragma once

#include "polygrade/fem.hpp"

namespace polygrade {

/// Function with derivatives up to order two. hessian returns (xx, yy, zz, xy, xz, yz).
struct DerivField {
    std::function<double(const Vec3 &)> value;
    std::function<Vec3(const Vec3 &)> grad;
    std::function<std::array<double, 6>(const Vec3 &)> hessian;
};

/// Quintic cutoff: 1 for r <= r1, 0 for r >= r2, C^2 at both ends. Returns (chi, chi', chi'').
inline std::array<double, 3> cutoff(double r, double r1, double r2) {
    if (r <= r1) return {1.0, 0.0, 0.0};
    if (r >= r2) return {0.0, 0.0, 0.0};
    const double h = r2 - r1, t = (r - r1) / h;
    const double t2 = t * t, t3 = t2 * t;
    return {1.0 - (10 * t3 - 15 * t2 * t2 + 6 * t3 * t2), -(30 * t2 - 60 * t3 + 30 * t2 * t2) / h,
            -(60 * t - 180 * t2 + 120 * t3) / (h * h)};
}

/// r^(pi/alpha) sin(pi theta/alpha) chi(r) in a local frame at a corner (2D) or along an edge (3D,
/// optionally times sin(pi t) for the axial coordinate t scaled to the edge). theta is measured
/// from e1 toward e2; r and theta live in the plane orthogonal to e3.
struct CornerSingularFunction {
    Vec3 apex{0, 0, 0};
    Vec3 e1{1, 0, 0}, e2{0, 1, 0}, e3{0, 0, 1};
    double alpha = 1.5 * pi;
    double r1 = 0.3, r2 = 0.9;
    bool axial = false;  // multiply by w = sin(pi (t - t0) / (t1 - t0)), t = (x - apex).e3
    double t0 = 0.0, t1 = 1.0;
    bool pure = false;   // no cutoff

    double exponent() const { return pi / alpha; }
};

struct SingularEval {
    double value = 0.0;
    Vec3 grad{0, 0, 0};
    double laplacian = 0.0;
    std::array<double, 6> hessian{}; // xx, yy, zz, xy, xz, yz
    bool gradient_bounded = true;
};

inline SingularEval eval_singular(const CornerSingularFunction &sf, const Vec3 &x) {
    SingularEval out;
    const Vec3 d = x - sf.apex;
    const double px = dot(d, sf.e1), py = dot(d, sf.e2);
    const double r = std::hypot(px, py);
    const double lam = sf.exponent();
    double theta = std::atan2(py, px);
    // legs sit at theta = 0 and theta = alpha; points just below the first leg round to theta ~ 0
    if (theta < 0) theta += 2 * pi;
    if (theta > 0.5 * (sf.alpha + 2 * pi)) theta -= 2 * pi;
    double w = 1.0, dw = 0.0, d2w = 0.0;
    if (sf.axial) {
        const double len = sf.t1 - sf.t0, t = (dot(d, sf.e3) - sf.t0) / len;
        w = std::sin(pi * t);
        dw = pi / len * std::cos(pi * t);
        d2w = -(pi / len) * (pi / len) * w;
    }
    const auto chi = sf.pure ? std::array<double, 3>{1.0, 0.0, 0.0} : cutoff(r, sf.r1, sf.r2);
    if (r == 0.0) {
        out.gradient_bounded = lam >= 1.0;
        return out;
    }
    if (chi[0] == 0.0 && chi[1] == 0.0 && chi[2] == 0.0) return out;
    const double rl = std::pow(r, lam);
    const double s = rl * std::sin(lam * theta);
    // local in-plane derivatives of s = Im z^lam
    const double c1 = lam * rl / r;
    const double sx = c1 * std::sin((lam - 1) * theta), sy = c1 * std::cos((lam - 1) * theta);
    const double c2 = lam * (lam - 1) * rl / (r * r);
    const double sxx = c2 * std::sin((lam - 2) * theta), sxy = c2 * std::cos((lam - 2) * theta), syy = -sxx;
    // chi(r): gradient chi' e_r, hessian chi'' e_r e_r + chi'/r e_t e_t
    const double er[2] = {px / r, py / r}, et[2] = {-py / r, px / r};
    const double cx = chi[1] * er[0], cy = chi[1] * er[1];
    const double cxx = chi[2] * er[0] * er[0] + chi[1] / r * et[0] * et[0];
    const double cyy = chi[2] * er[1] * er[1] + chi[1] / r * et[1] * et[1];
    const double cxy = chi[2] * er[0] * er[1] + chi[1] / r * et[0] * et[1];
    // S = s chi in the plane
    const double S = s * chi[0];
    const double Sx = sx * chi[0] + s * cx, Sy = sy * chi[0] + s * cy;
    const double Sxx = sxx * chi[0] + 2 * sx * cx + s * cxx;
    const double Syy = syy * chi[0] + 2 * sy * cy + s * cyy;
    const double Sxy = sxy * chi[0] + sx * cy + sy * cx + s * cxy;
    // u = S w(t); local hessian in (e1, e2, e3)
    const double lv = S * w;
    const double lg[3] = {Sx * w, Sy * w, S * dw};
    const double lh[3][3] = {{Sxx * w, Sxy * w, Sx * dw}, {Sxy * w, Syy * w, Sy * dw}, {Sx * dw, Sy * dw, S * d2w}};
    out.value = lv;
    const Vec3 basis[3] = {sf.e1, sf.e2, sf.e3};
    for (int i = 0; i < 3; ++i) out.grad = out.grad + lg[i] * basis[i];
    // global hessian H = R lh R^T with R columns e1 e2 e3
    double h[3][3] = {};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double v = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) v += basis[i][a] * lh[i][j] * basis[j][b];
            h[a][b] = v;
        }
    out.hessian = {h[0][0], h[1][1], h[2][2], h[0][1], h[0][2], h[1][2]};
    out.laplacian = lh[0][0] + lh[1][1] + lh[2][2];
    return out;
}

/// Singular function attached to a 2D corner (vertex id) or a 3D singular edge of the domain.
/// theta starts on the boundary leg/face leaving the corner in the domain's orientation. Throws if
/// the cutoff ball reaches boundary facets other than the two legs.
inline CornerSingularFunction corner_singular_function(const Domain &domain, const CornerId &corner, double r1,
                                                       double r2) {
    if (!(0 < r1 && r1 < r2)) throw ValidationError("cutoff radii must satisfy 0 < R1 < R2");
    CornerSingularFunction sf;
    sf.r1 = r1;
    sf.r2 = r2;
    sf.alpha = domain.opening(corner);
    if (domain.dimension == 2) {
        if (corner.is_edge()) throw ValidationError("2D corners are vertices");
        const auto &loop = domain.boundary_loop();
        const auto it = std::find(loop.begin(), loop.end(), corner.a);
        const std::size_t i = static_cast<std::size_t>(it - loop.begin());
        const int next = loop[(i + 1) % loop.size()];
        sf.apex = domain.vertices[corner.a];
        sf.e1 = normalized(domain.vertices[next] - sf.apex);
        sf.e3 = {0, 0, 1};
        sf.e2 = cross(sf.e3, sf.e1);
        for (std::size_t f = 0; f < domain.facets.size(); ++f) {
            const auto &s = domain.facets[f].vertices;
            const bool leg = s[0] == corner.a || s[1] == corner.a;
            const double dist = point_segment_distance(sf.apex, domain.vertices[s[0]], domain.vertices[s[1]]);
            if (!leg && dist < r2) throw ValidationError("cutoff ball exits the domain near corner " + to_string(corner));
            if (leg && distance(domain.vertices[s[0]], domain.vertices[s[1]]) < r2)
                throw ValidationError("cutoff ball longer than a leg at corner " + to_string(corner));
        }
        return sf;
    }
    if (!corner.is_edge()) throw ValidationError("3D singular functions are attached to singular edges");
    const Vec3 pa = domain.vertices[corner.a], pb = domain.vertices[corner.b];
    for (std::size_t f = 0; f < domain.facets.size(); ++f) {
        const auto &poly = domain.facets[f].vertices;
        for (std::size_t k = 0; k < poly.size(); ++k) {
            const int u = poly[k], v = poly[(k + 1) % poly.size()];
            if (!((u == corner.a && v == corner.b) || (u == corner.b && v == corner.a))) continue;
            const Vec3 d = normalized(domain.vertices[v] - domain.vertices[u]);
            const Vec3 n1 = domain.facet_normal(static_cast<int>(f));
            sf.apex = pa;
            sf.e1 = normalized(cross(n1, d));
            sf.e3 = -1.0 * d;
            sf.e2 = cross(sf.e3, sf.e1);
            sf.axial = true;
            const double tb = dot(pb - pa, sf.e3);
            sf.t0 = std::min(0.0, tb);
            sf.t1 = std::max(0.0, tb);
            return sf;
        }
    }
    throw ValidationError("singular edge " + to_string(corner) + " is not a facet edge");
}

inline DerivField as_deriv_field(const CornerSingularFunction &sf) {
    return {[sf](const Vec3 &x) { return eval_singular(sf, x).value; },
            [sf](const Vec3 &x) { return eval_singular(sf, x).grad; },
            [sf](const Vec3 &x) { return eval_singular(sf, x).hessian; }};
}

/// Exact solution u, its gradient and f = -Laplace(u) for a singular function problem.
inline ScalarField manufactured_problem(const CornerSingularFunction &sf) {
    return {[sf](const Vec3 &x) { return eval_singular(sf, x).value; },
            [sf](const Vec3 &x) { return eval_singular(sf, x).grad; },
            [sf](const Vec3 &x) { return eval_singular(sf, x).laplacian; }};
}

/// prod_i sin(pi x_i) over the first dim coordinates: smooth baseline solution.
inline ScalarField smooth_solution(int dim) {
    return {[dim](const Vec3 &x) {
                double v = 1.0;
                for (int i = 0; i < dim; ++i) v *= std::sin(pi * x[i]);
                return v;
            },
            [dim](const Vec3 &x) {
                Vec3 g{0, 0, 0};
                for (int i = 0; i < dim; ++i) {
                    double v = pi * std::cos(pi * x[i]);
                    for (int j = 0; j < dim; ++j)
                        if (j != i) v *= std::sin(pi * x[j]);
                    g[i] = v;
                }
                return g;
            },
            [dim](const Vec3 &x) {
                double v = 1.0;
                for (int i = 0; i < dim; ++i) v *= std::sin(pi * x[i]);
                return -dim * pi * pi * v;
            }};
}

namespace detail {

/// Integrates over one cell, recursively red-subdividing (ratio 1/2) sub-simplices that touch the
/// singular set, down to `depth` levels. f receives the parent-reference point and the physical weight.
template <class F>
void integrate_graded(const CellGeometry &g, int dim, const QuadratureRule &q, const Domain &domain, int depth,
                      double tol, F &&f) {
    struct Sub {
        std::array<Vec3, 4> v;
        int level;
    };
    std::vector<Sub> stack;
    Sub root;
    root.v[0] = {0, 0, 0};
    for (int k = 0; k < dim; ++k) {
        root.v[k + 1] = {0, 0, 0};
        root.v[k + 1][k] = 1.0;
    }
    root.level = 0;
    stack.push_back(root);
    const double ref_measure = dim == 2 ? 0.5 : 1.0 / 6.0;
    while (!stack.empty()) {
        const Sub s = stack.back();
        stack.pop_back();
        bool touches = false;
        if (s.level < depth)
            for (int k = 0; k <= dim && !touches; ++k) touches = domain.singular_distance(g.map(s.v[k])) <= tol;
        if (touches) {
            std::array<Vec3, 10> m{};
            int idx[4][4];
            int n = 0;
            for (int i = 0; i <= dim; ++i)
                for (int j = i + 1; j <= dim; ++j) {
                    m[n] = lerp(s.v[i], s.v[j], 0.5);
                    idx[i][j] = idx[j][i] = n++;
                }
            auto M = [&](int i, int j) { return m[idx[i][j]]; };
            const int lv = s.level + 1;
            if (dim == 2) {
                stack.push_back({{s.v[0], M(0, 1), M(0, 2), Vec3{}}, lv});
                stack.push_back({{M(0, 1), s.v[1], M(1, 2), Vec3{}}, lv});
                stack.push_back({{M(0, 2), M(1, 2), s.v[2], Vec3{}}, lv});
                stack.push_back({{M(0, 1), M(1, 2), M(0, 2), Vec3{}}, lv});
            } else {
                const auto &x = s.v;
                stack.push_back({{x[0], M(0, 1), M(0, 2), M(0, 3)}, lv});
                stack.push_back({{M(0, 1), x[1], M(1, 2), M(1, 3)}, lv});
                stack.push_back({{M(0, 2), M(1, 2), x[2], M(2, 3)}, lv});
                stack.push_back({{M(0, 3), M(1, 3), M(2, 3), x[3]}, lv});
                stack.push_back({{M(0, 1), M(0, 2), M(0, 3), M(1, 3)}, lv});
                stack.push_back({{M(0, 1), M(0, 2), M(1, 2), M(1, 3)}, lv});
                stack.push_back({{M(0, 2), M(0, 3), M(1, 3), M(2, 3)}, lv});
                stack.push_back({{M(0, 2), M(1, 2), M(1, 3), M(2, 3)}, lv});
            }
            continue;
        }
        // affine map of the sub-simplex inside the reference cell
        std::array<Vec3, 3> e{};
        for (int k = 0; k < dim; ++k) e[k] = s.v[k + 1] - s.v[0];
        double det;
        if (dim == 2) det = std::abs(e[0][0] * e[1][1] - e[0][1] * e[1][0]);
        else det = std::abs(dot(e[0], cross(e[1], e[2])));
        (void)ref_measure;
        for (std::size_t iq = 0; iq < q.size(); ++iq) {
            Vec3 xi = s.v[0];
            for (int k = 0; k < dim; ++k) xi = xi + q.points[iq][k] * e[k];
            f(xi, q.weights[iq] * det * g.det);
        }
    }
}

} // namespace detail

/// Weighted-norm parameters: derivative order m, weight index a, near-singular refinement depth.
struct WeightedNormSpec {
    int m = 0;
    double a = 0.0;
    int depth = 6;
    int quad_order = 6;
};

struct WeightedNormResult {
    double value = 0.0;
    double rel_change = 0.0; // |N(depth) - N(depth-1)| / N(depth)
};

/// sqrt( sum_{|alpha| <= m} int r^{2(|alpha| - a)} |d^alpha u|^2 ) over the mesh cells, without the
/// stability estimate.
inline double weighted_norm_value(const DerivField &u, const Domain &domain, const SimplicialMesh &mesh,
                                  const WeightedNormSpec &spec) {
    if (spec.m < 0 || spec.m > 2) throw ValidationError("weighted norm order must be 0, 1 or 2");
    const QuadratureRule &q = quadrature(spec.quad_order, mesh.dim);
    const double tol = 1e-12 * domain.diameter();
    std::vector<double> cell_sum(mesh.num_cells(), 0.0);
    [[maybe_unused]] const int nt = worker_threads();
    std::exception_ptr err;
#pragma omp parallel for num_threads(nt) schedule(dynamic, 64)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(mesh.num_cells()); ++c) {
        try {
            const CellGeometry g = cell_geometry(mesh, c);
            double s = 0.0;
            detail::integrate_graded(g, mesh.dim, q, domain, spec.depth, tol, [&](const Vec3 &xi, double w) {
                const Vec3 x = g.map(xi);
                const double r = domain.singular_distance(x);
                const double v = u.value(x);
                double term = std::pow(r, -2 * spec.a) * v * v;
                if (spec.m >= 1) {
                    const Vec3 gr = u.grad(x);
                    term += std::pow(r, 2 * (1 - spec.a)) * dot(gr, gr);
                }
                if (spec.m >= 2) {
                    const auto h = u.hessian(x);
                    double hs = 0.0;
                    for (double e : h) hs += e * e;
                    term += std::pow(r, 2 * (2 - spec.a)) * hs;
                }
                s += w * term;
            });
            cell_sum[c] = s;
        } catch (...) {
#pragma omp critical
            err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    double total = 0.0;
    for (double s : cell_sum) total += s;
    return std::sqrt(total);
}

/// Weighted norm with the change under one extra refinement depth as stability estimate.
inline WeightedNormResult weighted_norm(const DerivField &u, const Domain &domain, const SimplicialMesh &mesh,
                                        const WeightedNormSpec &spec) {
    WeightedNormResult r;
    r.value = weighted_norm_value(u, domain, mesh, spec);
    if (spec.depth > 0) {
        WeightedNormSpec prev = spec;
        prev.depth -= 1;
        const double p = weighted_norm_value(u, domain, mesh, prev);
        r.rel_change = r.value > 0 ? std::abs(r.value - p) / r.value : 0.0;
    }
    return r;
}

struct NormSweepRow {
    int depth = 0;
    double value = 0.0;
    double rel_change = 0.0;
};

/// Quadrature-depth sweep 0..max_depth.
inline std::vector<NormSweepRow> weighted_norm_sweep(const DerivField &u, const Domain &domain,
                                                     const SimplicialMesh &mesh, WeightedNormSpec spec, int max_depth) {
    std::vector<NormSweepRow> rows;
    for (int d = 0; d <= max_depth; ++d) {
        spec.depth = d;
        NormSweepRow row{d, weighted_norm_value(u, domain, mesh, spec), 0.0};
        if (!rows.empty()) row.rel_change = std::abs(row.value - rows.back().value) / row.value;
        rows.push_back(row);
    }
    return rows;
}

/// Sweep verdict: stable when some extra depth changes the norm by less than `threshold`
/// (relative) and the remaining sweep stays below it; divergent when the values keep growing.
inline bool sweep_stabilizes(const std::vector<NormSweepRow> &rows, double threshold = 0.02) {
    return rows.size() >= 2 && rows.back().rel_change < threshold;
}

inline bool sweep_monotone_growth(const std::vector<NormSweepRow> &rows, double threshold = 0.02) {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].value > rows[i - 1].value)) return false;
    return rows.size() >= 2 && rows.back().rel_change >= threshold;
}

/// Mass matrix with weight r^-2, elements touching the singular set integrated with the graded rule.
inline CsrMatrix assemble_hardy_mass(const SimplicialMesh &mesh, const DofMap &dm, const Domain &domain, int depth = 6) {
    const LagrangeBasis basis(dm.degree, mesh.dim);
    const QuadratureRule &q = quadrature(2 * dm.degree + 2, mesh.dim);
    const double tol = 1e-12 * domain.diameter();
    CsrMatrix m = sparsity_pattern(dm);
    const int nl = dm.nloc;
    detail::assemble_blocked(mesh, dm, m, nullptr, [&](std::size_t c, double *ke, double *) {
        const CellGeometry g = cell_geometry(mesh, c);
        std::fill(ke, ke + nl * nl, 0.0);
        std::vector<double> phi(nl);
        detail::integrate_graded(g, mesh.dim, q, domain, depth, tol, [&](const Vec3 &xi, double w) {
            const double r = domain.singular_distance(g.map(xi));
            basis.eval(LagrangeBasis::barycentric(xi, mesh.dim), phi.data());
            const double wr = w / (r * r);
            for (int i = 0; i < nl; ++i)
                for (int j = 0; j < nl; ++j) ke[i * nl + j] += wr * phi[i] * phi[j];
        });
    });
    return m;
}

struct HardyResult {
    double lambda_min = 0.0;
    int sweeps = 0;
    int dofs = 0;
};

/// Smallest eigenvalue of K v = lambda M_w v on the free dofs (boundary flags of the mesh decide
/// which dofs are free) by inverse power iteration with CG inner solves.
inline HardyResult hardy_min_eigenvalue(const SimplicialMesh &mesh, const Domain &domain, int degree = 1,
                                        int depth = 6, double tol = 1e-9, int max_sweeps = 3000) {
    const DofMap dm = build_dofmap(mesh, degree);
    const SparseSystem sys = assemble(mesh, dm, {});
    const ReducedSystem red = apply_dirichlet(sys, dm, {});
    const CsrMatrix &k = red.system.matrix;
    const CsrMatrix mw = restrict_matrix(assemble_hardy_mass(mesh, dm, domain, depth), red);
    const int n = k.n;
    HardyResult res;
    res.dofs = n;
    std::vector<double> v(n, 1.0), mv(n), x(n, 0.0), kx(n);
    auto mnorm = [&](std::vector<double> &y) {
        spmv(mw, y, mv);
        const double s = std::sqrt(dot(std::span<const double>(y), std::span<const double>(mv)));
        for (double &e : y) e /= s;
    };
    mnorm(v);
    double lambda = 0.0;
    CgOptions opt;
    opt.rtol = 1e-12;
    for (int it = 1; it <= max_sweeps; ++it) {
        spmv(mw, v, mv);
        // warm start: K^{-1} M v ~ v / lambda
        for (int i = 0; i < n; ++i) x[i] = lambda > 0 ? v[i] / lambda : 0.0;
        solve_cg(k, mv, x, opt);
        mnorm(x);
        spmv(k, x, kx);
        const double next = dot(std::span<const double>(x), std::span<const double>(kx)); // M-normalized
        v.swap(x);
        res.sweeps = it;
        if (lambda > 0 && std::abs(next - lambda) <= tol * next) {
            res.lambda_min = next;
            return res;
        }
        lambda = next;
    }
    throw NumericalError("inverse power iteration did not converge in " + std::to_string(max_sweeps) + " sweeps",
                         lambda);
}

} // namespace polygrade
