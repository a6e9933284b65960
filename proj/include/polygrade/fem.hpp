#pragma once

#include "polygrade/basis.hpp"
#include "polygrade/mesh.hpp"
#include "polygrade/quadrature.hpp"
#include "polygrade/sparse.hpp"

#include <functional>
#include <optional>
#include <unordered_set>

namespace polygrade {

/// A function with derivatives; laplacian is required only for load vectors of manufactured problems.
struct ScalarField {
    std::function<double(const Vec3 &)> value;
    std::function<Vec3(const Vec3 &)> grad;
    std::function<double(const Vec3 &)> laplacian;

    static ScalarField constant(double c) {
        return {[c](const Vec3 &) { return c; }, [](const Vec3 &) { return Vec3{0, 0, 0}; },
                [](const Vec3 &) { return 0.0; }};
    }
};

/// Global numbering of the Lagrange nodes of P_m on a simplicial mesh.
struct DofMap {
    int degree = 1;
    int dim = 2;
    int nloc = 0;
    int num_dofs = 0;
    std::vector<int> cell_dofs;       // num_cells * nloc, local order of LagrangeBasis
    std::vector<Vec3> node_points;    // physical node coordinates per dof
    std::vector<int> node_vertex;     // mesh vertex of a vertex node, -1 otherwise
    std::vector<std::uint8_t> dirichlet;

    std::span<const int> cell(std::size_t c) const { return {cell_dofs.data() + c * nloc, static_cast<std::size_t>(nloc)}; }
    int num_dirichlet() const { return static_cast<int>(std::count(dirichlet.begin(), dirichlet.end(), 1)); }
};

/// Affine map of one cell: x = x0 + J xi, with barycentric gradients.
struct CellGeometry {
    Vec3 x0{};
    std::array<Vec3, 3> jcol{};          // columns of J
    std::array<Vec3, 4> grad_lambda{};   // physical gradients of barycentric coordinates
    double det = 0.0;                    // |det J|

    Vec3 map(const Vec3 &xi) const {
        Vec3 x = x0;
        for (int c = 0; c < 3; ++c) x = x + xi[c] * jcol[c];
        return x;
    }
};

inline CellGeometry cell_geometry(const SimplicialMesh &mesh, std::size_t c) {
    CellGeometry g;
    const auto &v = mesh.cells[c];
    const auto &p = mesh.points;
    g.x0 = p[v[0]];
    if (mesh.dim == 2) {
        const Vec3 a = p[v[1]] - p[v[0]], b = p[v[2]] - p[v[0]];
        g.jcol = {a, b, Vec3{0, 0, 0}};
        const double det = a[0] * b[1] - a[1] * b[0];
        if (det == 0.0) throw NumericalError("degenerate cell Jacobian in cell " + std::to_string(c));
        g.det = std::abs(det);
        // rows of J^{-1}
        g.grad_lambda[1] = {b[1] / det, -b[0] / det, 0.0};
        g.grad_lambda[2] = {-a[1] / det, a[0] / det, 0.0};
        g.grad_lambda[0] = -1.0 * (g.grad_lambda[1] + g.grad_lambda[2]);
        return g;
    }
    const Vec3 a = p[v[1]] - p[v[0]], b = p[v[2]] - p[v[0]], d = p[v[3]] - p[v[0]];
    g.jcol = {a, b, d};
    const double det = dot(a, cross(b, d));
    if (det == 0.0) throw NumericalError("degenerate cell Jacobian in cell " + std::to_string(c));
    g.det = std::abs(det);
    g.grad_lambda[1] = (1.0 / det) * cross(b, d);
    g.grad_lambda[2] = (1.0 / det) * cross(d, a);
    g.grad_lambda[3] = (1.0 / det) * cross(a, b);
    g.grad_lambda[0] = -1.0 * (g.grad_lambda[1] + g.grad_lambda[2] + g.grad_lambda[3]);
    return g;
}

/// Shape values and barycentric derivatives tabulated at the points of a quadrature rule.
struct BasisTable {
    int nq = 0, nloc = 0, nb = 0;
    std::vector<double> phi;  // nq * nloc
    std::vector<double> dphi; // nq * nloc * nb

    BasisTable(const LagrangeBasis &basis, const QuadratureRule &q)
        : nq(static_cast<int>(q.size())), nloc(basis.size()), nb(basis.dim() + 1), phi(nq * nloc), dphi(nq * nloc * nb) {
        for (int i = 0; i < nq; ++i) {
            const auto l = LagrangeBasis::barycentric(q.points[i], basis.dim());
            basis.eval(l, &phi[i * nloc]);
            basis.eval_dlambda(l, &dphi[i * nloc * nb]);
        }
    }

    Vec3 grad(const CellGeometry &g, int q, int k) const {
        Vec3 r{0, 0, 0};
        const double *d = &dphi[(q * nloc + k) * nb];
        for (int i = 0; i < nb; ++i) r = r + d[i] * g.grad_lambda[i];
        return r;
    }
};

/// Numbers vertex nodes by vertex id, then edge nodes, then face nodes (m = 3), in order of first
/// appearance. Edge nodes are ordered from the lower to the higher vertex id so both neighbors agree.
/// Nodes on Dirichlet boundary faces are flagged.
inline DofMap build_dofmap(const SimplicialMesh &mesh, int degree) {
    const LagrangeBasis basis(degree, mesh.dim);
    DofMap dm;
    dm.degree = degree;
    dm.dim = mesh.dim;
    dm.nloc = basis.size();
    const int nv = static_cast<int>(mesh.points.size());
    const int nb = mesh.dim + 1;
    dm.cell_dofs.assign(mesh.num_cells() * dm.nloc, -1);
    std::vector<int> used(nv, 0);
    for (const auto &c : mesh.cells)
        for (int k = 0; k < nb; ++k) used[c[k]] = 1;
    std::vector<int> vdof(nv, -1);
    for (int v = 0; v < nv; ++v)
        if (used[v]) {
            vdof[v] = dm.num_dofs++;
            dm.node_points.push_back(mesh.points[v]);
            dm.node_vertex.push_back(v);
        }
    std::unordered_map<std::uint64_t, int> edge_first; // first dof of an edge's m-1 nodes
    std::unordered_map<detail::FaceKey, int, detail::FaceKeyHash> face_dof;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto &cv = mesh.cells[c];
        int *out = &dm.cell_dofs[c * dm.nloc];
        for (int k = 0; k < dm.nloc; ++k) {
            const auto &a = basis.node(k);
            std::array<int, 4> sup{};
            int ns = 0;
            for (int i = 0; i < nb; ++i)
                if (a[i] > 0) sup[ns++] = i;
            if (ns == 1) {
                out[k] = vdof[cv[sup[0]]];
            } else if (ns == 2) {
                int i = sup[0], j = sup[1];
                if (cv[i] > cv[j]) std::swap(i, j);
                // node index along the edge from the lower-id vertex: a[j] - 1
                const auto key = VertexStore::key(cv[i], cv[j]);
                auto [it, fresh] = edge_first.try_emplace(key, dm.num_dofs);
                if (fresh) {
                    for (int s = 1; s < degree; ++s) {
                        const double t = static_cast<double>(s) / degree;
                        dm.node_points.push_back(lerp(mesh.points[cv[i]], mesh.points[cv[j]], t));
                        dm.node_vertex.push_back(-1);
                    }
                    dm.num_dofs += degree - 1;
                }
                out[k] = it->second + a[j] - 1;
            } else if (ns == 3 && degree == 3) {
                const auto key = detail::sorted_face({cv[sup[0]], cv[sup[1]], cv[sup[2]]});
                auto [it, fresh] = face_dof.try_emplace(key, dm.num_dofs);
                if (fresh) {
                    Vec3 x{0, 0, 0};
                    for (int s = 0; s < 3; ++s) x = x + (1.0 / 3.0) * mesh.points[cv[sup[s]]];
                    dm.node_points.push_back(x);
                    dm.node_vertex.push_back(-1);
                    ++dm.num_dofs;
                }
                out[k] = it->second;
            } else {
                throw ValidationError("unsupported node support for degree " + std::to_string(degree));
            }
        }
    }
    // Dirichlet flags from boundary faces.
    dm.dirichlet.assign(dm.num_dofs, 0);
    std::unordered_set<int> dverts;
    std::unordered_set<std::uint64_t> dedges;
    std::unordered_set<detail::FaceKey, detail::FaceKeyHash> dfaces;
    for (const auto &bf : mesh.boundary) {
        if (bf.flag != BoundaryFlag::Dirichlet) continue;
        const int n = mesh.dim;
        for (int i = 0; i < n; ++i) {
            dverts.insert(bf.v[i]);
            for (int j = i + 1; j < n; ++j) dedges.insert(VertexStore::key(bf.v[i], bf.v[j]));
        }
        if (n == 3) dfaces.insert(detail::sorted_face(bf.v));
    }
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto &cv = mesh.cells[c];
        for (int k = 0; k < dm.nloc; ++k) {
            const auto &a = basis.node(k);
            std::array<int, 4> sup{};
            int ns = 0;
            for (int i = 0; i < nb; ++i)
                if (a[i] > 0) sup[ns++] = cv[i];
            bool on = false;
            if (ns == 1) on = dverts.count(sup[0]) > 0;
            else if (ns == 2) on = dedges.count(VertexStore::key(sup[0], sup[1])) > 0;
            else if (ns == 3 && mesh.dim == 3) on = dfaces.count(detail::sorted_face({sup[0], sup[1], sup[2]})) > 0;
            if (on) dm.dirichlet[dm.cell_dofs[c * dm.nloc + k]] = 1;
        }
    }
    return dm;
}

/// Sparsity pattern of the P_m operator: rows/cols coupled through a common cell.
inline CsrMatrix sparsity_pattern(const DofMap &dm) {
    const std::size_t ncell = dm.cell_dofs.size() / dm.nloc;
    std::vector<int> cnt(dm.num_dofs + 1, 0);
    for (int d : dm.cell_dofs) cnt[d + 1]++;
    for (int i = 0; i < dm.num_dofs; ++i) cnt[i + 1] += cnt[i];
    std::vector<int> cells_of(cnt.back());
    std::vector<int> pos(cnt.begin(), cnt.end() - 1);
    for (std::size_t c = 0; c < ncell; ++c)
        for (int k = 0; k < dm.nloc; ++k) cells_of[pos[dm.cell_dofs[c * dm.nloc + k]]++] = static_cast<int>(c);
    CsrMatrix a;
    a.n = dm.num_dofs;
    a.row_ptr.assign(1, 0);
    std::vector<int> row;
    for (int i = 0; i < dm.num_dofs; ++i) {
        row.clear();
        for (int k = cnt[i]; k < cnt[i + 1]; ++k)
            for (int d : dm.cell(cells_of[k])) row.push_back(d);
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        a.col.insert(a.col.end(), row.begin(), row.end());
        a.row_ptr.push_back(static_cast<int>(a.col.size()));
    }
    a.val.assign(a.col.size(), 0.0);
    return a;
}

namespace detail {

/// Computes element matrices in parallel over blocks of cells and merges them in cell order, so the
/// assembled values do not depend on the thread count.
template <class ElementFn>
void assemble_blocked(const SimplicialMesh &mesh, const DofMap &dm, CsrMatrix &a, std::vector<double> *b,
                      ElementFn &&element) {
    const std::size_t ncell = mesh.num_cells();
    const int nl = dm.nloc;
    constexpr std::size_t block = 16384;
    std::vector<double> ke(block * nl * nl), fe(block * nl);
    [[maybe_unused]] const int nt = worker_threads();
    for (std::size_t c0 = 0; c0 < ncell; c0 += block) {
        const std::size_t c1 = std::min(ncell, c0 + block);
        std::exception_ptr err;
#pragma omp parallel for num_threads(nt) schedule(static)
        for (std::ptrdiff_t c = static_cast<std::ptrdiff_t>(c0); c < static_cast<std::ptrdiff_t>(c1); ++c) {
            try {
                element(static_cast<std::size_t>(c), &ke[(c - c0) * nl * nl], &fe[(c - c0) * nl]);
            } catch (...) {
#pragma omp critical
                err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
        for (std::size_t c = c0; c < c1; ++c) {
            const auto dofs = dm.cell(c);
            const double *k = &ke[(c - c0) * nl * nl];
            for (int i = 0; i < nl; ++i) {
                const int row = dofs[i];
                for (int j = 0; j < nl; ++j) a.val[a.find(row, dofs[j])] += k[i * nl + j];
                if (b) (*b)[row] += fe[(c - c0) * nl + i];
            }
        }
    }
}

} // namespace detail

/// Stiffness matrix, load vector and the dof map they refer to.
struct SparseSystem {
    CsrMatrix matrix;
    std::vector<double> rhs;
    int dofs() const { return matrix.n; }
};

/// A_ij = sum_K int_K grad phi_i . grad phi_j and b_i = sum_K int_K f phi_i, quadrature order 2m.
/// f may be empty (zero load).
inline SparseSystem assemble(const SimplicialMesh &mesh, const DofMap &dm, const std::function<double(const Vec3 &)> &f,
                             int quad_order = -1) {
    const LagrangeBasis basis(dm.degree, mesh.dim);
    const QuadratureRule &q = quadrature(quad_order < 0 ? 2 * dm.degree : quad_order, mesh.dim);
    const BasisTable tab(basis, q);
    SparseSystem sys;
    sys.matrix = sparsity_pattern(dm);
    sys.rhs.assign(dm.num_dofs, 0.0);
    const int nl = dm.nloc;
    detail::assemble_blocked(mesh, dm, sys.matrix, &sys.rhs, [&](std::size_t c, double *ke, double *fe) {
        const CellGeometry g = cell_geometry(mesh, c);
        std::fill(ke, ke + nl * nl, 0.0);
        std::fill(fe, fe + nl, 0.0);
        std::vector<Vec3> grads(nl);
        for (int iq = 0; iq < tab.nq; ++iq) {
            const double w = q.weights[iq] * g.det;
            for (int k = 0; k < nl; ++k) grads[k] = tab.grad(g, iq, k);
            for (int i = 0; i < nl; ++i)
                for (int j = 0; j < nl; ++j) ke[i * nl + j] += w * dot(grads[i], grads[j]);
            if (f) {
                const double fv = f(g.map(q.points[iq]));
                for (int i = 0; i < nl; ++i) fe[i] += w * fv * tab.phi[iq * nl + i];
            }
        }
    });
    return sys;
}

/// M_ij = sum_K int_K w(x) phi_i phi_j with an ordinary quadrature rule.
inline CsrMatrix assemble_mass(const SimplicialMesh &mesh, const DofMap &dm,
                               const std::function<double(const Vec3 &)> &weight = {}, int quad_order = -1) {
    const LagrangeBasis basis(dm.degree, mesh.dim);
    const QuadratureRule &q = quadrature(quad_order < 0 ? 2 * dm.degree + 2 : quad_order, mesh.dim);
    const BasisTable tab(basis, q);
    CsrMatrix m = sparsity_pattern(dm);
    const int nl = dm.nloc;
    detail::assemble_blocked(mesh, dm, m, nullptr, [&](std::size_t c, double *ke, double *) {
        const CellGeometry g = cell_geometry(mesh, c);
        std::fill(ke, ke + nl * nl, 0.0);
        for (int iq = 0; iq < tab.nq; ++iq) {
            double w = q.weights[iq] * g.det;
            if (weight) w *= weight(g.map(q.points[iq]));
            for (int i = 0; i < nl; ++i)
                for (int j = 0; j < nl; ++j) ke[i * nl + j] += w * tab.phi[iq * nl + i] * tab.phi[iq * nl + j];
        }
    });
    return m;
}

/// Element stiffness matrix of one cell (row-major nloc x nloc).
inline std::vector<double> element_stiffness(const SimplicialMesh &mesh, std::size_t c, int degree) {
    const LagrangeBasis basis(degree, mesh.dim);
    const QuadratureRule &q = quadrature(2 * degree, mesh.dim);
    const BasisTable tab(basis, q);
    const CellGeometry g = cell_geometry(mesh, c);
    const int nl = basis.size();
    std::vector<double> ke(nl * nl, 0.0);
    for (int iq = 0; iq < tab.nq; ++iq)
        for (int i = 0; i < nl; ++i)
            for (int j = 0; j < nl; ++j)
                ke[i * nl + j] += q.weights[iq] * g.det * dot(tab.grad(g, iq, i), tab.grad(g, iq, j));
    return ke;
}

/// Nodal values of u at every Lagrange node; throws on non-finite values.
inline std::vector<double> interpolate(const std::function<double(const Vec3 &)> &u, const DofMap &dm) {
    std::vector<double> out(dm.num_dofs);
    for (int i = 0; i < dm.num_dofs; ++i) {
        out[i] = u(dm.node_points[i]);
        if (!std::isfinite(out[i]))
            throw NumericalError("non-finite nodal value at dof " + std::to_string(i));
    }
    return out;
}

/// System restricted to the free dofs after symmetric elimination of Dirichlet values.
struct ReducedSystem {
    SparseSystem system;
    std::vector<int> free_dofs;      // reduced index -> global dof
    std::vector<int> reduced_index;  // global dof -> reduced index or -1
    std::vector<double> lift;        // global vector holding the Dirichlet values, zero elsewhere

    /// Global solution from reduced coefficients.
    std::vector<double> expand(std::span<const double> xr) const {
        std::vector<double> x = lift;
        for (std::size_t k = 0; k < free_dofs.size(); ++k) x[free_dofs[k]] = xr[k];
        return x;
    }
};

/// Sets Dirichlet dofs to the nodal values of g and eliminates them: A_ff x_f = b_f - A_fd g_d.
inline ReducedSystem apply_dirichlet(const SparseSystem &sys, const DofMap &dm,
                                     const std::function<double(const Vec3 &)> &g) {
    if (dm.num_dirichlet() == 0) throw ValidationError("no Dirichlet dofs: pure Neumann problems are not supported");
    ReducedSystem r;
    const int n = dm.num_dofs;
    r.lift.assign(n, 0.0);
    r.reduced_index.assign(n, -1);
    for (int i = 0; i < n; ++i) {
        if (dm.dirichlet[i]) {
            r.lift[i] = g ? g(dm.node_points[i]) : 0.0;
            if (!std::isfinite(r.lift[i])) throw NumericalError("non-finite Dirichlet value at dof " + std::to_string(i));
        } else {
            r.reduced_index[i] = static_cast<int>(r.free_dofs.size());
            r.free_dofs.push_back(i);
        }
    }
    const CsrMatrix &a = sys.matrix;
    CsrMatrix &ar = r.system.matrix;
    ar.n = static_cast<int>(r.free_dofs.size());
    ar.row_ptr.assign(1, 0);
    r.system.rhs.resize(ar.n);
    for (int k = 0; k < ar.n; ++k) {
        const int i = r.free_dofs[k];
        double rhs = sys.rhs[i];
        for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
            const int j = a.col[p];
            if (dm.dirichlet[j]) {
                rhs -= a.val[p] * r.lift[j];
            } else {
                ar.col.push_back(r.reduced_index[j]);
                ar.val.push_back(a.val[p]);
            }
        }
        ar.row_ptr.push_back(static_cast<int>(ar.col.size()));
        r.system.rhs[k] = rhs;
    }
    return r;
}

/// Restriction of a matrix to the free dofs of a reduced system.
inline CsrMatrix restrict_matrix(const CsrMatrix &a, const ReducedSystem &r) {
    CsrMatrix out;
    out.n = static_cast<int>(r.free_dofs.size());
    out.row_ptr.assign(1, 0);
    for (int k = 0; k < out.n; ++k) {
        const int i = r.free_dofs[k];
        for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
            if (r.reduced_index[a.col[p]] >= 0) {
                out.col.push_back(r.reduced_index[a.col[p]]);
                out.val.push_back(a.val[p]);
            }
        out.row_ptr.push_back(static_cast<int>(out.col.size()));
    }
    return out;
}

struct ErrorNorms {
    double l2 = 0.0;
    double h1 = 0.0; // seminorm
};

/// ||u - u_h||_L2 and |u - u_h|_H1 by element quadrature of order 2m+2 (or quad_order).
inline ErrorNorms error_h1(std::span<const double> coeffs, const SimplicialMesh &mesh, const DofMap &dm,
                           const ScalarField &u, int quad_order = -1) {
    const LagrangeBasis basis(dm.degree, mesh.dim);
    const QuadratureRule &q = quadrature(quad_order < 0 ? 2 * dm.degree + 2 : quad_order, mesh.dim);
    const BasisTable tab(basis, q);
    const int nl = dm.nloc;
    const std::size_t ncell = mesh.num_cells();
    // per-cell contributions, summed in cell order for determinism
    std::vector<double> el2(ncell), eh1(ncell);
    [[maybe_unused]] const int nt = worker_threads();
    std::exception_ptr err;
#pragma omp parallel for num_threads(nt) schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(ncell); ++c) {
        try {
            const CellGeometry g = cell_geometry(mesh, c);
            const auto dofs = dm.cell(c);
            double s0 = 0.0, s1 = 0.0;
            for (int iq = 0; iq < tab.nq; ++iq) {
                const Vec3 x = g.map(q.points[iq]);
                double uh = 0.0;
                Vec3 guh{0, 0, 0};
                for (int k = 0; k < nl; ++k) {
                    uh += coeffs[dofs[k]] * tab.phi[iq * nl + k];
                    guh = guh + coeffs[dofs[k]] * tab.grad(g, iq, k);
                }
                const double w = q.weights[iq] * g.det;
                const double e = u.value(x) - uh;
                const Vec3 ge = u.grad(x) - guh;
                s0 += w * e * e;
                s1 += w * dot(ge, ge);
            }
            el2[c] = s0;
            eh1[c] = s1;
        } catch (...) {
#pragma omp critical
            err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    ErrorNorms out;
    for (std::size_t c = 0; c < ncell; ++c) out.l2 += el2[c], out.h1 += eh1[c];
    out.l2 = std::sqrt(out.l2);
    out.h1 = std::sqrt(out.h1);
    return out;
}

/// x^T A x
inline double energy(const CsrMatrix &a, std::span<const double> x) {
    std::vector<double> ax(a.n);
    spmv(a, x, ax);
    return dot(x, std::span<const double>(ax));
}

/// Smallest edge length of the mesh.
inline double min_edge_length(const SimplicialMesh &mesh) {
    double h = std::numeric_limits<double>::infinity();
    const int nb = mesh.dim + 1;
    for (const auto &c : mesh.cells)
        for (int i = 0; i < nb; ++i)
            for (int j = i + 1; j < nb; ++j) h = std::min(h, distance(mesh.points[c[i]], mesh.points[c[j]]));
    return h;
}

struct SolveResult {
    std::vector<double> coeffs; // global, Dirichlet values included
    CgResult cg;
    int dofs = 0;               // dim(S_k): all Lagrange nodes
};

/// -Laplace(u) = f in the mesh domain, u = g on Dirichlet faces.
inline SolveResult solve_poisson(const SimplicialMesh &mesh, const DofMap &dm, const std::function<double(const Vec3 &)> &f,
                                 const std::function<double(const Vec3 &)> &g, CgOptions opt = {}) {
    const SparseSystem sys = assemble(mesh, dm, f);
    const ReducedSystem red = apply_dirichlet(sys, dm, g);
    std::vector<double> xr(red.system.dofs(), 0.0);
    SolveResult out;
    out.cg = solve_cg(red.system.matrix, red.system.rhs, xr, opt);
    out.coeffs = red.expand(xr);
    out.dofs = dm.num_dofs;
    return out;
}

} // namespace polygrade
