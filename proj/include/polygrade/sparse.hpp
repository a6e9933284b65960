#pragma once

#include "polygrade/core.hpp"

#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace polygrade {

/// Square matrix in compressed-row form (full storage, sorted columns).
struct CsrMatrix {
    int n = 0;
    std::vector<int> row_ptr{0};
    std::vector<int> col;
    std::vector<double> val;

    std::size_t nnz() const { return val.size(); }

    /// Index of entry (i, j) in val, or -1.
    long find(int i, int j) const {
        const auto b = col.begin() + row_ptr[i], e = col.begin() + row_ptr[i + 1];
        const auto it = std::lower_bound(b, e, j);
        return (it != e && *it == j) ? static_cast<long>(it - col.begin()) : -1;
    }

    double at(int i, int j) const {
        const long k = find(i, j);
        return k < 0 ? 0.0 : val[k];
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(n, 0.0);
        for (int i = 0; i < n; ++i) d[i] = at(i, i);
        return d;
    }
};

/// Thread count for data-parallel loops, honoring POLYGRADE_THREADS.
inline int worker_threads() {
#ifdef _OPENMP
    const int cap = thread_cap();
    const int avail = omp_get_max_threads();
    return cap > 0 ? std::min(cap, avail) : avail;
#else
    return 1;
#endif
}

/// y = A x
inline void spmv(const CsrMatrix &a, std::span<const double> x, std::span<double> y) {
    [[maybe_unused]] const int nt = worker_threads();
#pragma omp parallel for num_threads(nt) schedule(static) if (a.n > 20000)
    for (int i = 0; i < a.n; ++i) {
        double s = 0.0;
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) s += a.val[k] * x[a.col[k]];
        y[i] = s;
    }
}

/// Dot product summed over fixed-size chunks in a fixed order, so the result does not depend on
/// the number of threads.
inline double dot(std::span<const double> x, std::span<const double> y) {
    constexpr std::size_t chunk = 4096;
    const std::size_t n = x.size(), nc = (n + chunk - 1) / chunk;
    std::vector<double> partial(nc, 0.0);
    [[maybe_unused]] const int nt = worker_threads();
#pragma omp parallel for num_threads(nt) schedule(static) if (nc > 8)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nc); ++c) {
        double s = 0.0;
        const std::size_t e = std::min(n, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < e; ++i) s += x[i] * y[i];
        partial[c] = s;
    }
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
};

struct CgOptions {
    double rtol = 1e-10;
    int max_iter = 0; // 0: 10 n + 100
};

/// Jacobi-preconditioned conjugate gradients; x holds the initial guess on entry. Throws
/// NumericalError with the final relative residual if the tolerance is not reached.
inline CgResult solve_cg(const CsrMatrix &a, std::span<const double> b, std::span<double> x, CgOptions opt = {}) {
    const int n = a.n;
    if (static_cast<int>(b.size()) != n || static_cast<int>(x.size()) != n)
        throw ValidationError("solve_cg: size mismatch");
    const int max_iter = opt.max_iter > 0 ? opt.max_iter : 10 * n + 100;
    std::vector<double> inv_diag = a.diagonal();
    for (double &d : inv_diag) {
        if (!(d > 0.0)) throw NumericalError("solve_cg: non-positive diagonal entry, matrix is not SPD");
        d = 1.0 / d;
    }
    std::vector<double> r(n), z(n), p(n), ap(n);
    spmv(a, x, r);
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
    const double bnorm = std::sqrt(dot(b, b));
    CgResult res;
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return res;
    }
    double rnorm = std::sqrt(dot(r, r));
    res.relative_residual = rnorm / bnorm;
    if (res.relative_residual <= opt.rtol) return res;
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= max_iter; ++it) {
        spmv(a, p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) throw NumericalError("solve_cg: matrix is not positive definite", res.relative_residual);
        const double alpha = rz / pap;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = std::sqrt(dot(r, r));
        res.iterations = it;
        res.relative_residual = rnorm / bnorm;
        if (res.relative_residual <= opt.rtol) return res;
        for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw NumericalError("solve_cg: no convergence in " + std::to_string(max_iter) + " iterations (relative residual " +
                             std::to_string(res.relative_residual) + ")",
                         res.relative_residual);
}

/// Builds a CSR matrix from dense row-major storage (tests and small systems).
inline CsrMatrix csr_from_dense(const std::vector<double> &dense, int n) {
    CsrMatrix a;
    a.n = n;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            if (dense[static_cast<std::size_t>(i) * n + j] != 0.0) {
                a.col.push_back(j);
                a.val.push_back(dense[static_cast<std::size_t>(i) * n + j]);
            }
        a.row_ptr.push_back(static_cast<int>(a.col.size()));
    }
    return a;
}

} // namespace polygrade
