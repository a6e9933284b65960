#pragma once

#include "polygrade/core.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <mutex>
#include <vector>

namespace polygrade {

/// Nodes (reference coordinates) and weights on the reference simplex
/// {x_i >= 0, sum x_i <= 1}; weights sum to 1/2 (triangle) or 1/6 (tetrahedron).
struct QuadratureRule {
    int dim = 2;
    int order = 0;
    std::vector<Vec3> points;
    std::vector<double> weights;
    std::size_t size() const { return weights.size(); }
};

/// Gauss-Jacobi rule on [0,1] with weight (1-u)^alpha, via Golub-Welsch.
inline void gauss_jacobi_01(int n, int alpha, std::vector<double> &nodes, std::vector<double> &weights) {
    const double a = alpha, b = 0.0;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + a + b;
        J(k, k) = (k == 0 && a + b == 0.0) ? (b - a) / (a + b + 2) : (b * b - a * a) / (s * (s + 2));
        if (k + 1 < n) {
            const double m = k + 1.0, t = 2.0 * m + a + b;
            const double beta = 4 * m * (m + a) * (m + b) * (m + a + b) / (t * t * (t + 1) * (t - 1));
            J(k, k + 1) = J(k + 1, k) = std::sqrt(beta);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    // mu0 = int_{-1}^{1} (1-x)^a dx = 2^(a+1)/(a+1); mapped to [0,1]: 1/(a+1)
    const double mu0 = 1.0 / (a + 1.0);
    nodes.resize(n);
    weights.resize(n);
    for (int k = 0; k < n; ++k) {
        nodes[k] = 0.5 * (1.0 + eig.eigenvalues()(k));
        weights[k] = mu0 * eig.eigenvectors()(0, k) * eig.eigenvectors()(0, k);
    }
}

/// Collapsed (Duffy) tensor rule exact for total degree `order`; order in [0, 20].
inline QuadratureRule make_quadrature(int order, int dim) {
    if (dim != 2 && dim != 3) throw ValidationError("quadrature dimension must be 2 or 3");
    if (order < 0 || order > 20) throw ValidationError("unsupported quadrature order " + std::to_string(order));
    const int n = std::max(1, (order + 2) / 2);
    QuadratureRule q;
    q.dim = dim;
    q.order = order;
    std::vector<double> x0, w0, x1, w1, x2, w2;
    gauss_jacobi_01(n, dim - 1, x0, w0);
    gauss_jacobi_01(n, dim - 2, x1, w1);
    if (dim == 2) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                q.points.push_back({x0[i], (1 - x0[i]) * x1[j], 0.0});
                q.weights.push_back(w0[i] * w1[j]);
            }
        return q;
    }
    gauss_jacobi_01(n, 0, x2, w2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const double u = x0[i], v = x1[j], w = x2[k];
                q.points.push_back({u, (1 - u) * v, (1 - u) * (1 - v) * w});
                q.weights.push_back(w0[i] * w1[j] * w2[k]);
            }
    return q;
}

/// Cached rule; thread-safe.
inline const QuadratureRule &quadrature(int order, int dim) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, QuadratureRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({order, dim});
    if (it == cache.end()) it = cache.emplace(std::pair{order, dim}, make_quadrature(order, dim)).first;
    return it->second;
}

} // namespace polygrade
