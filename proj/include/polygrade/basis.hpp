#pragma once

#include "polygrade/core.hpp"

#include <vector>

namespace polygrade {

/// Lagrange P_m shape functions on the reference simplex, written in barycentric coordinates:
/// phi_alpha = prod_i prod_{j < alpha_i} (m lambda_i - j) / (j + 1) for |alpha| = m.
class LagrangeBasis {
  public:
    LagrangeBasis(int degree, int dim) : m_(degree), dim_(dim) {
        if (degree < 1 || degree > 3) throw ValidationError("polynomial degree must be 1, 2 or 3");
        if (dim != 2 && dim != 3) throw ValidationError("basis dimension must be 2 or 3");
        // vertices, then edge nodes, then face nodes; within each group lexicographic
        std::vector<std::array<int, 4>> all;
        const int nb = dim + 1;
        for (int a0 = 0; a0 <= m_; ++a0)
            for (int a1 = 0; a1 <= m_ - a0; ++a1)
                for (int a2 = 0; a2 <= m_ - a0 - a1; ++a2) {
                    if (nb == 3) {
                        if (a0 + a1 + a2 == m_) all.push_back({a0, a1, a2, 0});
                    } else {
                        all.push_back({a0, a1, a2, m_ - a0 - a1 - a2});
                    }
                }
        auto support = [nb](const std::array<int, 4> &a) {
            int s = 0;
            for (int i = 0; i < nb; ++i) s += a[i] > 0;
            return s;
        };
        for (int s = 1; s <= nb; ++s)
            for (auto it = all.rbegin(); it != all.rend(); ++it)
                if (support(*it) == s) nodes_.push_back(*it);
    }

    int degree() const { return m_; }
    int dim() const { return dim_; }
    int size() const { return static_cast<int>(nodes_.size()); }

    /// Multi-index of local node k (entries beyond dim are zero).
    const std::array<int, 4> &node(int k) const { return nodes_[k]; }

    /// Reference coordinates of local node k.
    Vec3 node_point(int k) const {
        Vec3 x{0, 0, 0};
        for (int i = 1; i <= dim_; ++i) x[i - 1] = static_cast<double>(nodes_[k][i]) / m_;
        return x;
    }

    static std::array<double, 4> barycentric(const Vec3 &x, int dim) {
        std::array<double, 4> l{1.0, 0.0, 0.0, 0.0};
        for (int i = 0; i < dim; ++i) {
            l[i + 1] = x[i];
            l[0] -= x[i];
        }
        return l;
    }

    /// Shape function values at barycentric point lambda.
    void eval(const std::array<double, 4> &lambda, double *values) const {
        for (int k = 0; k < size(); ++k) {
            double v = 1.0;
            for (int i = 0; i <= dim_; ++i) v *= factor(nodes_[k][i], lambda[i]);
            values[k] = v;
        }
    }

    /// Derivatives with respect to each barycentric coordinate: d[k*(dim+1) + i] = d phi_k / d lambda_i.
    void eval_dlambda(const std::array<double, 4> &lambda, double *d) const {
        const int nb = dim_ + 1;
        for (int k = 0; k < size(); ++k) {
            std::array<double, 4> f{}, df{};
            for (int i = 0; i < nb; ++i) {
                f[i] = factor(nodes_[k][i], lambda[i]);
                df[i] = dfactor(nodes_[k][i], lambda[i]);
            }
            for (int i = 0; i < nb; ++i) {
                double v = df[i];
                for (int j = 0; j < nb; ++j)
                    if (j != i) v *= f[j];
                d[k * nb + i] = v;
            }
        }
    }

    /// Second derivatives in barycentric coordinates: h[(k*(nb) + i)*nb + j].
    void eval_d2lambda(const std::array<double, 4> &lambda, double *h) const {
        const int nb = dim_ + 1;
        for (int k = 0; k < size(); ++k) {
            std::array<double, 4> f{}, df{}, d2f{};
            for (int i = 0; i < nb; ++i) {
                f[i] = factor(nodes_[k][i], lambda[i]);
                df[i] = dfactor(nodes_[k][i], lambda[i]);
                d2f[i] = d2factor(nodes_[k][i], lambda[i]);
            }
            for (int i = 0; i < nb; ++i)
                for (int j = 0; j < nb; ++j) {
                    double v = 1.0;
                    for (int l = 0; l < nb; ++l) {
                        if (i == j) v *= l == i ? d2f[l] : f[l];
                        else v *= l == i ? df[l] : l == j ? df[l] : f[l];
                    }
                    h[(k * nb + i) * nb + j] = v;
                }
        }
    }

    /// Values at a reference point x.
    std::vector<double> values(const Vec3 &x) const {
        std::vector<double> v(size());
        eval(barycentric(x, dim_), v.data());
        return v;
    }

    /// Reference-coordinate gradients at x: g[k][c] = d phi_k / d x_c.
    std::vector<Vec3> gradients(const Vec3 &x) const {
        const int nb = dim_ + 1;
        std::vector<double> d(size() * nb);
        eval_dlambda(barycentric(x, dim_), d.data());
        std::vector<Vec3> g(size(), Vec3{0, 0, 0});
        for (int k = 0; k < size(); ++k)
            for (int c = 0; c < dim_; ++c) g[k][c] = d[k * nb + c + 1] - d[k * nb];
        return g;
    }

  private:
    int m_;
    int dim_;
    std::vector<std::array<int, 4>> nodes_;

    // prod_{j < a} (m l - j) / (j + 1) and its first two derivatives in l
    double factor(int a, double l) const {
        double v = 1.0;
        for (int j = 0; j < a; ++j) v *= (m_ * l - j) / (j + 1);
        return v;
    }
    double dfactor(int a, double l) const {
        double s = 0.0;
        for (int p = 0; p < a; ++p) {
            double v = static_cast<double>(m_) / (p + 1);
            for (int j = 0; j < a; ++j)
                if (j != p) v *= (m_ * l - j) / (j + 1);
            s += v;
        }
        return s;
    }
    double d2factor(int a, double l) const {
        double s = 0.0;
        for (int p = 0; p < a; ++p)
            for (int q = 0; q < a; ++q) {
                if (p == q) continue;
                double v = static_cast<double>(m_) / (p + 1) * m_ / (q + 1);
                for (int j = 0; j < a; ++j)
                    if (j != p && j != q) v *= (m_ * l - j) / (j + 1);
                s += v;
            }
        return s;
    }
};

} // namespace polygrade
