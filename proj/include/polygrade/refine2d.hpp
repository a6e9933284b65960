#pragma once

#include "polygrade/mesh.hpp"

namespace polygrade {

/// Division point of segment AB: at ratio kappa from the more singular endpoint, midpoint if equal.
inline Vec3 split_edge(const Vec3 &a, VertexType ta, const Vec3 &b, VertexType tb, double kappa) {
    if (ta > tb) return lerp(a, b, kappa);
    if (tb > ta) return lerp(b, a, kappa);
    return lerp(a, b, 0.5);
}

/// Memoized edge splitting over a VertexStore. New points are typed from the domain geometry;
/// without a domain they are typed combinatorially (E iff both ends lie on the same singular edge).
class EdgeSplitter {
  public:
    EdgeSplitter(VertexStore &store, const Domain *domain, const GradingSpec &grading)
        : store_(store), domain_(domain), grading_(grading) {}

    double kappa_at(int v) const {
        const CornerId c = store_.corners[v];
        return c.a >= 0 ? grading_.kappa(c) : 0.5;
    }

    double kappa_for(int i, int j) const {
        const VertexType ti = store_.types[i], tj = store_.types[j];
        return ti > tj ? kappa_at(i) : tj > ti ? kappa_at(j) : 0.5;
    }

    int split(int i, int j) {
        const auto key = VertexStore::key(i, j);
        if (auto it = store_.memo.find(key); it != store_.memo.end()) return it->second;
        const Vec3 x =
            split_edge(store_.points[i], store_.types[i], store_.points[j], store_.types[j], kappa_for(i, j));
        const int id = add_point(x, i, j);
        store_.memo.emplace(key, id);
        return id;
    }

    /// Midpoint of (i, j), memoized under the same key as split(i, j).
    int midpoint(int i, int j) {
        const auto key = VertexStore::key(i, j);
        if (auto it = store_.memo.find(key); it != store_.memo.end()) return it->second;
        const int id = add_point(lerp(store_.points[i], store_.points[j], 0.5), i, j);
        store_.memo.emplace(key, id);
        return id;
    }

    /// Unshared interior point.
    int interior(const Vec3 &x) { return store_.add(x, VertexType::S); }

    VertexStore &store() { return store_; }

  private:
    VertexStore &store_;
    const Domain *domain_;
    const GradingSpec &grading_;

    int add_point(const Vec3 &x, int i, int j) {
        if (domain_) {
            const int id = store_.add_classified(x, *domain_);
            if (store_.types[id] == VertexType::V) throw ValidationError("edge split landed on a singular vertex");
            return id;
        }
        const CornerId ci = store_.corners[i], cj = store_.corners[j];
        const auto on_edge = [](const CornerId &edge, const CornerId &c) {
            if (!edge.is_edge() || c.a < 0) return false;
            return c.is_edge() ? c == edge : (c.a == edge.a || c.a == edge.b);
        };
        if (on_edge(ci, cj)) return store_.add(x, VertexType::E, ci);
        if (on_edge(cj, ci)) return store_.add(x, VertexType::E, cj);
        return store_.add(x, VertexType::S);
    }
};

/// A standalone triangle with typed corners and per-corner grading ratio.
struct Triangle2 {
    std::array<Vec3, 3> x;
    std::array<VertexType, 3> type{VertexType::S, VertexType::S, VertexType::S};
    int level = 0;
};

/// Four-way split with corner-graded edge points; child order follows the corner/opposite pattern
/// (A,C',B'), (B,C',A'), (C,A',B'), (C',A',B') with A the most singular corner. Children are
/// oriented like the parent.
inline std::array<Triangle2, 4> refine_triangle2(const Triangle2 &t, std::span<const double, 3> kappa) {
    int a = 0;
    for (int k = 1; k < 3; ++k)
        if (t.type[k] > t.type[a]) a = k;
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    auto edge_point = [&](int i, int j) {
        const double k = t.type[i] > t.type[j] ? kappa[i] : t.type[j] > t.type[i] ? kappa[j] : 0.5;
        return split_edge(t.x[i], t.type[i], t.x[j], t.type[j], k);
    };
    const Vec3 cp = edge_point(a, b), bp = edge_point(a, c), ap = edge_point(b, c);
    const VertexType s = VertexType::S;
    const double parent_sign = signed_area(t.x[0], t.x[1], t.x[2]) >= 0 ? 1.0 : -1.0;
    auto make = [&](Vec3 p, VertexType tp, Vec3 q, VertexType tq, Vec3 r, VertexType tr) {
        Triangle2 child{{p, q, r}, {tp, tq, tr}, t.level + 1};
        if (signed_area(p, q, r) * parent_sign < 0) {
            std::swap(child.x[1], child.x[2]);
            std::swap(child.type[1], child.type[2]);
        }
        return child;
    };
    return {make(t.x[a], t.type[a], cp, s, bp, s), make(t.x[b], t.type[b], cp, s, ap, s),
            make(t.x[c], t.type[c], ap, s, bp, s), make(cp, s, ap, s, bp, s)};
}

using Mesh2 = SimplicialMesh;

/// Mesh2 together with the corner tags needed to keep refining it.
struct GradedMesh2 {
    VertexStore store;
    SimplicialMesh mesh; // mesh.points/types mirror store after every operation

    void sync() {
        mesh.points = store.points;
        mesh.types = store.types;
    }
};

namespace detail {

/// Ear-clipping triangulation of a simple CCW polygon loop; each step clips the ear with the
/// largest minimum angle (first one on ties).
inline std::vector<std::array<int, 3>> ear_clip(const std::vector<Vec3> &pts, std::vector<int> loop) {
    std::vector<std::array<int, 3>> tris;
    auto inside = [&](const Vec3 &p, const Vec3 &a, const Vec3 &b, const Vec3 &c) {
        return signed_area(a, b, p) >= 0 && signed_area(b, c, p) >= 0 && signed_area(c, a, p) >= 0;
    };
    while (loop.size() > 3) {
        const std::size_t n = loop.size();
        std::size_t best = n;
        double best_angle = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int ip = loop[(i + n - 1) % n], ic = loop[i], in = loop[(i + 1) % n];
            const Vec3 &a = pts[ip], &b = pts[ic], &c = pts[in];
            if (signed_area(a, b, c) <= 1e-14) continue;
            bool ear = true;
            for (int v : loop) {
                if (v == ip || v == ic || v == in) continue;
                if (inside(pts[v], a, b, c)) {
                    ear = false;
                    break;
                }
            }
            if (!ear) continue;
            const double angle = min_triangle_angle(a, b, c);
            if (angle > best_angle + 1e-12) best = i, best_angle = angle;
        }
        if (best == n) throw ValidationError("ear clipping failed: polygon not simple");
        tris.push_back({loop[(best + n - 1) % n], loop[best], loop[(best + 1) % n]});
        loop.erase(loop.begin() + static_cast<std::ptrdiff_t>(best));
    }
    tris.push_back({loop[0], loop[1], loop[2]});
    return tris;
}

} // namespace detail

/// Refines every triangle once with the corner-graded four-way split, sharing edge points.
inline void refine_mesh2_inplace(GradedMesh2 &g, const Domain &domain, const GradingSpec &grading) {
    g.store.memo.clear();
    EdgeSplitter splitter(g.store, &domain, grading);
    const SimplicialMesh &old = g.mesh;
    SimplicialMesh next;
    next.dim = 2;
    next.level = old.level + 1;
    next.cells.reserve(old.cells.size() * 4);
    for (const auto &cell : old.cells) {
        int a = 0;
        for (int k = 1; k < 3; ++k)
            if (g.store.types[cell[k]] > g.store.types[cell[a]]) a = k;
        const int A = cell[a], B = cell[(a + 1) % 3], C = cell[(a + 2) % 3];
        const int cp = splitter.split(A, B), bp = splitter.split(A, C), ap = splitter.split(B, C);
        // (A,C',B'), (B,A',C'), (C,B',A'), (C',A',B') keep the parent's orientation.
        next.cells.push_back({A, cp, bp, -1});
        next.cells.push_back({B, ap, cp, -1});
        next.cells.push_back({C, bp, ap, -1});
        next.cells.push_back({cp, ap, bp, -1});
    }
    next.boundary.reserve(old.boundary.size() * 2);
    for (const auto &bf : old.boundary) {
        const int m = splitter.split(bf.v[0], bf.v[1]);
        next.boundary.push_back({{bf.v[0], m, -1}, bf.flag});
        next.boundary.push_back({{m, bf.v[1], -1}, bf.flag});
    }
    g.mesh = std::move(next);
    g.sync();
}

/// Initial mesh: ear triangulation of the polygon followed by one midpoint split, so every
/// singular vertex only touches VSS triangles and no edge joins two V points.
inline GradedMesh2 initial_mesh2(const Domain &domain) {
    if (domain.dimension != 2) throw ValidationError("initial_mesh2 needs a 2D domain");
    GradedMesh2 g;
    for (std::size_t v = 0; v < domain.vertices.size(); ++v) {
        const int iv = static_cast<int>(v);
        if (domain.is_singular_vertex(iv))
            g.store.add(domain.vertices[v], VertexType::V, CornerId::vertex(iv));
        else
            g.store.add(domain.vertices[v], VertexType::S);
    }
    g.mesh.dim = 2;
    for (const auto &t : detail::ear_clip(domain.vertices, domain.boundary_loop())) g.mesh.cells.push_back({t[0], t[1], t[2], -1});
    for (const auto &f : domain.facets) g.mesh.boundary.push_back({{f.vertices[0], f.vertices[1], -1}, f.flag});
    g.sync();
    GradingSpec uniform = domain.grading;
    uniform.kappa_global = 0.5;
    uniform.kappa_corner.clear();
    refine_mesh2_inplace(g, domain, uniform);
    g.mesh.level = 0;
    return g;
}

/// One level of graded refinement; the result is checked for conformity.
inline GradedMesh2 refine_mesh2(const GradedMesh2 &g, const Domain &domain, const GradingSpec &grading) {
    GradedMesh2 out = g;
    refine_mesh2_inplace(out, domain, grading);
    const auto rep = check_conformity(out.mesh, &domain);
    if (!rep.ok) {
        std::string msg = "refined mesh is not conforming:";
        for (std::size_t i = 0; i < std::min<std::size_t>(rep.violations.size(), 8); ++i) msg += "\n  " + rep.violations[i];
        throw ValidationError(msg);
    }
    return out;
}

/// Graded sequence T_0 .. T_levels.
inline std::vector<GradedMesh2> mesh2_sequence(const Domain &domain, const GradingSpec &grading, int levels) {
    std::vector<GradedMesh2> seq;
    seq.push_back(initial_mesh2(domain));
    for (int n = 1; n <= levels; ++n) seq.push_back(refine_mesh2(seq.back(), domain, grading));
    return seq;
}

} // namespace polygrade
