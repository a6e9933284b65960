#pragma once

#include "polygrade/domain.hpp"

#include <map>
#include <span>
#include <unordered_map>
#include <vector>

namespace polygrade {

/// Vertex coordinates plus singularity tags, with a memo of edge-split points.
struct VertexStore {
    std::vector<Vec3> points;
    std::vector<VertexType> types;
    std::vector<CornerId> corners; // singular vertex/edge a V or E point sits on; {-1,-1} for S
    std::unordered_map<std::uint64_t, int> memo;

    int add(const Vec3 &x, VertexType t, CornerId c = {}) {
        points.push_back(x);
        types.push_back(t);
        corners.push_back(c);
        return static_cast<int>(points.size()) - 1;
    }

    /// Adds x with type and corner from the domain's classification.
    int add_classified(const Vec3 &x, const Domain &domain) {
        const auto corner = domain.locate_corner(x);
        if (!corner) return add(x, VertexType::S);
        return add(x, corner->is_edge() ? VertexType::E : VertexType::V, *corner);
    }

    int size() const { return static_cast<int>(points.size()); }

    static std::uint64_t key(int i, int j) {
        if (i > j) std::swap(i, j);
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) | static_cast<std::uint32_t>(j);
    }
};

struct BoundaryFace {
    std::array<int, 3> v{-1, -1, -1}; // segment in 2D (v[2] = -1), triangle in 3D
    BoundaryFlag flag = BoundaryFlag::Dirichlet;
};

/// Conforming triangle (dim 2) or tetrahedron (dim 3) mesh.
struct SimplicialMesh {
    int dim = 2;
    std::vector<Vec3> points;
    std::vector<VertexType> types;        // optional per-vertex singularity tags
    std::vector<std::array<int, 4>> cells; // first dim+1 entries used
    std::vector<BoundaryFace> boundary;
    int level = 0;

    int vertices_per_cell() const { return dim + 1; }
    std::size_t num_cells() const { return cells.size(); }
    std::span<const int> cell(std::size_t c) const { return {cells[c].data(), static_cast<std::size_t>(dim + 1)}; }
};

inline double cell_measure(const SimplicialMesh &mesh, std::size_t c) {
    const auto &v = mesh.cells[c];
    const auto &p = mesh.points;
    if (mesh.dim == 2) return std::abs(signed_area(p[v[0]], p[v[1]], p[v[2]]));
    return std::abs(signed_volume(p[v[0]], p[v[1]], p[v[2]], p[v[3]]));
}

inline double total_measure(const SimplicialMesh &mesh) {
    double s = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) s += cell_measure(mesh, c);
    return s;
}

/// Smallest interior angle of a triangle, radians.
inline double min_triangle_angle(const Vec3 &a, const Vec3 &b, const Vec3 &c) {
    auto angle = [](const Vec3 &p, const Vec3 &q, const Vec3 &r) {
        const Vec3 u = q - p, w = r - p;
        return std::acos(std::clamp(dot(u, w) / (norm(u) * norm(w)), -1.0, 1.0));
    };
    return std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)});
}

/// The six dihedral angles of a tetrahedron, radians.
inline std::array<double, 6> dihedral_angles(const std::array<Vec3, 4> &p) {
    static constexpr int pairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    std::array<double, 6> out{};
    for (int e = 0; e < 6; ++e) {
        const int i = pairs[e][0], j = pairs[e][1];
        int k = -1, l = -1;
        for (int m = 0; m < 4; ++m)
            if (m != i && m != j) (k < 0 ? k : l) = m;
        const Vec3 d = normalized(p[j] - p[i]);
        Vec3 u = p[k] - p[i], w = p[l] - p[i];
        u = u - dot(u, d) * d;
        w = w - dot(w, d) * d;
        out[e] = std::acos(std::clamp(dot(u, w) / (norm(u) * norm(w)), -1.0, 1.0));
    }
    return out;
}

struct AngleStats {
    double min = 4.0;
    double max = 0.0;
    void add(double a) {
        min = std::min(min, a);
        max = std::max(max, a);
    }
};

struct ConformityReport {
    bool ok = true;
    std::vector<std::string> violations;
    std::vector<std::array<int, 3>> unmatched_faces; // interior faces without a partner
    double measure = 0.0;
    /// Min/max dihedral (3D) or interior (2D) angle in radians, keyed by element type name.
    std::map<std::string, AngleStats> angles;

    void fail(std::string what) {
        ok = false;
        violations.push_back(std::move(what));
    }
};

namespace detail {

inline std::string type_name(std::span<const VertexType> types) {
    int nv = 0, ne = 0;
    for (VertexType t : types) nv += t == VertexType::V, ne += t == VertexType::E;
    const int ns = static_cast<int>(types.size()) - nv - ne;
    std::string s;
    if (nv) s += nv == 1 ? "V" : "V" + std::to_string(nv);
    if (ne) s += ne == 1 ? "E" : "E" + std::to_string(ne);
    if (ns) s += ns == 1 ? "S" : "S" + std::to_string(ns);
    return s;
}

struct FaceKey {
    std::array<int, 3> v;
    bool operator==(const FaceKey &) const = default;
};

struct FaceKeyHash {
    std::size_t operator()(const FaceKey &k) const {
        std::uint64_t h = 1469598103934665603ull;
        for (int x : k.v) h = (h ^ static_cast<std::uint32_t>(x)) * 1099511628211ull;
        return static_cast<std::size_t>(h);
    }
};

inline FaceKey sorted_face(std::array<int, 3> v) {
    std::sort(v.begin(), v.end());
    return {v};
}

/// Faces of a cell (edges in 2D with v[2] = -1), in local order.
inline std::vector<std::array<int, 3>> cell_faces(const SimplicialMesh &mesh, std::size_t c) {
    const auto &v = mesh.cells[c];
    if (mesh.dim == 2) return {{v[1], v[2], -1}, {v[2], v[0], -1}, {v[0], v[1], -1}};
    return {{v[1], v[2], v[3]}, {v[0], v[3], v[2]}, {v[0], v[1], v[3]}, {v[0], v[2], v[1]}};
}

} // namespace detail

/// Faces owned by exactly one cell, oriented as seen from that cell.
inline std::vector<std::array<int, 3>> boundary_faces(const SimplicialMesh &mesh) {
    std::unordered_map<detail::FaceKey, std::pair<int, std::array<int, 3>>, detail::FaceKeyHash> count;
    count.reserve(mesh.num_cells() * 4);
    for (std::size_t c = 0; c < mesh.num_cells(); ++c)
        for (const auto &f : detail::cell_faces(mesh, c)) {
            auto &entry = count[detail::sorted_face(f)];
            entry.first++;
            entry.second = f;
        }
    std::vector<std::array<int, 3>> out;
    for (const auto &[k, e] : count)
        if (e.first == 1) out.push_back(e.second);
    std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
        return detail::sorted_face(a).v < detail::sorted_face(b).v;
    });
    return out;
}

/// Rebuilds mesh.boundary from the cell complex, flagging each face by the domain facet that contains it.
inline void assign_boundary(SimplicialMesh &mesh, const Domain &domain) {
    mesh.boundary.clear();
    for (const auto &f : boundary_faces(mesh)) {
        const int n = mesh.dim;
        Vec3 centroid{0, 0, 0};
        for (int k = 0; k < n; ++k) centroid = centroid + (1.0 / n) * mesh.points[f[k]];
        const auto facet = domain.facet_containing(centroid);
        if (!facet) throw ValidationError("boundary face not on the domain boundary");
        mesh.boundary.push_back({f, domain.facets[*facet].flag});
    }
}

/// Checks that every face is shared by at most two cells, faces owned by one cell lie on the
/// domain boundary, cells are non-degenerate, and measures add up to the domain measure.
inline ConformityReport check_conformity(const SimplicialMesh &mesh, const Domain *domain = nullptr) {
    ConformityReport rep;
    std::unordered_map<detail::FaceKey, std::pair<int, std::array<int, 3>>, detail::FaceKeyHash> count;
    count.reserve(mesh.num_cells() * 4);
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const double m = cell_measure(mesh, c);
        if (!(m > 0.0)) rep.fail("cell " + std::to_string(c) + " is degenerate");
        rep.measure += m;
        for (const auto &f : detail::cell_faces(mesh, c)) {
            auto &entry = count[detail::sorted_face(f)];
            entry.first++;
            entry.second = f;
        }
        std::string tname = "all";
        if (!mesh.types.empty()) {
            std::array<VertexType, 4> t{};
            for (int k = 0; k <= mesh.dim; ++k) t[k] = mesh.types[mesh.cells[c][k]];
            tname = detail::type_name(std::span<const VertexType>(t.data(), mesh.dim + 1));
        }
        const auto &v = mesh.cells[c];
        const auto &p = mesh.points;
        if (mesh.dim == 2) {
            const auto interior = [&](int i) {
                const Vec3 &a = p[v[i]], &b = p[v[(i + 1) % 3]], &cc = p[v[(i + 2) % 3]];
                return std::acos(std::clamp(dot(b - a, cc - a) / (norm(b - a) * norm(cc - a)), -1.0, 1.0));
            };
            for (int i = 0; i < 3; ++i) rep.angles[tname].add(interior(i));
        } else {
            for (double a : dihedral_angles({p[v[0]], p[v[1]], p[v[2]], p[v[3]]})) rep.angles[tname].add(a);
        }
    }
    const double tol = domain ? 1e-9 * domain->diameter() : 0.0;
    std::vector<std::array<int, 3>> unmatched;
    for (const auto &[k, e] : count) {
        if (e.first > 2) rep.fail("face shared by " + std::to_string(e.first) + " cells");
        if (e.first == 1 && domain) {
            Vec3 centroid{0, 0, 0};
            for (int i = 0; i < mesh.dim; ++i) centroid = centroid + (1.0 / mesh.dim) * mesh.points[e.second[i]];
            if (!domain->facet_containing(centroid, tol)) unmatched.push_back(k.v);
        }
    }
    std::sort(unmatched.begin(), unmatched.end());
    for (const auto &f : unmatched) {
        std::string s = "interior face without partner:";
        for (int i = 0; i < mesh.dim; ++i) s += " " + std::to_string(f[i]);
        rep.fail(s);
    }
    rep.unmatched_faces = std::move(unmatched);
    if (domain && std::abs(rep.measure - domain->measure()) > 1e-10 * domain->measure())
        rep.fail("cell measures sum to " + std::to_string(rep.measure) + " but domain measure is " +
                 std::to_string(domain->measure()));
    return rep;
}

/// Smallest distance from point p to any other mesh vertex.
inline double nearest_vertex_distance(const std::vector<Vec3> &points, const Vec3 &p) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3 &q : points) {
        const double d = distance(p, q);
        if (d > 0.0) best = std::min(best, d);
    }
    return best;
}

} // namespace polygrade
