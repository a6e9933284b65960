#pragma once

#include "polygrade/core.hpp"

#include <compare>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace polygrade {

enum class BoundaryFlag : std::uint8_t { Dirichlet, Neumann };

inline char to_char(BoundaryFlag f) { return f == BoundaryFlag::Dirichlet ? 'D' : 'N'; }

struct BoundaryFacet {
    std::vector<int> vertices; // segment (2D) or planar polygon (3D), oriented outward
    BoundaryFlag flag = BoundaryFlag::Dirichlet;
};

/// A singular vertex (b < 0) or a singular edge {a, b} with a < b, in domain vertex indices.
struct CornerId {
    int a = -1;
    int b = -1;

    static CornerId vertex(int v) { return {v, -1}; }
    static CornerId edge(int i, int j) { return {std::min(i, j), std::max(i, j)}; }
    bool is_edge() const { return b >= 0; }
    auto operator<=>(const CornerId &) const = default;
};

inline std::string to_string(const CornerId &c) {
    return c.is_edge() ? std::to_string(c.a) + "-" + std::to_string(c.b) : std::to_string(c.a);
}

/// Largest admissible grading ratio for degree m and grading strength a.
inline double grading_parameter(int m, double a) {
    if (m < 1) throw ValidationError("polynomial degree must be >= 1");
    if (!(a > 0.0 && a <= 0.5)) throw ValidationError("grading strength a must lie in (0, 1/2]");
    return std::min(0.5, std::exp2(-static_cast<double>(m) / a));
}

/// Degree, grading strength and grading ratio, globally with optional per-corner overrides.
struct GradingSpec {
    int m = 1;
    double a = 0.5;
    std::optional<double> kappa_global; // unset: grading_parameter(m, a)
    std::map<CornerId, double> a_corner;
    std::map<CornerId, double> kappa_corner;

    double strength(const CornerId &c) const {
        auto it = a_corner.find(c);
        return it != a_corner.end() ? it->second : a;
    }

    double kappa(const CornerId &c) const {
        if (auto it = kappa_corner.find(c); it != kappa_corner.end()) return it->second;
        if (kappa_global) return *kappa_global;
        return grading_parameter(m, strength(c));
    }

    double kappa_default() const { return kappa_global ? *kappa_global : grading_parameter(m, a); }

    /// kappa = 1/2 is the ungraded (uniform) sequence and is always admissible.
    static void check_kappa(double kappa, int m, double a, const std::string &what) {
        if (!(kappa > 0.0 && kappa <= 0.5))
            throw ValidationError("kappa for " + what + " must lie in (0, 1/2]");
        if (kappa != 0.5 && kappa > std::exp2(-static_cast<double>(m) / a) * (1.0 + 1e-12))
            throw ValidationError("kappa for " + what + " exceeds 2^(-m/a)");
    }

    void validate() const {
        grading_parameter(m, a);
        for (const auto &[c, ac] : a_corner) grading_parameter(m, ac);
        check_kappa(kappa_default(), m, a, "default");
        for (const auto &[c, k] : kappa_corner) check_kappa(k, m, strength(c), "corner " + to_string(c));
    }
};

namespace detail {

inline double polygon_signed_area(const std::vector<Vec3> &pts, const std::vector<int> &loop) {
    double area = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Vec3 &p = pts[loop[i]];
        const Vec3 &q = pts[loop[(i + 1) % loop.size()]];
        area += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * area;
}

/// Newell normal (unnormalized, length = 2 * area) of a planar polygon.
inline Vec3 newell_normal(const std::vector<Vec3> &pts, const std::vector<int> &poly) {
    Vec3 n{0, 0, 0};
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec3 &p = pts[poly[i]];
        const Vec3 &q = pts[poly[(i + 1) % poly.size()]];
        n[0] += (p[1] - q[1]) * (p[2] + q[2]);
        n[1] += (p[2] - q[2]) * (p[0] + q[0]);
        n[2] += (p[0] - q[0]) * (p[1] + q[1]);
    }
    return n;
}

inline bool segments_cross(const Vec3 &p1, const Vec3 &p2, const Vec3 &q1, const Vec3 &q2) {
    auto orient = [](const Vec3 &a, const Vec3 &b, const Vec3 &c) { return signed_area(a, b, c); };
    const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
    const double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

/// Point-in-polygon for a planar polygon in 3D (boundary counts as inside within tol).
inline bool point_in_polygon(const std::vector<Vec3> &pts, const std::vector<int> &poly, const Vec3 &normal,
                             const Vec3 &x, double tol) {
    for (std::size_t i = 0; i < poly.size(); ++i)
        if (point_segment_distance(x, pts[poly[i]], pts[poly[(i + 1) % poly.size()]]) <= tol) return true;
    int drop = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(normal[k]) > std::abs(normal[drop])) drop = k;
    const int u = (drop + 1) % 3, v = (drop + 2) % 3;
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Vec3 &a = pts[poly[i]], &b = pts[poly[j]];
        if ((a[v] > x[v]) != (b[v] > x[v])) {
            const double t = (x[v] - a[v]) / (b[v] - a[v]);
            if (x[u] < a[u] + t * (b[u] - a[u])) inside = !inside;
        }
    }
    return inside;
}

} // namespace detail

/// Polygonal (2D) or polyhedral (3D) domain with its singular set.
class Domain {
  public:
    int dimension = 2;
    std::vector<Vec3> vertices;
    std::vector<BoundaryFacet> facets;
    std::vector<int> singular_vertices;             // sorted
    std::vector<CornerId> singular_edges;           // 3D only, sorted
    std::map<CornerId, double> corner_openings;     // vertex (2D) or edge (3D) -> radians
    GradingSpec grading;

    double diameter() const { return diameter_; }
    double default_tol() const { return 1e-12 * diameter_; }

    bool is_singular_vertex(int v) const {
        return std::binary_search(singular_vertices.begin(), singular_vertices.end(), v);
    }

    /// V near a singular vertex, E near a singular edge (3D), otherwise S.
    VertexType classify(const Vec3 &x, double tol = -1.0) const {
        if (tol < 0) tol = default_tol();
        for (int v : singular_vertices)
            if (distance(x, vertices[v]) <= tol) return VertexType::V;
        for (const CornerId &e : singular_edges)
            if (point_segment_distance(x, vertices[e.a], vertices[e.b]) <= tol) return VertexType::E;
        return VertexType::S;
    }

    /// The singular vertex or edge x sits on, if any (vertices take precedence).
    std::optional<CornerId> locate_corner(const Vec3 &x, double tol = -1.0) const {
        if (tol < 0) tol = default_tol();
        for (int v : singular_vertices)
            if (distance(x, vertices[v]) <= tol) return CornerId::vertex(v);
        for (const CornerId &e : singular_edges)
            if (point_segment_distance(x, vertices[e.a], vertices[e.b]) <= tol) return e;
        return std::nullopt;
    }

    /// Distance to the singular set; 1 when the set is empty.
    double singular_distance(const Vec3 &x) const {
        if (singular_vertices.empty() && singular_edges.empty()) return 1.0;
        double r = std::numeric_limits<double>::infinity();
        for (int v : singular_vertices) r = std::min(r, distance(x, vertices[v]));
        for (const CornerId &e : singular_edges)
            r = std::min(r, point_segment_distance(x, vertices[e.a], vertices[e.b]));
        return r;
    }

    double opening(const CornerId &c) const {
        auto it = corner_openings.find(c);
        if (it == corner_openings.end())
            throw ValidationError("no opening angle recorded for corner " + to_string(c));
        return it->second;
    }

    /// Index of a boundary facet containing x, if any.
    std::optional<int> facet_containing(const Vec3 &x, double tol = -1.0) const {
        if (tol < 0) tol = 1e-9 * diameter_;
        for (std::size_t f = 0; f < facets.size(); ++f) {
            const auto &poly = facets[f].vertices;
            if (dimension == 2) {
                if (point_segment_distance(x, vertices[poly[0]], vertices[poly[1]]) <= tol)
                    return static_cast<int>(f);
                continue;
            }
            const Vec3 n = normalized(facet_normals_[f]);
            if (std::abs(dot(x - vertices[poly[0]], n)) > tol) continue;
            if (detail::point_in_polygon(vertices, poly, n, x, tol)) return static_cast<int>(f);
        }
        return std::nullopt;
    }

    /// Outward unit normal of a 3D facet.
    Vec3 facet_normal(int f) const { return normalized(facet_normals_[f]); }

    /// Recomputes derived data and checks every invariant; throws ValidationError.
    void validate(bool singular_listed = false) {
        if (dimension != 2 && dimension != 3) throw ValidationError("dimension must be 2 or 3");
        if (vertices.empty()) throw ValidationError("domain has no vertices");
        if (facets.empty()) throw ValidationError("domain has no facets");
        diameter_ = 0.0;
        for (const Vec3 &p : vertices)
            for (const Vec3 &q : vertices) diameter_ = std::max(diameter_, distance(p, q));
        if (diameter_ <= 0.0) throw ValidationError("degenerate domain (zero diameter)");
        for (std::size_t f = 0; f < facets.size(); ++f)
            for (int v : facets[f].vertices)
                if (v < 0 || v >= static_cast<int>(vertices.size()))
                    throw ValidationError("facet " + std::to_string(f) + " references unknown vertex " +
                                          std::to_string(v));
        if (dimension == 2)
            validate_2d(singular_listed);
        else
            validate_3d(singular_listed);
        grading.validate();
        for (const auto &[c, k] : grading.kappa_corner)
            if (!is_corner(c)) throw ValidationError("kappa given for non-singular corner " + to_string(c));
    }

    bool is_corner(const CornerId &c) const {
        if (c.is_edge()) return std::binary_search(singular_edges.begin(), singular_edges.end(), c);
        return is_singular_vertex(c.a);
    }

    /// Closed polygon loop in counter-clockwise order (2D only).
    const std::vector<int> &boundary_loop() const { return loop_; }

    /// Enclosed area (2D) or volume (3D).
    double measure() const { return measure_; }

  private:
    double diameter_ = 0.0;
    double measure_ = 0.0;
    std::vector<int> loop_;
    std::vector<Vec3> facet_normals_;

    void validate_2d(bool singular_listed) {
        const int nv = static_cast<int>(vertices.size());
        std::vector<std::vector<int>> incident(nv);
        for (std::size_t f = 0; f < facets.size(); ++f) {
            const auto &s = facets[f].vertices;
            if (s.size() != 2) throw ValidationError("facet " + std::to_string(f) + " must be a segment");
            if (s[0] == s[1]) throw ValidationError("facet " + std::to_string(f) + " is degenerate");
            incident[s[0]].push_back(static_cast<int>(f));
            incident[s[1]].push_back(static_cast<int>(f));
        }
        for (int v = 0; v < nv; ++v) {
            if (incident[v].size() != 2)
                throw ValidationError("boundary not closed at vertex " + std::to_string(v) + " (" +
                                      std::to_string(incident[v].size()) + " incident facets)");
        }
        // Walk the loop.
        loop_.clear();
        std::vector<int> facet_order;
        std::vector<char> used(facets.size(), 0);
        int cur = facets[0].vertices[0];
        int f = 0;
        for (std::size_t step = 0; step < facets.size(); ++step) {
            used[f] = 1;
            loop_.push_back(cur);
            facet_order.push_back(f);
            const auto &s = facets[f].vertices;
            cur = s[0] == cur ? s[1] : s[0];
            const int nf = incident[cur][0] == f ? incident[cur][1] : incident[cur][0];
            if (used[nf]) {
                if (step + 1 != facets.size()) throw ValidationError("boundary not connected: multiple loops");
                break;
            }
            f = nf;
        }
        if (static_cast<int>(loop_.size()) != nv) throw ValidationError("boundary not connected: multiple loops");
        measure_ = detail::polygon_signed_area(vertices, loop_);
        if (std::abs(measure_) <= 1e-14 * diameter_ * diameter_) throw ValidationError("polygon has zero area");
        if (measure_ < 0) {
            std::reverse(loop_.begin(), loop_.end());
            measure_ = -measure_;
        }
        for (std::size_t i = 0; i < facets.size(); ++i)
            for (std::size_t j = i + 1; j < facets.size(); ++j) {
                const auto &s = facets[i].vertices, &t = facets[j].vertices;
                if (s[0] == t[0] || s[0] == t[1] || s[1] == t[0] || s[1] == t[1]) continue;
                if (detail::segments_cross(vertices[s[0]], vertices[s[1]], vertices[t[0]], vertices[t[1]]))
                    throw ValidationError("boundary self-intersects (facets " + std::to_string(i) + " and " +
                                          std::to_string(j) + ")");
            }
        // Interior angles and boundary-condition changes.
        std::map<CornerId, double> geometric;
        std::set<int> required;
        for (int i = 0; i < nv; ++i) {
            const int v = loop_[i];
            const int prev = loop_[(i + nv - 1) % nv], next = loop_[(i + 1) % nv];
            const Vec3 e1 = vertices[next] - vertices[v], e2 = vertices[prev] - vertices[v];
            double ang = std::atan2(e1[0] * e2[1] - e1[1] * e2[0], e1[0] * e2[0] + e1[1] * e2[1]);
            if (ang <= 0) ang += 2 * pi;
            geometric[CornerId::vertex(v)] = ang;
            const bool bc_change = facets[incident[v][0]].flag != facets[incident[v][1]].flag;
            if (std::abs(ang - pi) > 1e-9 || bc_change) required.insert(v);
        }
        std::set<int> singular(singular_vertices.begin(), singular_vertices.end());
        if (!singular_listed) {
            for (int v = 0; v < nv; ++v) singular.insert(v);
        } else {
            for (int v : required)
                if (!singular.count(v))
                    throw ValidationError("singular set omits non-smooth boundary vertex " + std::to_string(v));
        }
        for (int v : singular)
            if (v < 0 || v >= nv) throw ValidationError("singular vertex " + std::to_string(v) + " out of range");
        singular_vertices.assign(singular.begin(), singular.end());
        if (!singular_edges.empty()) throw ValidationError("singular edges are only meaningful in 3D");
        check_openings(geometric);
    }

    void check_openings(const std::map<CornerId, double> &geometric) {
        for (const auto &[c, alpha] : corner_openings) {
            auto it = geometric.find(c);
            if (it == geometric.end() || !is_corner(c))
                throw ValidationError("opening given for non-singular corner " + to_string(c));
            if (!(alpha > 0 && alpha < 2 * pi))
                throw ValidationError("opening of corner " + to_string(c) + " outside (0, 2pi)");
            if (std::abs(alpha - it->second) > 1e-9)
                throw ValidationError("opening of corner " + to_string(c) + " does not match geometry");
        }
        for (const auto &[c, alpha] : geometric)
            if (is_corner(c)) corner_openings[c] = alpha;
    }

    void validate_3d(bool singular_listed) {
        facet_normals_.clear();
        const double tol = 1e-9 * diameter_;
        std::map<std::pair<int, int>, std::vector<int>> directed;
        for (std::size_t f = 0; f < facets.size(); ++f) {
            const auto &poly = facets[f].vertices;
            if (poly.size() < 3) throw ValidationError("facet " + std::to_string(f) + " has fewer than 3 vertices");
            const Vec3 n = detail::newell_normal(vertices, poly);
            if (norm(n) <= 1e-14 * diameter_ * diameter_)
                throw ValidationError("facet " + std::to_string(f) + " is degenerate");
            const Vec3 un = normalized(n);
            for (int v : poly)
                if (std::abs(dot(vertices[v] - vertices[poly[0]], un)) > tol)
                    throw ValidationError("facet " + std::to_string(f) + " is not planar");
            facet_normals_.push_back(n);
            for (std::size_t i = 0; i < poly.size(); ++i)
                directed[{poly[i], poly[(i + 1) % poly.size()]}].push_back(static_cast<int>(f));
        }
        std::map<CornerId, std::pair<int, int>> edge_facets; // edge -> (facet with i->j, facet with j->i), i<j
        for (const auto &[e, fs] : directed) {
            if (fs.size() != 1)
                throw ValidationError("inconsistent facet orientation at edge " + std::to_string(e.first) + "-" +
                                      std::to_string(e.second));
            if (!directed.count({e.second, e.first}))
                throw ValidationError("boundary not closed at edge " + std::to_string(e.first) + "-" +
                                      std::to_string(e.second));
            if (e.first < e.second)
                edge_facets[CornerId::edge(e.first, e.second)] = {fs[0], directed.at({e.second, e.first})[0]};
        }
        // Connectivity of the facet adjacency graph.
        {
            std::vector<int> comp(facets.size(), -1);
            std::vector<std::vector<int>> adj(facets.size());
            for (const auto &[e, ff] : edge_facets) {
                adj[ff.first].push_back(ff.second);
                adj[ff.second].push_back(ff.first);
            }
            std::vector<int> stack{0};
            comp[0] = 0;
            while (!stack.empty()) {
                const int f = stack.back();
                stack.pop_back();
                for (int g : adj[f])
                    if (comp[g] < 0) comp[g] = 0, stack.push_back(g);
            }
            for (std::size_t f = 0; f < facets.size(); ++f)
                if (comp[f] < 0) throw ValidationError("boundary not connected (facet " + std::to_string(f) + ")");
        }
        // Enclosed volume via the divergence theorem; flip to outward orientation if needed.
        double vol = 0.0;
        for (std::size_t f = 0; f < facets.size(); ++f)
            vol += dot(vertices[facets[f].vertices[0]], facet_normals_[f]) / 6.0;
        if (std::abs(vol) <= 1e-14 * std::pow(diameter_, 3)) throw ValidationError("polyhedron has zero volume");
        if (vol < 0) {
            for (auto &fc : facets) std::reverse(fc.vertices.begin(), fc.vertices.end());
            for (auto &n : facet_normals_) n = -1.0 * n;
            for (auto &[e, ff] : edge_facets) std::swap(ff.first, ff.second);
            vol = -vol;
        }
        measure_ = vol;
        // Interior dihedral angle of every boundary edge.
        std::map<CornerId, double> geometric;
        std::set<CornerId> required;
        std::set<int> corner_vertices;
        for (const auto &[e, ff] : edge_facets) {
            const Vec3 d = normalized(vertices[e.b] - vertices[e.a]); // direction as seen in facet ff.first
            const Vec3 n1 = normalized(facet_normals_[ff.first]), n2 = normalized(facet_normals_[ff.second]);
            const Vec3 t1 = cross(n1, d), t2 = cross(n2, -1.0 * d);
            double ang = std::acos(std::clamp(dot(t1, t2), -1.0, 1.0));
            if (dot(t2, n1) > 1e-12) ang = 2 * pi - ang;
            geometric[e] = ang;
            const bool bc_change = facets[ff.first].flag != facets[ff.second].flag;
            if (std::abs(ang - pi) > 1e-9 || bc_change) {
                required.insert(e);
                corner_vertices.insert(e.a);
                corner_vertices.insert(e.b);
            }
        }
        std::set<CornerId> sing(singular_edges.begin(), singular_edges.end());
        for (const CornerId &e : sing)
            if (!edge_facets.count(e))
                throw ValidationError("singular edge " + to_string(e) + " is not a boundary edge");
        if (!singular_listed) {
            sing.insert(required.begin(), required.end());
        } else {
            for (const CornerId &e : required)
                if (!sing.count(e)) throw ValidationError("singular set omits non-smooth edge " + to_string(e));
        }
        singular_edges.assign(sing.begin(), sing.end());
        std::set<int> sv(singular_vertices.begin(), singular_vertices.end());
        for (const CornerId &e : singular_edges) sv.insert(e.a), sv.insert(e.b);
        if (singular_listed)
            for (int v : corner_vertices)
                if (!sv.count(v)) throw ValidationError("singular set omits polyhedron vertex " + std::to_string(v));
        for (int v : sv)
            if (v < 0 || v >= static_cast<int>(vertices.size()))
                throw ValidationError("singular vertex " + std::to_string(v) + " out of range");
        singular_vertices.assign(sv.begin(), sv.end());
        check_openings(geometric);
    }
};

/// pi / alpha for the corner's recorded opening.
inline double corner_exponent(const Domain &domain, const CornerId &corner) { return pi / domain.opening(corner); }

/// Smallest exponent over all corners: pi / alpha_max.
inline double domain_exponent(const Domain &domain) {
    double alpha_max = 0.0;
    for (const auto &[c, alpha] : domain.corner_openings) alpha_max = std::max(alpha_max, alpha);
    return alpha_max > 0 ? pi / alpha_max : std::numeric_limits<double>::infinity();
}

inline VertexType classify_point(const Vec3 &x, const Domain &domain, double tol = -1.0) {
    return domain.classify(x, tol);
}

inline double singular_distance(const Vec3 &x, const Domain &domain) { return domain.singular_distance(x); }

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_ws(const std::string &s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

inline double parse_double(const std::string &tok, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception &) {
        throw ValidationError("line " + std::to_string(line) + ": expected a number, got '" + tok + "'");
    }
}

inline int parse_int(const std::string &tok, int line) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception &) {
        throw ValidationError("line " + std::to_string(line) + ": expected an integer, got '" + tok + "'");
    }
}

/// "7" -> vertex 7, "3-9" -> edge {3,9}.
inline CornerId parse_corner(const std::string &tok, int line) {
    const auto dash = tok.find('-');
    if (dash == std::string::npos || dash == 0) return CornerId::vertex(parse_int(tok, line));
    return CornerId::edge(parse_int(tok.substr(0, dash), line), parse_int(tok.substr(dash + 1), line));
}

/// Splits "key=value"; returns false when no '=' is present.
inline bool split_kv(const std::string &tok, std::string &key, std::string &value) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) return false;
    key = tok.substr(0, eq);
    value = tok.substr(eq + 1);
    return true;
}

} // namespace detail

/// Parses and validates a domain-spec text.
///
/// Sections: [vertices] "x y [z]"; [facets] "i j ... D|N"; [singular] "i [alpha=..]" or
/// "edge i j [alpha=..]"; [grading] "m=", "a=", "kappa=", "kappa <id> <value>", "a <id> <value>".
inline Domain load_domain(const std::string &text) {
    Domain d;
    std::istringstream in(text);
    std::string section;
    int lineno = 0;
    int coord_count = -1;
    bool singular_listed = false;
    for (std::string raw; std::getline(in, raw);) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ValidationError("line " + std::to_string(lineno) + ": malformed section header");
            section = line.substr(1, line.size() - 2);
            if (section != "vertices" && section != "facets" && section != "singular" && section != "grading")
                throw ValidationError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            if (section == "singular") singular_listed = true;
            continue;
        }
        const auto tok = detail::split_ws(line);
        if (section.empty()) throw ValidationError("line " + std::to_string(lineno) + ": content before any section");
        if (section == "vertices") {
            if (tok.size() != 2 && tok.size() != 3)
                throw ValidationError("line " + std::to_string(lineno) + ": vertex needs 2 or 3 coordinates");
            if (coord_count < 0) coord_count = static_cast<int>(tok.size());
            if (coord_count != static_cast<int>(tok.size()))
                throw ValidationError("line " + std::to_string(lineno) + ": mixed 2D/3D coordinates");
            Vec3 p{0, 0, 0};
            for (std::size_t k = 0; k < tok.size(); ++k) p[k] = detail::parse_double(tok[k], lineno);
            d.vertices.push_back(p);
        } else if (section == "facets") {
            if (tok.size() < 3)
                throw ValidationError("line " + std::to_string(lineno) + ": facet needs vertex indices and a D/N flag");
            BoundaryFacet f;
            const std::string &flag = tok.back();
            if (flag == "D")
                f.flag = BoundaryFlag::Dirichlet;
            else if (flag == "N")
                f.flag = BoundaryFlag::Neumann;
            else
                throw ValidationError("line " + std::to_string(lineno) + ": facet flag must be D or N");
            for (std::size_t k = 0; k + 1 < tok.size(); ++k) f.vertices.push_back(detail::parse_int(tok[k], lineno));
            d.facets.push_back(std::move(f));
        } else if (section == "singular") {
            std::size_t k = 0;
            CornerId c;
            if (tok[0] == "edge") {
                if (tok.size() < 3) throw ValidationError("line " + std::to_string(lineno) + ": edge needs two vertices");
                c = CornerId::edge(detail::parse_int(tok[1], lineno), detail::parse_int(tok[2], lineno));
                d.singular_edges.push_back(c);
                k = 3;
            } else {
                c = CornerId::vertex(detail::parse_int(tok[0], lineno));
                d.singular_vertices.push_back(c.a);
                k = 1;
            }
            for (; k < tok.size(); ++k) {
                std::string key, value;
                if (!detail::split_kv(tok[k], key, value) || key != "alpha")
                    throw ValidationError("line " + std::to_string(lineno) + ": unexpected token '" + tok[k] + "'");
                d.corner_openings[c] = detail::parse_double(value, lineno);
            }
        } else { // grading
            std::string key, value;
            if (tok.size() == 1 && detail::split_kv(tok[0], key, value)) {
                if (key == "m")
                    d.grading.m = detail::parse_int(value, lineno);
                else if (key == "a")
                    d.grading.a = detail::parse_double(value, lineno);
                else if (key == "kappa")
                    d.grading.kappa_global = detail::parse_double(value, lineno);
                else
                    throw ValidationError("line " + std::to_string(lineno) + ": unknown grading key '" + key + "'");
            } else if (tok.size() == 3 && (tok[0] == "kappa" || tok[0] == "a")) {
                const CornerId c = detail::parse_corner(tok[1], lineno);
                const double v = detail::parse_double(tok[2], lineno);
                (tok[0] == "kappa" ? d.grading.kappa_corner : d.grading.a_corner)[c] = v;
            } else {
                throw ValidationError("line " + std::to_string(lineno) + ": malformed grading entry");
            }
        }
    }
    d.dimension = coord_count == 3 ? 3 : 2;
    std::sort(d.singular_edges.begin(), d.singular_edges.end());
    d.validate(singular_listed);
    return d;
}

/// Writes a domain back in the load_domain grammar (singular set listed explicitly).
inline std::string to_spec_text(const Domain &d) {
    std::ostringstream out;
    out.precision(17);
    out << "[vertices]\n";
    for (const Vec3 &p : d.vertices) {
        out << p[0] << ' ' << p[1];
        if (d.dimension == 3) out << ' ' << p[2];
        out << '\n';
    }
    out << "[facets]\n";
    for (const auto &f : d.facets) {
        for (int v : f.vertices) out << v << ' ';
        out << to_char(f.flag) << '\n';
    }
    out << "[singular]\n";
    if (d.dimension == 2)
        for (int v : d.singular_vertices) out << v << '\n';
    else
        for (const auto &e : d.singular_edges) out << "edge " << e.a << ' ' << e.b << '\n';
    out << "[grading]\nm=" << d.grading.m << "\na=" << d.grading.a << '\n';
    if (d.grading.kappa_global) out << "kappa=" << *d.grading.kappa_global << '\n';
    for (const auto &[c, k] : d.grading.kappa_corner) out << "kappa " << to_string(c) << ' ' << k << '\n';
    for (const auto &[c, a] : d.grading.a_corner) out << "a " << to_string(c) << ' ' << a << '\n';
    return out.str();
}

} // namespace polygrade
