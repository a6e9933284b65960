#pragma once

#include "polygrade/refine2d.hpp"

#include <optional>
#include <vector>

namespace polygrade {

/// Uniform tetrahedron split: Bey's 8-child red refinement or the 12-child barycentric-cone pattern.
enum class TetSplit { red8, cone12 };

enum class TetKind { S4, VS3, VESS };

inline const char *kind_name(TetKind k) {
    switch (k) {
    case TetKind::S4: return "S4";
    case TetKind::VS3: return "VS3";
    default: return "VESS";
    }
}

struct Tet4 {
    std::array<int, 4> v{};
    int level = 0;
};

/// Straight triangular prism (b0 b1 b2 | t0 t1 t2) with lateral edges b_i t_i.
/// Lateral quad i is (b_i, b_i+1, t_i+1, t_i); mark 0 selects the diagonal b_i-t_i+1, mark 1 selects b_i+1-t_i.
struct Prism6 {
    std::array<int, 6> v{};
    std::array<std::int8_t, 3> mark{-1, -1, -1};
    int level = 0;
};

/// The mixed tetrahedron/prism complex T'_n.
struct Decomposition {
    VertexStore store;
    std::vector<Tet4> tets;
    std::vector<Prism6> prisms;
    int level = 0;
};

/// Kind of a tetrahedron from its type multiset; throws with the offending pattern.
inline TetKind tet_kind(const VertexStore &store, const Tet4 &t) {
    int nv = 0, ne = 0;
    for (int v : t.v) nv += store.types[v] == VertexType::V, ne += store.types[v] == VertexType::E;
    if (nv > 1) throw ValidationError("VV edge");
    if (ne > 1) throw ValidationError("EE edge in a tetrahedron");
    if (nv == 0 && ne == 0) return TetKind::S4;
    if (nv == 1 && ne == 0) return TetKind::VS3;
    if (nv == 1 && ne == 1) return TetKind::VESS;
    throw ValidationError("type pattern ES3 is not allowed");
}

/// Reorders a VESS tetrahedron to (V, E, S, S).
inline Tet4 canonical_vess(const VertexStore &store, Tet4 t) {
    for (int k = 0; k < 4; ++k)
        if (store.types[t.v[k]] == VertexType::V) std::swap(t.v[0], t.v[k]);
    for (int k = 1; k < 4; ++k)
        if (store.types[t.v[k]] == VertexType::E) std::swap(t.v[1], t.v[k]);
    return t;
}

inline std::array<int, 4> quad_vertices(const Prism6 &p, int i) {
    const int j = (i + 1) % 3;
    return {p.v[i], p.v[j], p.v[3 + j], p.v[3 + i]};
}

inline std::pair<int, int> quad_diagonal(const Prism6 &p, int i) {
    const auto q = quad_vertices(p, i);
    return p.mark[i] == 0 ? std::pair{q[0], q[2]} : std::pair{q[1], q[3]};
}

/// Mark of the diagonal through the lexicographically smallest vertex of the quad.
inline std::int8_t lexmin_mark(const VertexStore &store, const std::array<int, 4> &q) {
    int best = 0;
    for (int k = 1; k < 4; ++k)
        if (lex_less(store.points[q[k]], store.points[q[best]])) best = k;
    return static_cast<std::int8_t>(best == 0 || best == 2 ? 0 : 1);
}

/// Fills unset marks with the global rule.
inline void resolve_marks(const VertexStore &store, Prism6 &p) {
    for (int i = 0; i < 3; ++i)
        if (p.mark[i] < 0) p.mark[i] = lexmin_mark(store, quad_vertices(p, i));
}

/// Three diagonals admit a 3-tetrahedron split unless they form a cycle (all marks equal).
inline bool marks_acyclic(const std::array<std::int8_t, 3> &m) { return !(m[0] == m[1] && m[1] == m[2]); }

/// Splits a prism into 3 tetrahedra consistent with its marks: the vertex where two diagonals meet
/// takes the opposite base, the remaining pyramid is cut along the third diagonal.
inline std::array<std::array<int, 4>, 3> prism_to_tets(const Prism6 &p) {
    if (!marks_acyclic(p.mark)) throw ValidationError("prism marks form a cycle");
    const auto &v = p.v;
    for (int i = 0; i < 3; ++i) {
        const int prev = (i + 2) % 3;
        const int i1 = (i + 1) % 3;
        const bool at_bottom = p.mark[i] == 0 && p.mark[prev] == 1;
        const bool at_top = p.mark[i] == 1 && p.mark[prev] == 0;
        if (!at_bottom && !at_top) continue;
        // apex and its layer / the opposite layer
        const int off = at_bottom ? 0 : 3, opp = at_bottom ? 3 : 0;
        const int apex = v[off + i];
        std::array<std::array<int, 4>, 3> out{};
        out[0] = {apex, v[opp + 0], v[opp + 1], v[opp + 2]};
        const int d0 = quad_diagonal(p, i1).first;
        // pyramid over quad i1 = (b_i1, b_i2, t_i2, t_i1), split along (d0, d1)
        const auto q = quad_vertices(p, i1);
        if (d0 == q[0]) {
            out[1] = {apex, q[0], q[1], q[2]};
            out[2] = {apex, q[0], q[2], q[3]};
        } else {
            out[1] = {apex, q[0], q[1], q[3]};
            out[2] = {apex, q[1], q[2], q[3]};
        }
        return out;
    }
    throw ValidationError("prism marks form a cycle");
}

inline double tet_volume(const VertexStore &s, const std::array<int, 4> &v) {
    return signed_volume(s.points[v[0]], s.points[v[1]], s.points[v[2]], s.points[v[3]]);
}

inline double prism_volume(const VertexStore &s, const Prism6 &p) {
    double vol = 0.0;
    Prism6 q = p;
    if (!marks_acyclic(q.mark)) q.mark = {0, 0, 1};
    for (const auto &t : prism_to_tets(q)) vol += std::abs(tet_volume(s, t));
    return vol;
}

namespace detail {

/// Bey's red refinement of (x0,x1,x2,x3) with shared edge points; children keep Bey's vertex order.
inline std::vector<Tet4> red_split(EdgeSplitter &sp, const Tet4 &t) {
    const auto &x = t.v;
    const int x01 = sp.split(x[0], x[1]), x02 = sp.split(x[0], x[2]), x03 = sp.split(x[0], x[3]);
    const int x12 = sp.split(x[1], x[2]), x13 = sp.split(x[1], x[3]), x23 = sp.split(x[2], x[3]);
    const int lv = t.level + 1;
    std::vector<Tet4> out = {{{x[0], x01, x02, x03}, lv}, {{x01, x[1], x12, x13}, lv},
                             {{x02, x12, x[2], x23}, lv}, {{x03, x13, x23, x[3]}, lv}};
    // Inner octahedron; Bey's diagonal x02-x13, with the other two as fallback when grading warps it.
    const VertexStore &s = sp.store();
    const double octa = std::abs(tet_volume(s, x)) - [&] {
        double c = 0;
        for (const auto &ch : out) c += std::abs(tet_volume(s, ch.v));
        return c;
    }();
    const std::array<std::array<int, 6>, 3> diagonals = {{
        {x02, x13, x01, x12, x23, x03}, // axis (a,b), equator cycle
        {x01, x23, x02, x12, x13, x03},
        {x03, x12, x01, x02, x23, x13},
    }};
    for (const auto &d : diagonals) {
        std::array<Tet4, 4> ch;
        double sum = 0.0, mn = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 4; ++k) {
            ch[k] = {{d[0], d[1], d[2 + k], d[2 + (k + 1) % 4]}, lv};
            const double vol = std::abs(tet_volume(s, ch[k].v));
            sum += vol;
            mn = std::min(mn, vol);
        }
        if (mn > 1e-12 * octa && std::abs(sum - octa) <= 1e-9 * octa) {
            if (d[0] == x02) {
                // Bey's order for the four inner children
                out.push_back({{x01, x02, x03, x13}, lv});
                out.push_back({{x01, x02, x12, x13}, lv});
                out.push_back({{x02, x03, x13, x23}, lv});
                out.push_back({{x02, x12, x13, x23}, lv});
            } else {
                out.insert(out.end(), ch.begin(), ch.end());
            }
            return out;
        }
    }
    throw NumericalError("red split: inner octahedron cannot be split into positive tetrahedra");
}

/// 4 corner tetrahedra plus the inner octahedron coned from the centroid of the six edge points.
inline std::vector<Tet4> cone_split(EdgeSplitter &sp, const Tet4 &t) {
    const auto &x = t.v;
    const int a = x[0], b = x[1], c = x[2], d = x[3];
    const int ab = sp.split(a, b), ac = sp.split(a, c), ad = sp.split(a, d);
    const int bc = sp.split(b, c), bd = sp.split(b, d), cd = sp.split(c, d);
    const VertexStore &s = sp.store();
    Vec3 centroid{0, 0, 0};
    for (int p : {ab, ac, ad, bc, bd, cd}) centroid = centroid + (1.0 / 6.0) * s.points[p];
    const int o = sp.interior(centroid);
    const int lv = t.level + 1;
    std::vector<Tet4> out = {{{a, ab, ac, ad}, lv}, {{b, ab, bc, bd}, lv}, {{c, ac, bc, cd}, lv}, {{d, ad, bd, cd}, lv}};
    const std::array<std::array<int, 3>, 8> faces = {{{ab, ac, ad},
                                                       {ab, bc, bd},
                                                       {ac, bc, cd},
                                                       {ad, bd, cd},
                                                       {ab, bc, ac},
                                                       {ab, bd, ad},
                                                       {ac, cd, ad},
                                                       {bc, cd, bd}}};
    for (const auto &f : faces) out.push_back({{o, f[0], f[1], f[2]}, lv});
    for (const auto &ch : out)
        if (!(std::abs(tet_volume(sp.store(), ch.v)) > 0.0))
            throw NumericalError("cone split produced a degenerate child");
    return out;
}

} // namespace detail

/// Uniform split of an S4 tetrahedron (8 or 12 children, all S4).
inline std::vector<Tet4> refine_s4(EdgeSplitter &sp, const Tet4 &t, TetSplit mode = TetSplit::red8) {
    if (tet_kind(sp.store(), t) != TetKind::S4) throw ValidationError("refine_s4 needs an S4 tetrahedron");
    return mode == TetSplit::red8 ? detail::red_split(sp, t) : detail::cone_split(sp, t);
}

/// Graded split of a VS3 tetrahedron: edges through V are cut at ratio kappa from V. One VS3 child
/// (first in the output), the rest S4.
inline std::vector<Tet4> refine_vs3(EdgeSplitter &sp, const Tet4 &t, TetSplit mode = TetSplit::red8) {
    if (tet_kind(sp.store(), t) != TetKind::VS3) throw ValidationError("refine_vs3 needs a VS3 tetrahedron");
    Tet4 r = t;
    for (int k = 1; k < 4; ++k)
        if (sp.store().types[r.v[k]] == VertexType::V) std::swap(r.v[0], r.v[k]);
    return mode == TetSplit::red8 ? detail::red_split(sp, r) : detail::cone_split(sp, r);
}

struct VessChildren {
    std::vector<Tet4> tets; // VESS corner first, then 4 S4
    Prism6 prism;
};

/// Graded split of a VESS tetrahedron (A:V, B:E, C, D): VESS corner at A, a straight prism along
/// AB containing B, and 4 S4 tetrahedra (two corners at C, D and a marked pyramid split).
inline VessChildren refine_vess(EdgeSplitter &sp, const Tet4 &t) {
    VertexStore &s = sp.store();
    if (tet_kind(s, t) != TetKind::VESS) throw ValidationError("refine_vess needs a VESS tetrahedron");
    const Tet4 c = canonical_vess(s, t);
    const int A = c.v[0], B = c.v[1], C = c.v[2], D = c.v[3];
    const int pab = sp.split(A, B), pac = sp.split(A, C), pad = sp.split(A, D);
    const int pbc = sp.split(B, C), pbd = sp.split(B, D), mcd = sp.split(C, D);
    const int lv = t.level + 1;
    VessChildren out;
    out.prism.v = {pab, pac, pad, B, pbc, pbd};
    out.prism.level = lv;
    resolve_marks(s, out.prism);
    out.tets.push_back({{A, pab, pac, pad}, lv});
    out.tets.push_back({{C, pac, pbc, mcd}, lv});
    out.tets.push_back({{D, pad, pbd, mcd}, lv});
    // quad 1 of the prism is (pac, pad, pbd, pbc); the pyramid over it shares the prism's diagonal
    const auto q = quad_vertices(out.prism, 1);
    if (out.prism.mark[1] == 0) {
        out.tets.push_back({{mcd, q[0], q[1], q[2]}, lv});
        out.tets.push_back({{mcd, q[0], q[2], q[3]}, lv});
    } else {
        out.tets.push_back({{mcd, q[0], q[1], q[3]}, lv});
        out.tets.push_back({{mcd, q[1], q[2], q[3]}, lv});
    }
    if (!marks_acyclic(out.prism.mark)) throw ValidationError("VESS prism marks form a cycle");
    for (const auto &ch : out.tets)
        if (!(std::abs(tet_volume(s, ch.v)) > 0.0)) throw NumericalError("VESS split produced a degenerate child");
    return out;
}

/// Semi-uniform prism split: the base triangle by the graded 4-split (kappa toward b0 when it is E),
/// the axis at midpoints. Children inherit the parent's diagonal direction on every sub-quad of a
/// parent quad; interior quads are chosen so every child stays acyclic.
inline std::array<Prism6, 8> refine_prism(EdgeSplitter &sp, const Prism6 &p) {
    const VertexStore &s = sp.store();
    const auto &v = p.v;
    const int cp = sp.split(v[0], v[1]), bp = sp.split(v[0], v[2]), ap = sp.split(v[1], v[2]);
    const int cpt = sp.split(v[3], v[4]), bpt = sp.split(v[3], v[5]), apt = sp.split(v[4], v[5]);
    std::array<int, 3> m{};
    for (int i = 0; i < 3; ++i) m[i] = sp.split(v[i], v[3 + i]);
    std::array<int, 3> qc{};
    for (int i = 0; i < 3; ++i) {
        const auto q = quad_vertices(p, i);
        const bool all_s = std::all_of(q.begin(), q.end(), [&](int x) { return s.types[x] == VertexType::S; });
        if (all_s) {
            const auto [d0, d1] = quad_diagonal(p, i);
            qc[i] = sp.split(d0, d1);
        } else {
            qc[i] = sp.split(m[i], m[(i + 1) % 3]);
        }
    }
    const auto d = p.mark;
    std::array<std::int8_t, 3> e{};
    bool found = false;
    for (int bits = 0; bits < 8 && !found; ++bits) {
        e = {static_cast<std::int8_t>(bits & 1), static_cast<std::int8_t>((bits >> 1) & 1),
             static_cast<std::int8_t>((bits >> 2) & 1)};
        found = marks_acyclic({d[0], e[0], d[2]}) && marks_acyclic({d[1], e[1], d[0]}) &&
                marks_acyclic({d[2], e[2], d[1]}) && marks_acyclic(e);
    }
    if (!found) throw ValidationError("no acyclic mark assignment for refined prism");
    const auto flip = [](std::int8_t x) { return static_cast<std::int8_t>(1 - x); };
    const int lv = p.level + 1;
    // bottom layer (base, mid) and top layer (mid, top)
    const std::array<std::array<int, 3>, 2> lower = {{{v[0], v[1], v[2]}, {m[0], m[1], m[2]}}};
    const std::array<std::array<int, 3>, 2> upper = {{{m[0], m[1], m[2]}, {v[3], v[4], v[5]}}};
    const std::array<std::array<int, 3>, 2> lower_e = {{{cp, ap, bp}, {qc[0], qc[1], qc[2]}}};
    const std::array<std::array<int, 3>, 2> upper_e = {{{qc[0], qc[1], qc[2]}, {cpt, apt, bpt}}};
    std::array<Prism6, 8> out;
    for (int layer = 0; layer < 2; ++layer) {
        const auto &lo = layer == 0 ? lower[0] : upper[0];
        const auto &hi = layer == 0 ? lower[1] : upper[1];
        const auto &le = layer == 0 ? lower_e[0] : upper_e[0]; // (cp, ap, bp) on the lower face
        const auto &he = layer == 0 ? lower_e[1] : upper_e[1];
        Prism6 *o = &out[4 * layer];
        o[0] = {{lo[0], le[0], le[2], hi[0], he[0], he[2]}, {d[0], e[0], d[2]}, lv};
        o[1] = {{lo[1], le[1], le[0], hi[1], he[1], he[0]}, {d[1], e[1], d[0]}, lv};
        o[2] = {{lo[2], le[2], le[1], hi[2], he[2], he[1]}, {d[2], e[2], d[1]}, lv};
        o[3] = {{le[0], le[1], le[2], he[0], he[1], he[2]}, {flip(e[1]), flip(e[2]), flip(e[0])}, lv};
    }
    return out;
}

struct ElementCounts {
    std::size_t s4 = 0, vs3 = 0, vess = 0, prisms = 0;
    std::size_t total() const { return s4 + vs3 + vess + prisms; }
    bool operator==(const ElementCounts &) const = default;
};

inline ElementCounts count_elements(const Decomposition &d) {
    ElementCounts c;
    for (const auto &t : d.tets) switch (tet_kind(d.store, t)) {
        case TetKind::S4: ++c.s4; break;
        case TetKind::VS3: ++c.vs3; break;
        case TetKind::VESS: ++c.vess; break;
        }
    c.prisms = d.prisms.size();
    return c;
}

/// Conforming tetrahedral mesh T_n: tets copied, every prism split into 3 following its marks,
/// all cells positively oriented. origin[k] is the decomposition element of cell k (prisms numbered
/// after the tets).
inline SimplicialMesh tetrahedralize(const Decomposition &d, const Domain *domain = nullptr,
                                     std::vector<int> *origin = nullptr) {
    SimplicialMesh mesh;
    mesh.dim = 3;
    mesh.level = d.level;
    mesh.points = d.store.points;
    mesh.types = d.store.types;
    mesh.cells.reserve(d.tets.size() + 3 * d.prisms.size());
    if (origin) origin->clear();
    auto push = [&](std::array<int, 4> c, int from) {
        if (tet_volume(d.store, c) < 0) std::swap(c[2], c[3]);
        mesh.cells.push_back(c);
        if (origin) origin->push_back(from);
    };
    for (std::size_t k = 0; k < d.tets.size(); ++k) push(d.tets[k].v, static_cast<int>(k));
    for (std::size_t k = 0; k < d.prisms.size(); ++k)
        for (const auto &t : prism_to_tets(d.prisms[k])) push(t, static_cast<int>(d.tets.size() + k));
    if (domain) assign_boundary(mesh, *domain);
    return mesh;
}

struct DecompositionReport {
    bool ok = true;
    std::vector<std::string> violations;
    ConformityReport conformity;
    ElementCounts counts;
    std::map<std::string, AngleStats> angles; // dihedral angles of S4/VS3/VESS, base angles of prisms
    double max_anisotropy = 0.0;              // axial length / cross-section diameter, over prisms

    void fail(std::string what) {
        ok = false;
        violations.push_back(std::move(what));
    }
};

/// Full invariant check of a decomposition against its domain: element type patterns, prism
/// straightness and marks, singular-edge coverage, and conformity of the tetrahedralization.
inline DecompositionReport validate_decomposition(const Decomposition &d, const Domain &domain) {
    DecompositionReport rep;
    const VertexStore &s = d.store;
    const double tol = 1e-9;
    std::map<CornerId, std::set<std::pair<int, int>>> edge_segments;
    for (std::size_t k = 0; k < d.tets.size(); ++k) {
        const auto &t = d.tets[k];
        const std::string id = "tet " + std::to_string(k) + ": ";
        TetKind kind;
        try {
            kind = tet_kind(s, t);
        } catch (const ValidationError &e) {
            rep.fail(id + e.what());
            continue;
        }
        const double vol = tet_volume(s, t.v);
        if (!(std::abs(vol) > 0.0)) rep.fail(id + "degenerate");
        const auto p = std::array<Vec3, 4>{s.points[t.v[0]], s.points[t.v[1]], s.points[t.v[2]], s.points[t.v[3]]};
        for (double a : dihedral_angles(p)) rep.angles[kind_name(kind)].add(a);
        switch (kind) {
        case TetKind::S4: ++rep.counts.s4; break;
        case TetKind::VS3: ++rep.counts.vs3; break;
        case TetKind::VESS: {
            ++rep.counts.vess;
            const Tet4 c = canonical_vess(s, t);
            const CornerId ce = s.corners[c.v[1]], cv = s.corners[c.v[0]];
            if (!ce.is_edge() || (cv.a != ce.a && cv.a != ce.b)) {
                rep.fail(id + "VE edge does not lie on a singular edge");
                break;
            }
            const Vec3 ab = s.points[c.v[1]] - s.points[c.v[0]];
            const double len = norm(ab);
            for (int j : {2, 3})
                if (std::abs(dot(ab, s.points[c.v[j]] - s.points[c.v[1]])) >
                    tol * len * norm(s.points[c.v[j]] - s.points[c.v[1]]))
                    rep.fail(id + "face BCD is not perpendicular to the singular edge AB");
            edge_segments[ce].insert({std::min(c.v[0], c.v[1]), std::max(c.v[0], c.v[1])});
            break;
        }
        }
    }
    for (std::size_t k = 0; k < d.prisms.size(); ++k) {
        const auto &p = d.prisms[k];
        const std::string id = "prism " + std::to_string(k) + ": ";
        ++rep.counts.prisms;
        const Vec3 axis = s.points[p.v[3]] - s.points[p.v[0]];
        const double h = norm(axis);
        double diam = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) diam = std::max(diam, distance(s.points[p.v[i]], s.points[p.v[j]]));
        const double scale = std::max(h, diam);
        bool straight = h > 0.0 && diam > 0.0;
        for (int i = 1; i < 3 && straight; ++i) {
            if (norm(s.points[p.v[3 + i]] - s.points[p.v[i]] - axis) > tol * scale) straight = false;
            if (std::abs(dot(axis, s.points[p.v[i]] - s.points[p.v[0]])) > tol * scale * scale) straight = false;
        }
        if (!straight) rep.fail(id + "prism not straight");
        if (diam > 0.0) rep.max_anisotropy = std::max(rep.max_anisotropy, h / diam);
        rep.angles["prism"].add(min_triangle_angle(s.points[p.v[0]], s.points[p.v[1]], s.points[p.v[2]]));
        int ne = 0, nv = 0;
        for (int x : p.v) ne += s.types[x] == VertexType::E, nv += s.types[x] == VertexType::V;
        if (nv) rep.fail(id + "prism contains a V vertex");
        if (ne) {
            const bool axis_ok = s.types[p.v[0]] == VertexType::E && s.types[p.v[3]] == VertexType::E && ne == 2 &&
                                 s.corners[p.v[0]] == s.corners[p.v[3]];
            if (!axis_ok) rep.fail(id + "E vertices must be exactly the axis b0-t0 on one singular edge");
            else edge_segments[s.corners[p.v[0]]].insert({std::min(p.v[0], p.v[3]), std::max(p.v[0], p.v[3])});
        }
        if (std::any_of(p.mark.begin(), p.mark.end(), [](std::int8_t m) { return m != 0 && m != 1; }))
            rep.fail(id + "unset mark");
        else if (!marks_acyclic(p.mark))
            rep.fail(id + "marks form a cycle");
    }
    for (const CornerId &e : domain.singular_edges) {
        double covered = 0.0;
        for (const auto &[a, b] : edge_segments[e]) covered += distance(s.points[a], s.points[b]);
        const double len = distance(domain.vertices[e.a], domain.vertices[e.b]);
        if (std::abs(covered - len) > tol * len)
            rep.fail("singular edge " + to_string(e) + " covered to length " + std::to_string(covered) + " of " +
                     std::to_string(len));
    }
    if (!rep.ok) return rep;
    std::vector<int> origin;
    const SimplicialMesh mesh = tetrahedralize(d, nullptr, &origin);
    rep.conformity = check_conformity(mesh, &domain);
    if (!rep.conformity.ok) {
        rep.ok = false;
        // Name the decomposition elements owning each unmatched face.
        std::map<std::array<int, 3>, std::vector<int>> owners;
        for (const auto &f : rep.conformity.unmatched_faces) owners[f];
        for (std::size_t c = 0; c < mesh.num_cells(); ++c)
            for (const auto &f : detail::cell_faces(mesh, c))
                if (auto it = owners.find(detail::sorted_face(f).v); it != owners.end()) it->second.push_back(origin[c]);
        const int nt = static_cast<int>(d.tets.size());
        for (const auto &[f, elems] : owners) {
            std::string msg = "unmatched face " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " +
                              std::to_string(f[2]) + " of";
            for (int e : elems) msg += e < nt ? " tet " + std::to_string(e) : " prism " + std::to_string(e - nt);
            rep.violations.push_back(msg);
        }
        for (const auto &v : rep.conformity.violations)
            if (v.rfind("interior face", 0) != 0) rep.violations.push_back(v);
    }
    return rep;
}

inline void throw_if_invalid(const DecompositionReport &rep, const std::string &context) {
    if (rep.ok) return;
    std::string msg = context + ":";
    for (std::size_t i = 0; i < std::min<std::size_t>(rep.violations.size(), 12); ++i) msg += "\n  " + rep.violations[i];
    if (rep.violations.size() > 12) msg += "\n  ... " + std::to_string(rep.violations.size() - 12) + " more";
    throw ValidationError(msg);
}

/// In 3D the prism created next to a VESS tetrahedron is straight only if the vertex and its edge
/// share one grading ratio.
inline void check_kappa_3d(const Domain &domain, const GradingSpec &grading) {
    for (const CornerId &e : domain.singular_edges)
        for (int v : {e.a, e.b}) {
            const double kv = grading.kappa(CornerId::vertex(v)), ke = grading.kappa(e);
            if (std::abs(kv - ke) > 1e-15)
                throw ValidationError("kappa of vertex " + std::to_string(v) + " must equal kappa of singular edge " +
                                      to_string(e));
        }
}

/// One refinement step T'_n -> T'_n+1 with a shared edge-split memo; the result is validated.
inline Decomposition refine_decomposition(const Decomposition &d, const Domain &domain, const GradingSpec &grading,
                                          TetSplit mode = TetSplit::red8, bool validate = true) {
    check_kappa_3d(domain, grading);
    Decomposition out;
    out.store = d.store;
    out.store.memo.clear();
    out.level = d.level + 1;
    EdgeSplitter sp(out.store, &domain, grading);
    std::vector<Prism6> new_prisms;
    for (const auto &t : d.tets) {
        switch (tet_kind(out.store, t)) {
        case TetKind::S4: {
            auto ch = refine_s4(sp, t, mode);
            out.tets.insert(out.tets.end(), ch.begin(), ch.end());
            break;
        }
        case TetKind::VS3: {
            auto ch = refine_vs3(sp, t, mode);
            out.tets.insert(out.tets.end(), ch.begin(), ch.end());
            break;
        }
        case TetKind::VESS: {
            auto ch = refine_vess(sp, t);
            out.tets.insert(out.tets.end(), ch.tets.begin(), ch.tets.end());
            new_prisms.push_back(ch.prism);
            break;
        }
        }
    }
    out.prisms = std::move(new_prisms);
    for (const auto &p : d.prisms) {
        const auto ch = refine_prism(sp, p);
        out.prisms.insert(out.prisms.end(), ch.begin(), ch.end());
    }
    if (validate) throw_if_invalid(validate_decomposition(out, domain), "refined decomposition is not valid");
    return out;
}

/// Parses a decomposition spec:
///   [points]  x y z
///   [tets]    i j k l  T T T T
///   [prisms]  b0 b1 b2 t0 t1 t2  T T T T T T
///             mark <prism> <face> <0|1>
/// Types must agree with the domain classification; unset marks follow the global rule.
inline Decomposition load_initial_decomposition(const std::string &text, const Domain &domain) {
    if (domain.dimension != 3) throw ValidationError("decompositions need a 3D domain");
    Decomposition d;
    std::vector<std::vector<VertexType>> tet_types, prism_types;
    std::vector<std::array<int, 3>> overrides; // prism, face, mark
    std::istringstream in(text);
    std::string section;
    int lineno = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            section = line;
            if (section != "[points]" && section != "[tets]" && section != "[prisms]")
                throw ValidationError(where + "unknown section " + section);
            continue;
        }
        const auto tok = detail::split_ws(line);
        if (section == "[points]") {
            if (tok.size() != 3) throw ValidationError(where + "point needs 3 coordinates");
            d.store.add_classified({detail::parse_double(tok[0], lineno), detail::parse_double(tok[1], lineno),
                                    detail::parse_double(tok[2], lineno)},
                                   domain);
        } else if (section == "[tets]" || section == "[prisms]") {
            if (tok[0] == "mark") {
                if (section != "[prisms]" || tok.size() != 4) throw ValidationError(where + "expected 'mark <prism> <face> <0|1>'");
                overrides.push_back({detail::parse_int(tok[1], lineno), detail::parse_int(tok[2], lineno),
                                     detail::parse_int(tok[3], lineno)});
                continue;
            }
            const std::size_t n = section == "[tets]" ? 4 : 6;
            if (tok.size() != 2 * n)
                throw ValidationError(where + "expected " + std::to_string(n) + " vertex ids and " + std::to_string(n) +
                                      " types");
            std::vector<int> ids;
            std::vector<VertexType> types;
            for (std::size_t k = 0; k < n; ++k) {
                const int id = detail::parse_int(tok[k], lineno);
                if (id < 0 || id >= d.store.size()) throw ValidationError(where + "unknown point " + tok[k]);
                ids.push_back(id);
                if (tok[n + k].size() != 1) throw ValidationError(where + "bad type '" + tok[n + k] + "'");
                types.push_back(vertex_type_from_char(tok[n + k][0]));
            }
            if (n == 4) {
                d.tets.push_back({{ids[0], ids[1], ids[2], ids[3]}, 0});
                tet_types.push_back(types);
            } else {
                Prism6 p;
                std::copy(ids.begin(), ids.end(), p.v.begin());
                d.prisms.push_back(p);
                prism_types.push_back(types);
            }
        } else {
            throw ValidationError(where + "content before any section");
        }
    }
    auto check_types = [&](const std::string &id, const auto &ids, const std::vector<VertexType> &types) {
        for (std::size_t k = 0; k < types.size(); ++k)
            if (d.store.types[ids[k]] != types[k])
                throw ValidationError(id + ": vertex " + std::to_string(ids[k]) + " declared " + to_char(types[k]) +
                                      " but classified " + to_char(d.store.types[ids[k]]));
    };
    for (std::size_t k = 0; k < d.tets.size(); ++k) {
        const std::string id = "tet " + std::to_string(k);
        check_types(id, d.tets[k].v, tet_types[k]);
        try {
            tet_kind(d.store, d.tets[k]);
        } catch (const ValidationError &e) {
            throw ValidationError(id + ": " + e.what());
        }
    }
    for (std::size_t k = 0; k < d.prisms.size(); ++k) check_types("prism " + std::to_string(k), d.prisms[k].v, prism_types[k]);
    for (const auto &[p, f, m] : overrides) {
        if (p < 0 || p >= static_cast<int>(d.prisms.size()) || f < 0 || f > 2 || (m != 0 && m != 1))
            throw ValidationError("mark override out of range: " + std::to_string(p) + " " + std::to_string(f) + " " +
                                  std::to_string(m));
        d.prisms[p].mark[f] = static_cast<std::int8_t>(m);
    }
    for (auto &p : d.prisms) resolve_marks(d.store, p);
    throw_if_invalid(validate_decomposition(d, domain), "invalid initial decomposition");
    return d;
}

/// Writes a decomposition in the load_initial_decomposition grammar (marks written explicitly).
inline std::string to_decomposition_text(const Decomposition &d) {
    std::ostringstream out;
    out.precision(17);
    out << "[points]\n";
    for (const Vec3 &p : d.store.points) out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
    out << "[tets]\n";
    for (const auto &t : d.tets) {
        for (int v : t.v) out << v << ' ';
        for (int v : t.v) out << ' ' << to_char(d.store.types[v]);
        out << '\n';
    }
    out << "[prisms]\n";
    for (const auto &p : d.prisms) {
        for (int v : p.v) out << v << ' ';
        for (int v : p.v) out << ' ' << to_char(d.store.types[v]);
        out << '\n';
    }
    for (std::size_t k = 0; k < d.prisms.size(); ++k)
        for (int f = 0; f < 3; ++f) out << "mark " << k << ' ' << f << ' ' << int(d.prisms[k].mark[f]) << '\n';
    return out.str();
}

/// Graded sequence T'_0 .. T'_levels.
inline std::vector<Decomposition> decomposition_sequence(const Decomposition &d0, const Domain &domain,
                                                         const GradingSpec &grading, int levels,
                                                         TetSplit mode = TetSplit::red8) {
    std::vector<Decomposition> seq{d0};
    for (int n = 1; n <= levels; ++n) seq.push_back(refine_decomposition(seq.back(), domain, grading, mode));
    return seq;
}

} // namespace polygrade
