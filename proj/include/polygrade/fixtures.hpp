#pragma once

#include "polygrade/refine3d.hpp"

#include <tuple>

namespace polygrade {

namespace fixtures {

/// L-shape (-1,1)^2 minus [0,1]x[-1,0]; re-entrant corner at the origin (vertex 2).
inline std::string lshape2d_text(const std::string &flags = "DDDDDD") {
    const char *pts[] = {"-1 -1", "0 -1", "0 0", "1 0", "1 1", "-1 1"};
    std::string s = "[vertices]\n";
    for (const char *p : pts) s += std::string(p) + "\n";
    s += "[facets]\n";
    for (int i = 0; i < 6; ++i) s += std::to_string(i) + " " + std::to_string((i + 1) % 6) + " " + flags[i] + "\n";
    return s;
}

/// Unit square; facet i joins vertex i and i+1 (bottom, right, top, left).
inline std::string square2d_text(const std::string &flags = "DDDD") {
    std::string s = "[vertices]\n0 0\n1 0\n1 1\n0 1\n[facets]\n";
    for (int i = 0; i < 4; ++i) s += std::to_string(i) + " " + std::to_string((i + 1) % 4) + " " + flags[i] + "\n";
    return s;
}

/// Polygonal sector with apex at the origin and opening alpha; the arc is replaced by a polygon
/// with segments spanning at most pi/4.
inline std::string sector2d_text(double alpha) {
    if (!(alpha > 0 && alpha < 2 * pi)) throw ValidationError("sector opening must lie in (0, 2pi)");
    const int n = std::max(1, static_cast<int>(std::ceil(alpha / (pi / 4) - 1e-12)));
    std::ostringstream out;
    out.precision(17);
    out << "[vertices]\n0 0\n";
    for (int k = 0; k <= n; ++k) out << std::cos(alpha * k / n) << ' ' << std::sin(alpha * k / n) << '\n';
    out << "[facets]\n";
    const int nv = n + 2;
    for (int i = 0; i < nv; ++i) out << i << ' ' << (i + 1) % nv << " D\n";
    return out.str();
}

inline std::string cube3d_text() {
    return "[vertices]\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n"
           "[facets]\n0 3 2 1 D\n4 5 6 7 D\n0 1 5 4 D\n3 7 6 2 D\n0 4 7 3 D\n1 2 6 5 D\n";
}

/// L-shape times [0,1]: the vertical edge through the origin (vertices 2 and 8) has opening 3pi/2.
inline std::string prismwedge3d_text() {
    const char *base[] = {"-1 -1", "0 -1", "0 0", "1 0", "1 1", "-1 1"};
    std::string s = "[vertices]\n";
    for (const char *z : {" 0", " 1"})
        for (const char *p : base) s += std::string(p) + z + "\n";
    s += "[facets]\n5 4 3 2 1 0 D\n6 7 8 9 10 11 D\n";
    for (int i = 0; i < 6; ++i) {
        const int j = (i + 1) % 6;
        s += std::to_string(i) + " " + std::to_string(j) + " " + std::to_string(j + 6) + " " + std::to_string(i + 6) +
             " D\n";
    }
    return s;
}

/// (-1,1)^3 minus [0,1]^3: re-entrant vertex at the origin with three re-entrant edges.
inline std::string fichera3d_text() {
    return "[vertices]\n"
           "-1 -1 -1\n1 -1 -1\n1 1 -1\n-1 1 -1\n-1 -1 1\n1 -1 1\n-1 1 1\n0 0 0\n"
           "1 1 0\n1 0 0\n1 0 1\n0 1 1\n0 1 0\n0 0 1\n"
           "[facets]\n"
           "0 4 6 3 D\n0 1 5 4 D\n0 3 2 1 D\n"
           "1 2 8 9 10 5 D\n3 6 11 12 8 2 D\n4 5 10 13 11 6 D\n"
           "7 12 11 13 D\n7 13 10 9 D\n7 9 8 12 D\n";
}

inline std::vector<std::array<int, 3>> cube3d_cubes() { return {{0, 0, 0}}; }
inline std::vector<std::array<int, 3>> prismwedge3d_cubes() { return {{-1, -1, 0}, {-1, 0, 0}, {0, 0, 0}}; }
inline std::vector<std::array<int, 3>> fichera3d_cubes() {
    std::vector<std::array<int, 3>> c;
    for (int x : {-1, 0})
        for (int y : {-1, 0})
            for (int z : {-1, 0})
                if (!(x == 0 && y == 0 && z == 0)) c.push_back({x, y, z});
    return c;
}

} // namespace fixtures

/// Initial decomposition T'_0 of a union of axis-aligned unit cubes (given by their min corners).
///
/// Every unit cube is cut into 8 half-cubes, each anchored at one cube corner p. A half-cube at a
/// singular vertex is coned from p over its three far faces (VESS + VS3 where the far face meets a
/// singular edge, two VS3 otherwise); at a point inside a singular edge it becomes one straight
/// E-prism along the edge plus three S4 tets; elsewhere it gets Kuhn's 6-tetrahedron split.
inline Decomposition cube_union_decomposition(const Domain &domain, const std::vector<std::array<int, 3>> &cubes) {
    using Key = std::tuple<int, int, int>; // doubled coordinates
    struct Element {
        std::vector<Key> v;
    };
    std::vector<Element> tets, prisms;
    auto key = [](const Vec3 &x) {
        return Key{static_cast<int>(std::lround(2 * x[0])), static_cast<int>(std::lround(2 * x[1])),
                   static_cast<int>(std::lround(2 * x[2]))};
    };
    auto axis = [](int k) {
        Vec3 e{0, 0, 0};
        e[k] = 1.0;
        return e;
    };
    auto lexmin_diag = [](const std::array<Vec3, 4> &q) { // quad in cyclic order; true: diagonal q0-q2
        int best = 0;
        for (int k = 1; k < 4; ++k)
            if (lex_less(q[k], q[best])) best = k;
        return best == 0 || best == 2;
    };
    for (const auto &c : cubes)
        for (int corner = 0; corner < 8; ++corner) {
            Vec3 p{}, sgn{};
            for (int k = 0; k < 3; ++k) {
                const int bit = (corner >> k) & 1;
                p[k] = c[k] + bit;
                sgn[k] = bit ? -1.0 : 1.0;
            }
            const auto half = [&](int k) { return 0.5 * sgn[k] * axis(k); };
            const auto corner_id = domain.locate_corner(p);
            std::vector<int> dirs;
            for (int k = 0; k < 3; ++k)
                if (domain.classify(p + half(k)) == VertexType::E) dirs.push_back(k);
            if (corner_id && !corner_id->is_edge()) {
                for (int k = 0; k < 3; ++k) {
                    const int u = (k + 1) % 3, w = (k + 2) % 3;
                    const Vec3 f00 = p + half(k), f10 = f00 + half(u), f01 = f00 + half(w), f11 = f10 + half(w);
                    if (std::find(dirs.begin(), dirs.end(), k) != dirs.end()) {
                        tets.push_back({{key(p), key(f00), key(f10), key(f01)}});
                        tets.push_back({{key(p), key(f10), key(f01), key(f11)}});
                    } else if (lexmin_diag({f00, f10, f11, f01})) {
                        tets.push_back({{key(p), key(f00), key(f10), key(f11)}});
                        tets.push_back({{key(p), key(f00), key(f11), key(f01)}});
                    } else {
                        tets.push_back({{key(p), key(f00), key(f10), key(f01)}});
                        tets.push_back({{key(p), key(f10), key(f11), key(f01)}});
                    }
                }
            } else if (corner_id) {
                if (dirs.size() != 1)
                    throw ValidationError("cube fixture: singular-edge point touches " + std::to_string(dirs.size()) +
                                          " singular directions");
                const int k = dirs[0], u = (k + 1) % 3, w = (k + 2) % 3;
                const Vec3 pu = p + half(u), pw = p + half(w), puw = pu + half(w), up = half(k);
                prisms.push_back({{key(p), key(pu), key(pw), key(p + up), key(pu + up), key(pw + up)}});
                // S half: prism (pu, puw, pw) split by its lexicographic marks
                const std::array<Vec3, 6> sp = {pu, puw, pw, pu + up, puw + up, pw + up};
                Prism6 tmp;
                tmp.v = {0, 1, 2, 3, 4, 5};
                for (int i = 0; i < 3; ++i) {
                    const int j = (i + 1) % 3;
                    tmp.mark[i] = lexmin_diag({sp[i], sp[j], sp[3 + j], sp[3 + i]}) ? 0 : 1;
                }
                for (const auto &t : prism_to_tets(tmp)) tets.push_back({{key(sp[t[0]]), key(sp[t[1]]), key(sp[t[2]]), key(sp[t[3]])}});
            } else {
                Vec3 lo{}, hi{};
                for (int k = 0; k < 3; ++k) {
                    lo[k] = std::min(p[k], p[k] + 0.5 * sgn[k]);
                    hi[k] = std::max(p[k], p[k] + 0.5 * sgn[k]);
                }
                std::array<int, 3> perm = {0, 1, 2};
                do {
                    Vec3 x = lo;
                    std::vector<Key> t{key(x)};
                    for (int s = 0; s < 3; ++s) {
                        x[perm[s]] = hi[perm[s]];
                        t.push_back(key(x));
                    }
                    tets.push_back({t});
                } while (std::next_permutation(perm.begin(), perm.end()));
            }
        }
    // Deterministic ids: points sorted by coordinates.
    std::map<Key, int> ids;
    for (const auto *list : {&tets, &prisms})
        for (const auto &e : *list)
            for (const Key &k : e.v) ids.emplace(k, 0);
    Decomposition d;
    for (auto &[k, id] : ids) {
        id = d.store.size();
        d.store.add_classified({std::get<0>(k) / 2.0, std::get<1>(k) / 2.0, std::get<2>(k) / 2.0}, domain);
    }
    for (const auto &e : tets) d.tets.push_back({{ids[e.v[0]], ids[e.v[1]], ids[e.v[2]], ids[e.v[3]]}, 0});
    for (const auto &e : prisms) {
        Prism6 p;
        for (int i = 0; i < 6; ++i) p.v[i] = ids[e.v[i]];
        resolve_marks(d.store, p);
        d.prisms.push_back(p);
    }
    throw_if_invalid(validate_decomposition(d, domain), "cube fixture decomposition");
    return d;
}

/// Builtin fixture names: lshape2d, square2d, sector2d(alpha), cube3d, prismwedge3d, fichera3d.
inline std::string builtin_domain_text(const std::string &name) {
    if (name == "lshape2d") return fixtures::lshape2d_text();
    if (name == "square2d") return fixtures::square2d_text();
    if (name == "cube3d") return fixtures::cube3d_text();
    if (name == "prismwedge3d") return fixtures::prismwedge3d_text();
    if (name == "fichera3d") return fixtures::fichera3d_text();
    if (name.rfind("sector2d(", 0) == 0 && name.back() == ')') {
        const std::string arg = name.substr(9, name.size() - 10);
        double alpha = 0.0;
        try {
            alpha = std::stod(arg);
        } catch (const std::exception &) {
            throw ValidationError("bad sector opening '" + arg + "'");
        }
        return fixtures::sector2d_text(alpha);
    }
    throw ValidationError("unknown builtin fixture '" + name + "'");
}

inline bool is_builtin_3d(const std::string &name) {
    return name == "cube3d" || name == "prismwedge3d" || name == "fichera3d";
}

/// Canned T'_0 for a builtin 3D fixture.
inline Decomposition builtin_decomposition(const std::string &name, const Domain &domain) {
    if (name == "cube3d") return cube_union_decomposition(domain, fixtures::cube3d_cubes());
    if (name == "prismwedge3d") return cube_union_decomposition(domain, fixtures::prismwedge3d_cubes());
    if (name == "fichera3d") return cube_union_decomposition(domain, fixtures::fichera3d_cubes());
    throw ValidationError("no builtin decomposition for '" + name + "'");
}

} // namespace polygrade
