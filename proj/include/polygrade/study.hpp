#pragma once

#include "polygrade/fixtures.hpp"
#include "polygrade/io.hpp"
#include "polygrade/weighted.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <limits>

namespace polygrade {

/// key = value study configuration. Relative paths resolve against the config file's directory.
struct StudyConfig {
    std::string domain = "lshape2d";  // builtin fixture name or domain-spec path
    std::string decomposition;        // 3D initial decomposition path; empty: builtin
    std::string boundary;             // D/N flags per facet, overrides the domain's flags
    int degree = 1;
    std::optional<double> a;
    std::optional<double> kappa;
    std::map<CornerId, double> a_corner, kappa_corner;
    int levels = 4;
    double rtol = 1e-10;
    std::string out = "out";
    std::string solution = "auto";    // auto | singular | smooth | reference
    std::optional<CornerId> corner;   // corner of the singular solution
    double r1 = 0.3, r2 = 0.9;
    int depth = 6;                    // near-singular quadrature depth
    int max_depth = 10;               // norm sweep
    int norm_order = 2;
    std::optional<double> norm_index; // default a + 1
    std::string mesh;                 // export input
    std::string format = "vtk";       // export format
    std::string base_dir;

    std::string resolve(const std::string &p) const {
        if (p.empty() || base_dir.empty() || std::filesystem::path(p).is_absolute()) return p;
        return (std::filesystem::path(base_dir) / p).string();
    }

    void validate() const {
        if (levels < 2) throw ValidationError("levels must be >= 2");
        if (levels > 12) throw ValidationError("levels must be <= 12");
        if (degree < 1 || degree > 3) throw ValidationError("degree must be 1, 2 or 3");
        if (!(rtol > 0 && rtol < 1)) throw ValidationError("rtol must lie in (0, 1)");
        if (depth < 0 || depth > 20 || max_depth < 0 || max_depth > 20) throw ValidationError("depth must lie in [0, 20]");
        if (norm_order < 0 || norm_order > 2) throw ValidationError("norm_order must be 0, 1 or 2");
        if (solution != "auto" && solution != "singular" && solution != "smooth" && solution != "reference")
            throw ValidationError("solution must be auto, singular, smooth or reference");
        if (format != "vtk" && format != "plain") throw ValidationError("unknown export format '" + format + "'");
        for (char c : boundary)
            if (c != 'D' && c != 'N') throw ValidationError("boundary flags must be D or N");
    }
};

inline StudyConfig parse_config(const std::string &text, const std::string &base_dir = "") {
    StudyConfig c;
    c.base_dir = base_dir;
    std::istringstream in(text);
    int lineno = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "config line " + std::to_string(lineno);
        if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq)), val = detail::trim(line.substr(eq + 1));
        if (val.empty()) throw ValidationError(where + ": empty value for '" + key + "'");
        auto num = [&] { return detail::parse_double(val, lineno); };
        auto integer = [&] { return detail::parse_int(val, lineno); };
        if (key == "domain") c.domain = val;
        else if (key == "decomposition") c.decomposition = val;
        else if (key == "boundary") c.boundary = val;
        else if (key == "degree") c.degree = integer();
        else if (key == "a") c.a = num();
        else if (key == "kappa") c.kappa = num();
        else if (key.rfind("a.", 0) == 0) c.a_corner[detail::parse_corner(key.substr(2), lineno)] = num();
        else if (key.rfind("kappa.", 0) == 0) c.kappa_corner[detail::parse_corner(key.substr(6), lineno)] = num();
        else if (key == "levels") c.levels = integer();
        else if (key == "rtol") c.rtol = num();
        else if (key == "out") c.out = val;
        else if (key == "solution") c.solution = val;
        else if (key == "corner") c.corner = detail::parse_corner(val, lineno);
        else if (key == "r1") c.r1 = num();
        else if (key == "r2") c.r2 = num();
        else if (key == "depth") c.depth = integer();
        else if (key == "max_depth") c.max_depth = integer();
        else if (key == "norm_order") c.norm_order = integer();
        else if (key == "norm_index") c.norm_index = num();
        else if (key == "mesh") c.mesh = val;
        else if (key == "format") c.format = val;
        else throw ValidationError(where + ": unknown key '" + key + "'");
    }
    return c;
}

inline StudyConfig load_config(const std::string &path) {
    return parse_config(read_file(path), std::filesystem::path(path).parent_path().string());
}

/// Domain, grading and (3D) initial decomposition of a study.
struct Study {
    StudyConfig cfg;
    Domain domain;
    std::optional<Decomposition> dec0;
};

inline Study make_study(const StudyConfig &cfg) {
    cfg.validate();
    Study s;
    s.cfg = cfg;
    const bool builtin = cfg.domain == "lshape2d" || cfg.domain == "square2d" || is_builtin_3d(cfg.domain) ||
                         cfg.domain.rfind("sector2d(", 0) == 0;
    if (!cfg.boundary.empty()) {
        if (cfg.domain != "lshape2d" && cfg.domain != "square2d")
            throw ValidationError("boundary override is only available for lshape2d and square2d");
        const std::size_t n = cfg.domain == "lshape2d" ? 6 : 4;
        if (cfg.boundary.size() != n) throw ValidationError("boundary needs one flag per facet (" + std::to_string(n) + ")");
    }
    std::string text;
    if (builtin) {
        if (cfg.domain == "lshape2d" && !cfg.boundary.empty()) text = fixtures::lshape2d_text(cfg.boundary);
        else if (cfg.domain == "square2d" && !cfg.boundary.empty()) text = fixtures::square2d_text(cfg.boundary);
        else text = builtin_domain_text(cfg.domain);
    } else {
        text = read_file(cfg.resolve(cfg.domain));
    }
    s.domain = load_domain(text);
    GradingSpec &g = s.domain.grading;
    g.m = cfg.degree;
    if (cfg.a) g.a = *cfg.a;
    if (cfg.kappa) g.kappa_global = *cfg.kappa;
    for (const auto &[c, v] : cfg.a_corner) g.a_corner[c] = v;
    for (const auto &[c, v] : cfg.kappa_corner) g.kappa_corner[c] = v;
    g.validate();
    for (const auto &[c, k] : g.kappa_corner)
        if (!s.domain.is_corner(c)) throw ValidationError("kappa given for non-singular corner " + to_string(c));
    for (const auto &[c, k] : g.a_corner)
        if (!s.domain.is_corner(c)) throw ValidationError("a given for non-singular corner " + to_string(c));
    if (s.domain.dimension == 3) {
        check_kappa_3d(s.domain, g);
        if (!cfg.decomposition.empty())
            s.dec0 = load_initial_decomposition(read_file(cfg.resolve(cfg.decomposition)), s.domain);
        else if (builtin && is_builtin_3d(cfg.domain))
            s.dec0 = builtin_decomposition(cfg.domain, s.domain);
        else
            throw ValidationError("3D domains need a decomposition file");
        throw_if_invalid(validate_decomposition(*s.dec0, s.domain), "initial decomposition is not valid");
    }
    return s;
}

/// Walks T_0 .. T_levels; fn(level, mesh, decomposition or nullptr). Errors carry the level.
template <class Fn> void for_each_level(const Study &s, int levels, Fn &&fn) {
    if (s.domain.dimension == 2) {
        GradedMesh2 g = initial_mesh2(s.domain);
        for (int n = 0; n <= levels; ++n) {
            try {
                if (n > 0) g = refine_mesh2(g, s.domain, s.domain.grading);
                fn(n, g.mesh, static_cast<const Decomposition *>(nullptr));
            } catch (const ValidationError &e) {
                throw ValidationError("level " + std::to_string(n) + ": " + e.what());
            } catch (const NumericalError &e) {
                throw NumericalError("level " + std::to_string(n) + ": " + e.what(), e.residual());
            }
        }
        return;
    }
    Decomposition d = *s.dec0;
    for (int n = 0; n <= levels; ++n) {
        try {
            if (n > 0) d = refine_decomposition(d, s.domain, s.domain.grading);
            const SimplicialMesh mesh = tetrahedralize(d, &s.domain);
            fn(n, mesh, &d);
        } catch (const ValidationError &e) {
            throw ValidationError("level " + std::to_string(n) + ": " + e.what());
        } catch (const NumericalError &e) {
            throw NumericalError("level " + std::to_string(n) + ": " + e.what(), e.residual());
        }
    }
}

/// Observed rate from a least-squares fit of log(e) against log(dofs): -slope.
inline double fit_rate(std::span<const double> dofs, std::span<const double> err) {
    const std::size_t n = dofs.size();
    if (n < 2 || err.size() != n) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(dofs[i]), y = std::log(err[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    return den == 0 ? std::numeric_limits<double>::quiet_NaN() : -(n * sxy - sx * sy) / den;
}

/// log(e_{n-1}/e_n) / log(d_n/d_{n-1})
inline double pair_rate(double d0, double e0, double d1, double e1) {
    if (!(e0 > 0 && e1 > 0 && d1 > d0)) return std::numeric_limits<double>::quiet_NaN();
    return std::log(e0 / e1) / std::log(d1 / d0);
}

/// The corner whose singular function drives the manufactured solution: the configured one, else the
/// corner (2D vertex or 3D edge) of largest opening.
inline CornerId singular_corner(const Study &s) {
    if (s.cfg.corner) return *s.cfg.corner;
    CornerId best;
    double amax = -1;
    for (const auto &[c, alpha] : s.domain.corner_openings)
        if (alpha > amax + 1e-12) amax = alpha, best = c;
    if (amax < 0) throw ValidationError("domain has no corners");
    return best;
}

/// Resolved solution kind: auto picks singular if exactly one corner is re-entrant, smooth if none,
/// reference (no closed form) otherwise.
inline std::string solution_kind(const Study &s) {
    if (s.cfg.solution != "auto") return s.cfg.solution;
    int reentrant = 0;
    for (const auto &[c, alpha] : s.domain.corner_openings) reentrant += alpha > pi + 1e-9;
    if (reentrant == 0) return "smooth";
    if (reentrant == 1) return "singular";
    return "reference";
}

struct ConvergenceRow {
    int level = 0;
    int dofs = 0;
    double h_min = 0.0;
    double l2 = std::numeric_limits<double>::quiet_NaN();
    double h1 = std::numeric_limits<double>::quiet_NaN();
    double rate_l2 = std::numeric_limits<double>::quiet_NaN();
    double rate_h1 = std::numeric_limits<double>::quiet_NaN();
    double rate_level_h1 = std::numeric_limits<double>::quiet_NaN(); // log2(e_{n-1}/e_n)
    double interp_h1 = std::numeric_limits<double>::quiet_NaN();
    double interp_ratio = std::numeric_limits<double>::quiet_NaN(); // |u-u_I|_n / |u-u_I|_{n-1}
    bool cea_ok = true;                                                // |u-u_h| <= |u-u_I|
    double seconds = 0.0;
    double energy = 0.0;
};

struct ConvergenceReport {
    std::string solution;
    std::vector<ConvergenceRow> rows;
    double fit_h1 = std::numeric_limits<double>::quiet_NaN();
    double fit_l2 = std::numeric_limits<double>::quiet_NaN();
    int fit_first = -1, fit_last = -1;
    double mean_interp_ratio = std::numeric_limits<double>::quiet_NaN(); // last 3 levels
};

namespace detail {

inline void fill_rates(std::vector<ConvergenceRow> &rows, std::size_t k) {
    if (k == 0 || rows[k].level < 2) return;
    const auto &p = rows[k - 1];
    auto &r = rows[k];
    r.rate_l2 = pair_rate(p.dofs, p.l2, r.dofs, r.l2);
    r.rate_h1 = pair_rate(p.dofs, p.h1, r.dofs, r.h1);
    if (p.h1 > 0 && r.h1 > 0) r.rate_level_h1 = std::log2(p.h1 / r.h1);
}

inline void finish_fits(ConvergenceReport &rep, std::size_t usable) {
    if (usable < 2) return;
    const std::size_t first = usable >= 3 ? usable - 3 : 0;
    std::vector<double> d, e1, e0;
    for (std::size_t k = first; k < usable; ++k) {
        d.push_back(rep.rows[k].dofs);
        e1.push_back(rep.rows[k].h1);
        e0.push_back(rep.rows[k].l2);
    }
    rep.fit_h1 = fit_rate(d, e1);
    if (std::all_of(e0.begin(), e0.end(), [](double v) { return std::isfinite(v); })) rep.fit_l2 = fit_rate(d, e0);
    rep.fit_first = rep.rows[first].level;
    rep.fit_last = rep.rows[usable - 1].level;
    double s = 0;
    int n = 0;
    for (std::size_t k = usable >= 3 ? usable - 3 : 1; k < usable; ++k)
        if (std::isfinite(rep.rows[k].interp_ratio)) s += rep.rows[k].interp_ratio, ++n;
    if (n > 0) rep.mean_interp_ratio = s / n;
}

} // namespace detail

/// Solve + error loop over T_0 .. T_levels. on_row sees each finished row (reference mode: all rows
/// after the finest solve). Rates and fits use levels >= first_level.
inline ConvergenceReport run_convergence(const Study &s, const std::function<void(const ConvergenceRow &)> &on_row = {},
                                         int first_level = 0) {
    ConvergenceReport rep;
    rep.solution = solution_kind(s);
    const int dim = s.domain.dimension;
    const bool reference = rep.solution == "reference";
    ScalarField u;
    if (rep.solution == "singular") {
        const CornerId c = singular_corner(s);
        u = manufactured_problem(corner_singular_function(s.domain, c, s.cfg.r1, s.cfg.r2));
    } else if (rep.solution == "smooth") {
        u = smooth_solution(dim);
    }
    std::function<double(const Vec3 &)> f, g;
    if (reference) {
        f = [](const Vec3 &) { return 1.0; };
    } else {
        f = [u](const Vec3 &x) { return -u.laplacian(x); };
        g = u.value;
    }
    CgOptions opt;
    opt.rtol = s.cfg.rtol;
    double prev_interp = std::numeric_limits<double>::quiet_NaN();
    for_each_level(s, s.cfg.levels, [&](int n, const SimplicialMesh &mesh, const Decomposition *) {
        if (n < first_level) return;
        const auto t0 = std::chrono::steady_clock::now();
        const DofMap dm = build_dofmap(mesh, s.cfg.degree);
        const SolveResult sol = solve_poisson(mesh, dm, f, g, opt);
        ConvergenceRow row;
        row.level = n;
        row.dofs = sol.dofs;
        row.h_min = min_edge_length(mesh);
        if (reference) {
            // a(u_h, u_h) = (f, u_h) for homogeneous data
            const SparseSystem sys = assemble(mesh, dm, f);
            row.energy = dot(std::span<const double>(sys.rhs), std::span<const double>(sol.coeffs));
        } else {
            const ErrorNorms e = error_h1(sol.coeffs, mesh, dm, u);
            row.l2 = e.l2;
            row.h1 = e.h1;
            const ErrorNorms ei = error_h1(interpolate(u.value, dm), mesh, dm, u);
            row.interp_h1 = ei.h1;
            row.interp_ratio = ei.h1 / prev_interp;
            prev_interp = ei.h1;
            row.cea_ok = e.h1 <= ei.h1 * (1 + 1e-8) + 1e-14;
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.rows.push_back(row);
        if (!reference) {
            detail::fill_rates(rep.rows, rep.rows.size() - 1);
            if (on_row) on_row(rep.rows.back());
        }
    });
    if (!reference) {
        detail::finish_fits(rep, rep.rows.size());
        return rep;
    }
    // energy identity |u - u_n|^2 = |u|^2 - |u_n|^2 with |u|^2 taken from the finest level
    const double e_ref = rep.rows.back().energy;
    for (std::size_t k = 0; k < rep.rows.size(); ++k) {
        rep.rows[k].h1 = std::sqrt(std::max(e_ref - rep.rows[k].energy, 0.0));
        detail::fill_rates(rep.rows, k);
        if (on_row) on_row(rep.rows[k]);
    }
    const std::size_t usable = rep.rows.size() > 3 ? rep.rows.size() - 3 : 0;
    detail::finish_fits(rep, usable);
    return rep;
}

struct HardyRow {
    int level = 0;
    int dofs = 0;
    double lambda_min = 0.0;
};

struct HardyReport {
    std::vector<HardyRow> rows;
    std::string verdict;
};

/// STABLE-POSITIVE when the last two levels differ by less than 5% relative, else DECAYING.
inline std::string hardy_verdict(const std::vector<HardyRow> &rows, double threshold = 0.05) {
    if (rows.size() >= 2) {
        const double a = rows[rows.size() - 2].lambda_min, b = rows.back().lambda_min;
        if (b > 0 && std::abs(a - b) / b < threshold) return "STABLE-POSITIVE";
    }
    return "DECAYING";
}

inline HardyReport run_hardy(const Study &s, const std::function<void(const HardyRow &)> &on_row = {}) {
    HardyReport rep;
    for_each_level(s, s.cfg.levels, [&](int n, const SimplicialMesh &mesh, const Decomposition *) {
        const HardyResult r = hardy_min_eigenvalue(mesh, s.domain, s.cfg.degree, s.cfg.depth);
        rep.rows.push_back({n, r.dofs, r.lambda_min});
        if (on_row) on_row(rep.rows.back());
    });
    rep.verdict = hardy_verdict(rep.rows);
    return rep;
}

struct NormsReport {
    int m = 2;
    double index = 0.0;
    std::vector<NormSweepRow> rows;
    std::string verdict; // STABLE | NOT-STABLE
};

/// K^m_{a+1} norm of the corner singular function on T_levels, swept over quadrature depth.
inline NormsReport run_norms(const Study &s) {
    NormsReport rep;
    rep.m = s.cfg.norm_order;
    rep.index = s.cfg.norm_index ? *s.cfg.norm_index : s.domain.grading.a + 1.0;
    const auto sf = corner_singular_function(s.domain, singular_corner(s), s.cfg.r1, s.cfg.r2);
    WeightedNormSpec spec;
    spec.m = rep.m;
    spec.a = rep.index;
    for_each_level(s, s.cfg.levels, [&](int n, const SimplicialMesh &mesh, const Decomposition *) {
        if (n == s.cfg.levels) rep.rows = weighted_norm_sweep(as_deriv_field(sf), s.domain, mesh, spec, s.cfg.max_depth);
    });
    rep.verdict = sweep_stabilizes(rep.rows) ? "STABLE" : "NOT-STABLE";
    return rep;
}

// ---- commands writing artifacts to cfg.out ----

inline std::filesystem::path output_dir(const StudyConfig &cfg) {
    const std::filesystem::path p = cfg.resolve(cfg.out);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw ValidationError("cannot create output directory '" + p.string() + "': " + ec.message());
    return p;
}

inline std::string to_text(const auto &writer) {
    std::ostringstream s;
    writer(s);
    return s.str();
}

/// Writes T_n (plain + VTK) and, in 3D, T'_n (decomposition spec + VTK) for n = 0..N, and conformity.csv.
inline void cmd_refine(const StudyConfig &cfg, std::ostream &log = std::cout) {
    const Study s = make_study(cfg);
    const auto dir = output_dir(cfg);
    std::ofstream csv(dir / "conformity.csv");
    CsvWriter w(csv);
    w.header({"level", "cells", "vertices", "conforming", "measure", "min_angle_deg", "s4", "vs3", "vess", "prisms"});
    for_each_level(s, cfg.levels, [&](int n, const SimplicialMesh &mesh, const Decomposition *d) {
        const std::string tag = std::to_string(n);
        write_file((dir / ("mesh_" + tag + ".txt")).string(), to_text([&](std::ostream &o) { write_plain(o, mesh); }));
        write_file((dir / ("mesh_" + tag + ".vtk")).string(), to_text([&](std::ostream &o) { write_vtk(o, mesh); }));
        const ConformityReport rep = check_conformity(mesh, &s.domain);
        ElementCounts counts;
        if (d) {
            write_file((dir / ("decomposition_" + tag + ".txt")).string(), to_decomposition_text(*d));
            write_file((dir / ("decomposition_" + tag + ".vtk")).string(), to_text([&](std::ostream &o) { write_vtk(o, *d); }));
            counts = count_elements(*d);
        }
        if (!rep.ok) throw ValidationError("mesh is not conforming: " + rep.violations.front());
        double min_angle = 4.0;
        for (const auto &[k, a] : rep.angles) min_angle = std::min(min_angle, a.min);
        w.row(n, mesh.num_cells(), mesh.points.size(), std::string(rep.ok ? "yes" : "no"), rep.measure,
              min_angle * 180.0 / pi, counts.s4, counts.vs3, counts.vess, counts.prisms);
        log << "level " << n << ": " << mesh.num_cells() << " cells, " << mesh.points.size() << " vertices, conforming\n";
    });
}

inline ConvergenceReport cmd_convergence(const StudyConfig &cfg, std::ostream &log = std::cout) {
    const Study s = make_study(cfg);
    const auto dir = output_dir(cfg);
    std::ofstream csv(dir / "convergence.csv"), icsv(dir / "interpolation.csv");
    CsvWriter w(csv), wi(icsv);
    w.header({"level", "dofs", "h_min", "L2_error", "H1_error", "rate_L2", "rate_H1", "rate_level_H1", "seconds"});
    wi.header({"level", "dofs", "interp_H1", "ratio", "galerkin_le_interp"});
    const ConvergenceReport rep = run_convergence(s, [&](const ConvergenceRow &r) {
        w.row(r.level, r.dofs, r.h_min, r.l2, r.h1, r.rate_l2, r.rate_h1, r.rate_level_h1, r.seconds);
        wi.row(r.level, r.dofs, r.interp_h1, r.interp_ratio, std::string(r.cea_ok ? "yes" : "no"));
        log << "level " << r.level << ": dofs " << r.dofs << ", H1 error " << r.h1 << ", " << r.seconds << " s\n";
    });
    std::ofstream rcsv(dir / "rates.csv");
    CsvWriter wr(rcsv);
    wr.header({"quantity", "fit_rate", "first_level", "last_level"});
    wr.row(std::string("H1_error"), rep.fit_h1, rep.fit_first, rep.fit_last);
    wr.row(std::string("L2_error"), rep.fit_l2, rep.fit_first, rep.fit_last);
    wr.row(std::string("interp_ratio_mean"), rep.mean_interp_ratio, rep.fit_first, rep.fit_last);
    log << "solution: " << rep.solution << ", fitted H1 rate vs dofs: " << rep.fit_h1 << '\n';
    return rep;
}

inline HardyReport cmd_hardy(const StudyConfig &cfg, std::ostream &log = std::cout) {
    const Study s = make_study(cfg);
    const auto dir = output_dir(cfg);
    std::ofstream csv(dir / "hardy.csv");
    CsvWriter w(csv);
    w.header({"level", "dofs", "lambda_min"});
    HardyReport rep = run_hardy(s, [&](const HardyRow &r) {
        w.row(r.level, r.dofs, r.lambda_min);
        log << "level " << r.level << ": dofs " << r.dofs << ", lambda_min " << r.lambda_min << '\n';
    });
    csv << "verdict," << rep.verdict << '\n';
    log << "verdict: " << rep.verdict << '\n';
    return rep;
}

inline NormsReport cmd_norms(const StudyConfig &cfg, std::ostream &log = std::cout) {
    const Study s = make_study(cfg);
    const auto dir = output_dir(cfg);
    const NormsReport rep = run_norms(s);
    std::ofstream csv(dir / "norms.csv");
    CsvWriter w(csv);
    w.header({"depth", "norm_value", "rel_change"});
    for (const auto &r : rep.rows) w.row(r.depth, r.value, r.rel_change);
    log << "K^" << rep.m << "_" << rep.index << " sweep: " << rep.verdict << '\n';
    return rep;
}

/// Converts a plain mesh or a decomposition spec (needs the config's domain) to vtk or plain.
inline std::filesystem::path cmd_export(const StudyConfig &cfg, std::ostream &log = std::cout) {
    cfg.validate();
    if (cfg.mesh.empty()) throw ValidationError("export needs mesh = <path>");
    const std::string text = read_file(cfg.resolve(cfg.mesh));
    const auto dir = output_dir(cfg);
    const std::string stem = std::filesystem::path(cfg.mesh).stem().string();
    const auto target = dir / (stem + (cfg.format == "vtk" ? ".vtk" : ".txt"));
    if (text.find("[tets]") != std::string::npos || text.find("[prisms]") != std::string::npos) {
        const Study s = make_study(cfg);
        const Decomposition d = load_initial_decomposition(text, s.domain);
        write_file(target.string(), cfg.format == "vtk" ? to_text([&](std::ostream &o) { write_vtk(o, d); })
                                                        : to_decomposition_text(d));
    } else {
        const SimplicialMesh mesh = load_plain(text);
        write_file(target.string(), to_text([&](std::ostream &o) {
                       if (cfg.format == "vtk") write_vtk(o, mesh);
                       else write_plain(o, mesh);
                   }));
    }
    log << "wrote " << target.string() << '\n';
    return target;
}

} // namespace polygrade
