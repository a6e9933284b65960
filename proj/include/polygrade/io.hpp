#pragma once

#include "polygrade/refine3d.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace polygrade {

namespace detail {

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void vtk_header(std::ostream &out, const std::vector<Vec3> &points) {
    out << "# vtk DataFile Version 3.0\npolygrade\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << points.size() << " double\n";
    for (const Vec3 &p : points) out << fmt17(p[0]) << ' ' << fmt17(p[1]) << ' ' << fmt17(p[2]) << '\n';
}

inline void vtk_point_data(std::ostream &out, const std::vector<VertexType> &types,
                           const std::vector<std::pair<std::string, std::vector<double>>> &fields) {
    const std::size_t n = types.size();
    out << "POINT_DATA " << n << '\n';
    out << "SCALARS vertex_type int 1\nLOOKUP_TABLE default\n";
    for (VertexType t : types) out << static_cast<int>(t) << '\n';
    for (const auto &[name, values] : fields) {
        if (values.size() != n) throw ValidationError("point field '" + name + "' has wrong length");
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : values) out << fmt17(v) << '\n';
    }
}

} // namespace detail

/// VTK legacy ASCII unstructured grid of a simplicial mesh (triangles: type 5, tetrahedra: type 10),
/// with the vertex type and optional nodal fields as point data.
inline void write_vtk(std::ostream &out, const SimplicialMesh &mesh,
                      const std::vector<std::pair<std::string, std::vector<double>>> &fields = {}) {
    detail::vtk_header(out, mesh.points);
    const int nv = mesh.dim + 1;
    const std::size_t nc = mesh.num_cells();
    out << "CELLS " << nc << ' ' << nc * (nv + 1) << '\n';
    for (const auto &c : mesh.cells) {
        out << nv;
        for (int k = 0; k < nv; ++k) out << ' ' << c[k];
        out << '\n';
    }
    out << "CELL_TYPES " << nc << '\n';
    for (std::size_t c = 0; c < nc; ++c) out << (mesh.dim == 2 ? 5 : 10) << '\n';
    if (!mesh.points.empty()) {
        std::vector<VertexType> types = mesh.types;
        types.resize(mesh.points.size(), VertexType::S);
        detail::vtk_point_data(out, types, fields);
    }
}

/// VTK export of a mixed decomposition: tetrahedra (type 10) and prisms as wedges (type 13), with the
/// element kind (0 S4, 1 VS3, 2 VESS, 3 prism) as cell data.
inline void write_vtk(std::ostream &out, const Decomposition &d) {
    detail::vtk_header(out, d.store.points);
    const std::size_t nt = d.tets.size(), np = d.prisms.size();
    out << "CELLS " << nt + np << ' ' << nt * 5 + np * 7 << '\n';
    for (const auto &t : d.tets) out << "4 " << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << t.v[3] << '\n';
    for (const auto &p : d.prisms) {
        auto v = p.v;
        // VTK wants the first triangle's normal pointing away from the second triangle
        const Vec3 n = cross(d.store.points[v[1]] - d.store.points[v[0]], d.store.points[v[2]] - d.store.points[v[0]]);
        if (dot(n, d.store.points[v[3]] - d.store.points[v[0]]) > 0) {
            std::swap(v[1], v[2]);
            std::swap(v[4], v[5]);
        }
        out << '6';
        for (int k : v) out << ' ' << k;
        out << '\n';
    }
    out << "CELL_TYPES " << nt + np << '\n';
    for (std::size_t k = 0; k < nt; ++k) out << "10\n";
    for (std::size_t k = 0; k < np; ++k) out << "13\n";
    if (nt + np > 0) {
        out << "CELL_DATA " << nt + np << "\nSCALARS kind int 1\nLOOKUP_TABLE default\n";
        for (const auto &t : d.tets) out << static_cast<int>(tet_kind(d.store, t)) << '\n';
        for (std::size_t k = 0; k < np; ++k) out << "3\n";
    }
    if (!d.store.points.empty()) detail::vtk_point_data(out, d.store.types, {});
}

/// Plain text mesh: [points] with dim coordinates, [cells] with dim+1 ids, [types] one of S/E/V per point.
inline void write_plain(std::ostream &out, const SimplicialMesh &mesh) {
    out << "[points]\n";
    for (const Vec3 &p : mesh.points) {
        for (int k = 0; k < mesh.dim; ++k) out << (k ? " " : "") << detail::fmt17(p[k]);
        out << '\n';
    }
    out << "[cells]\n";
    for (const auto &c : mesh.cells) {
        for (int k = 0; k <= mesh.dim; ++k) out << (k ? " " : "") << c[k];
        out << '\n';
    }
    out << "[types]\n";
    for (std::size_t i = 0; i < mesh.points.size(); ++i) {
        const VertexType t = i < mesh.types.size() ? mesh.types[i] : VertexType::S;
        out << (t == VertexType::V ? 'V' : t == VertexType::E ? 'E' : 'S') << '\n';
    }
}

/// Reads the plain format; the dimension comes from the cell rows (or the point rows if there are no cells).
inline SimplicialMesh load_plain(const std::string &text) {
    SimplicialMesh mesh;
    std::istringstream in(text);
    std::string line, section;
    std::vector<std::vector<double>> pts;
    std::vector<std::vector<int>> cells;
    std::vector<VertexType> types;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            if (section != "points" && section != "cells" && section != "types")
                throw ValidationError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            continue;
        }
        const auto tok = detail::split_ws(t);
        const std::string where = "line " + std::to_string(lineno);
        if (section == "points") {
            if (tok.size() != 2 && tok.size() != 3) throw ValidationError(where + ": point needs 2 or 3 coordinates");
            std::vector<double> p;
            for (const auto &s : tok) p.push_back(detail::parse_double(s, lineno));
            pts.push_back(p);
        } else if (section == "cells") {
            if (tok.size() != 3 && tok.size() != 4) throw ValidationError(where + ": cell needs 3 or 4 vertex ids");
            std::vector<int> c;
            for (const auto &s : tok) c.push_back(detail::parse_int(s, lineno));
            cells.push_back(c);
        } else if (section == "types") {
            if (tok.size() != 1 || (tok[0] != "S" && tok[0] != "E" && tok[0] != "V"))
                throw ValidationError(where + ": type must be S, E or V");
            types.push_back(tok[0] == "V" ? VertexType::V : tok[0] == "E" ? VertexType::E : VertexType::S);
        } else {
            throw ValidationError(where + ": data outside a section");
        }
    }
    mesh.dim = !cells.empty() ? static_cast<int>(cells[0].size()) - 1 : !pts.empty() ? static_cast<int>(pts[0].size()) : 2;
    for (const auto &p : pts) {
        if (static_cast<int>(p.size()) != mesh.dim) throw ValidationError("points must all have " + std::to_string(mesh.dim) + " coordinates");
        mesh.points.push_back({p[0], p[1], p.size() > 2 ? p[2] : 0.0});
    }
    const int n = static_cast<int>(mesh.points.size());
    for (const auto &c : cells) {
        if (static_cast<int>(c.size()) != mesh.dim + 1) throw ValidationError("cells must all have the same size");
        std::array<int, 4> cell{-1, -1, -1, -1};
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (c[k] < 0 || c[k] >= n) throw ValidationError("cell references unknown point " + std::to_string(c[k]));
            cell[k] = c[k];
        }
        mesh.cells.push_back(cell);
    }
    if (!types.empty() && types.size() != mesh.points.size())
        throw ValidationError("[types] must list one type per point");
    mesh.types = types.empty() ? std::vector<VertexType>(mesh.points.size(), VertexType::S) : types;
    return mesh;
}

inline std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void write_file(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ValidationError("write to '" + path + "' failed");
}

/// Minimal CSV writer; doubles use %.10g, missing values (NaN) become empty fields.
class CsvWriter {
  public:
    explicit CsvWriter(std::ostream &out) : out_(out) {}

    CsvWriter &header(std::initializer_list<std::string_view> cols) {
        bool first = true;
        for (auto c : cols) {
            out_ << (first ? "" : ",") << c;
            first = false;
        }
        out_ << '\n';
        return *this;
    }

    template <class... T> void row(const T &...v) {
        bool first = true;
        ((out_ << (first ? "" : ","), cell(v), first = false), ...);
        out_ << '\n';
        out_.flush();
    }

  private:
    std::ostream &out_;

    void cell(double v) {
        if (std::isnan(v)) return;
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.10g", v);
        out_ << buf;
    }
    void cell(int v) { out_ << v; }
    void cell(std::size_t v) { out_ << v; }
    void cell(const std::string &v) { out_ << v; }
    void cell(const char *v) { out_ << v; }
};

} // namespace polygrade
