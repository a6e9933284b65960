#include "polygrade/study.hpp"

#include <gtest/gtest.h>

using namespace polygrade;

namespace {

std::filesystem::path scratch(const std::string &name) {
    const auto p = std::filesystem::temp_directory_path() / ("polygrade_study_" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string first_line(const std::filesystem::path &p) {
    std::istringstream in(read_file(p.string()));
    std::string line;
    std::getline(in, line);
    return line;
}

std::size_t line_count(const std::filesystem::path &p) {
    const std::string s = read_file(p.string());
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST(Config, ParsesKeys) {
    const StudyConfig c = parse_config("# comment\ndomain = square2d\ndegree = 2  # trailing\nkappa = 0.1\n"
                                       "kappa.2 = 0.2\na.0-1 = 0.4\nlevels = 5\nsolution = smooth\n"
                                       "corner = 3\nformat = plain\n",
                                       "/tmp/base");
    EXPECT_EQ(c.domain, "square2d");
    EXPECT_EQ(c.degree, 2);
    EXPECT_EQ(*c.kappa, 0.1);
    EXPECT_EQ(c.kappa_corner.at(CornerId::vertex(2)), 0.2);
    EXPECT_EQ(c.a_corner.at(CornerId::edge(0, 1)), 0.4);
    EXPECT_EQ(c.levels, 5);
    EXPECT_EQ(c.solution, "smooth");
    EXPECT_EQ(*c.corner, CornerId::vertex(3));
    EXPECT_EQ(c.resolve("x.domain"), "/tmp/base/x.domain");
    EXPECT_EQ(c.resolve("/abs/x"), "/abs/x");
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse_config("colour = red\n"), ValidationError);
    EXPECT_THROW(parse_config("levels 4\n"), ValidationError);
    EXPECT_THROW(parse_config("levels =\n"), ValidationError);
    EXPECT_THROW(parse_config("levels = four\n"), ValidationError);
    try {
        parse_config("\n\nbogus = 1\n");
        FAIL();
    } catch (const ValidationError &e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    for (const std::string text : {"levels = 1", "levels = 13", "degree = 4", "degree = 0", "rtol = 0", "depth = 21",
                                   "norm_order = 3", "solution = exact", "format = obj", "boundary = DXDD"})
        EXPECT_THROW(parse_config(text).validate(), ValidationError) << text;
}

TEST(Study, Rejections) {
    auto expect_rejected = [](const std::string &text, const std::string &needle) {
        try {
            make_study(parse_config(text));
            ADD_FAILURE() << text;
        } catch (const ValidationError &e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    expect_rejected("degree = 2\na = 0.5\nkappa = 0.25\n", "exceeds");
    expect_rejected("domain = prismwedge3d\nboundary = DDDD\n", "boundary override");
    expect_rejected("domain = square2d\nboundary = DDD\n", "one flag per facet");
    expect_rejected("domain = no_such_file.domain\n", "no_such_file");
    expect_rejected("kappa.9 = 0.2\n", "non-singular corner");
    expect_rejected("domain = prismwedge3d\nkappa.0 = 0.2\n", "kappa");
    expect_rejected("a = 0.7\n", "grading strength");
}

TEST(Study, AutoSolutionKind) {
    EXPECT_EQ(solution_kind(make_study(parse_config("domain = lshape2d\n"))), "singular");
    EXPECT_EQ(solution_kind(make_study(parse_config("domain = square2d\n"))), "smooth");
    EXPECT_EQ(solution_kind(make_study(parse_config("domain = fichera3d\n"))), "reference");
    EXPECT_EQ(singular_corner(make_study(parse_config("domain = lshape2d\n"))), CornerId::vertex(2));
}

TEST(Rates, FitAndPairRates) {
    std::vector<double> d, e;
    for (int k = 0; k < 5; ++k) {
        d.push_back(100.0 * std::pow(4.0, k));
        e.push_back(3.0 * std::pow(d.back(), -0.75));
    }
    EXPECT_NEAR(fit_rate(d, e), 0.75, 1e-12);
    EXPECT_NEAR(pair_rate(d[0], e[0], d[1], e[1]), 0.75, 1e-12);
    EXPECT_TRUE(std::isnan(pair_rate(10, 1, 10, 0.5)));
    EXPECT_TRUE(std::isnan(pair_rate(10, 0, 20, 0.5)));
    EXPECT_TRUE(std::isnan(fit_rate(std::vector<double>{1.0}, std::vector<double>{1.0})));
}

TEST(Rates, HardyVerdict) {
    EXPECT_EQ(hardy_verdict({{0, 10, 1.0}, {1, 40, 0.98}}), "STABLE-POSITIVE");
    EXPECT_EQ(hardy_verdict({{0, 10, 1.0}, {1, 40, 0.5}}), "DECAYING");
    EXPECT_EQ(hardy_verdict({{0, 10, 1.0}}), "DECAYING");
    EXPECT_EQ(hardy_verdict({{0, 10, 0.0}, {1, 40, 0.0}}), "DECAYING");
}

TEST(Convergence, SmoothSolutionOptimalRate) {
    for (int m : {1, 2}) {
        StudyConfig c = parse_config("domain = square2d\nkappa = 0.5\nsolution = smooth\n");
        c.degree = m;
        c.levels = m == 1 ? 5 : 4;
        const ConvergenceReport rep = run_convergence(make_study(c));
        ASSERT_EQ(rep.rows.size(), static_cast<std::size_t>(c.levels + 1));
        EXPECT_NEAR(rep.fit_h1, m / 2.0, 0.05) << "degree " << m;
        EXPECT_NEAR(rep.fit_l2, (m + 1) / 2.0, 0.1) << "degree " << m;
        for (const auto &r : rep.rows) EXPECT_TRUE(r.cea_ok) << "level " << r.level;
        EXPECT_NEAR(rep.mean_interp_ratio, std::pow(0.5, m), 0.05);
    }
}

TEST(Convergence, ReferenceModeUsesEnergyIdentity) {
    StudyConfig c = parse_config("domain = square2d\nkappa = 0.5\nsolution = reference\nlevels = 6\n");
    const ConvergenceReport rep = run_convergence(make_study(c));
    ASSERT_EQ(rep.rows.size(), 7u);
    EXPECT_EQ(rep.rows.back().h1, 0.0);
    for (std::size_t k = 1; k < rep.rows.size(); ++k) EXPECT_LE(rep.rows[k].h1, rep.rows[k - 1].h1);
    EXPECT_EQ(rep.fit_last, 3);
    EXPECT_NEAR(rep.fit_h1, 0.5, 0.1);
}

TEST(Commands, RefineWritesArtifacts) {
    const auto dir = scratch("refine");
    StudyConfig c = parse_config("domain = prismwedge3d\nkappa = 0.25\nlevels = 2\n");
    c.out = dir.string();
    std::ostringstream log;
    cmd_refine(c, log);
    EXPECT_EQ(first_line(dir / "conformity.csv"),
              "level,cells,vertices,conforming,measure,min_angle_deg,s4,vs3,vess,prisms");
    EXPECT_EQ(line_count(dir / "conformity.csv"), 4u);
    for (int n = 0; n <= 2; ++n)
        for (const std::string f : {"mesh_", "decomposition_"}) {
            EXPECT_TRUE(std::filesystem::exists(dir / (f + std::to_string(n) + ".txt")));
            EXPECT_TRUE(std::filesystem::exists(dir / (f + std::to_string(n) + ".vtk")));
        }
    const Domain d = load_domain(fixtures::prismwedge3d_text());
    EXPECT_NO_THROW(load_initial_decomposition(read_file((dir / "decomposition_2.txt").string()), d));
    std::filesystem::remove_all(dir);
}

TEST(Commands, ConvergenceWritesCsv) {
    const auto dir = scratch("conv");
    StudyConfig c = parse_config("domain = lshape2d\nkappa = 0.25\nlevels = 3\n");
    c.out = dir.string();
    std::ostringstream log;
    cmd_convergence(c, log);
    EXPECT_EQ(first_line(dir / "convergence.csv"),
              "level,dofs,h_min,L2_error,H1_error,rate_L2,rate_H1,rate_level_H1,seconds");
    EXPECT_EQ(first_line(dir / "interpolation.csv"), "level,dofs,interp_H1,ratio,galerkin_le_interp");
    EXPECT_EQ(first_line(dir / "rates.csv"), "quantity,fit_rate,first_level,last_level");
    EXPECT_EQ(line_count(dir / "convergence.csv"), 5u);
    std::filesystem::remove_all(dir);
}

TEST(Commands, ExportConvertsMeshes) {
    const auto dir = scratch("export");
    std::filesystem::create_directories(dir);
    Domain d = load_domain(fixtures::lshape2d_text());
    write_file((dir / "m.txt").string(), to_text([&](std::ostream &o) { write_plain(o, initial_mesh2(d).mesh); }));
    StudyConfig c = parse_config("mesh = m.txt\nout = converted\n", dir.string());
    std::ostringstream log;
    const auto target = cmd_export(c, log);
    EXPECT_EQ(target, dir / "converted" / "m.vtk");
    EXPECT_EQ(first_line(target), "# vtk DataFile Version 3.0");

    const Domain w = load_domain(fixtures::prismwedge3d_text());
    write_file((dir / "w.dec").string(), to_decomposition_text(builtin_decomposition("prismwedge3d", w)));
    c = parse_config("domain = prismwedge3d\nmesh = w.dec\nformat = plain\nout = converted\n", dir.string());
    const auto t2 = cmd_export(c, log);
    EXPECT_EQ(read_file(t2.string()), to_decomposition_text(builtin_decomposition("prismwedge3d", w)));

    c = parse_config("out = converted\n", dir.string());
    EXPECT_THROW(cmd_export(c, log), ValidationError);
    std::filesystem::remove_all(dir);
}
