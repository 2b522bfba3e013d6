#include "curvedhho/errors.hpp"
#include "curvedhho/harness.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace curvedhho;

TEST_CASE("ellipse case data")
{
    const TestCase tc = ellipse_case();
    REQUIRE(tc.has_exact());
    CHECK(tc.exact(Point(0, 0)) == doctest::Approx(std::sin(0.64)));
    CHECK(tc.source(Point(0, 0)) == doctest::Approx(4.0 * std::cos(0.64)));

    // u vanishes on the boundary ellipse.
    const double r3 = 1.0 / std::sqrt(3.0);
    for (int i = 0; i < 100; ++i) {
        const double t = 2.0 * std::numbers::pi * i / 100.0;
        const Point x(0.8 * (r3 * std::cos(t) - std::sin(t)), 0.8 * (r3 * std::cos(t) + std::sin(t)));
        CHECK(std::abs(tc.exact(x)) < 1e-14);
    }

    // f = -Laplace u and the gradient, by central differences.
    const double h = 1e-4;
    for (const Point& x : {Point(0.1, 0.2), Point(-0.3, 0.25), Point(0.4, -0.1)}) {
        const double lap = (tc.exact(x + Vector(h, 0)) + tc.exact(x - Vector(h, 0)) + tc.exact(x + Vector(0, h)) +
                            tc.exact(x - Vector(0, h)) - 4.0 * tc.exact(x)) / (h * h);
        CHECK(-lap == doctest::Approx(tc.source(x)).epsilon(1e-6));
        const Vector g((tc.exact(x + Vector(h, 0)) - tc.exact(x - Vector(h, 0))) / (2 * h),
                       (tc.exact(x + Vector(0, h)) - tc.exact(x - Vector(0, h))) / (2 * h));
        CHECK((g - tc.exact_gradient(x)).norm() < 1e-7);
    }
}

TEST_CASE("hetero case data")
{
    const TestCase tc = hetero_case();
    CHECK_FALSE(tc.has_exact());
    CHECK(tc.diffusion.at(1).anisotropy() == doctest::Approx(2e6).epsilon(1e-6));
    CHECK(tc.diffusion.at(0).matrix().isApprox(Eigen::Matrix2d::Identity()));
    CHECK(tc.source(Point(0.3, 0.1)) == 1.0);
    CHECK(tc.straight_scope == StraightenScope::InteriorOnly);
}

TEST_CASE("error measures need an exact solution")
{
    const TestCase tc = hetero_case();
    const CaseRun run = run_case(tc, case_mesh(tc, 0, MeshMode::Curved), 1);
    CHECK_THROWS_AS(error_measures(tc, run), ContractError);
    const ReferenceFunctionals r = reference_functionals(run);
    CHECK(r.integral > 0.0);
    CHECK(r.h1 > 0.0);
}

TEST_CASE("reference functionals of a zero solution")
{
    const TestCase tc = ellipse_case();
    CaseRun run = run_case(tc, case_mesh(tc, 0, MeshMode::Curved), 1);
    for (auto& p : run.solution.potential) p.setZero();
    const ReferenceFunctionals r = reference_functionals(run);
    CHECK(r.integral == 0.0);
    CHECK(r.h1 == 0.0);
    CHECK(evaluate_potential(run, 0, run.disc.mesh().element(0).centroid) == 0.0);
}

TEST_CASE("small ellipse run")
{
    const TestCase tc = ellipse_case();
    const CaseRun run = run_case(tc, case_mesh(tc, 1, MeshMode::Curved), 2);
    const ErrorMeasures err = error_measures(tc, run);
    CHECK(err.e0 < 1e-3);
    CHECK(err.e1 < 1e-2);
    CHECK(err.ea < 1e-2);
    const Point x = run.disc.mesh().element(3).centroid;
    CHECK(evaluate_potential(run, 3, x) == doctest::Approx(tc.exact(x)).epsilon(1e-2));

    std::ostringstream os;
    write_point_samples(os, run, 12, 12);
    std::istringstream is(os.str());
    std::string line;
    std::size_t n = 0;
    double worst = 0.0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == 'x') continue;
        double px, py, val;
        char c1, c2;
        std::istringstream ls(line);
        REQUIRE(static_cast<bool>(ls >> px >> c1 >> py >> c2 >> val));
        worst = std::max(worst, std::abs(val - tc.exact(Point(px, py))));
        ++n;
    }
    CHECK(n > 40);
    CHECK(n < 144);
    CHECK(worst < 1e-3);
}

TEST_CASE("convergence tables and dat files")
{
    ConvergenceOptions opts;
    opts.k = 0;
    opts.levels = 3;
    const ConvergenceTable t = run_convergence(ellipse_case(), opts);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.error_names == std::vector<std::string>{"L2Error", "H1Error", "EnergyError"});
    CHECK(t.rows[0].rates.empty());
    for (std::size_t r = 1; r < t.rows.size(); ++r) {
        for (std::size_t i = 0; i < 3; ++i) {
            const double expect = std::log(t.rows[r - 1].errors[i] / t.rows[r].errors[i]) /
                                  std::log(t.rows[r - 1].h / t.rows[r].h);
            CHECK(t.rows[r].rates[i] == doctest::Approx(expect).epsilon(1e-14));
        }
    }

    std::stringstream ss;
    write_dat(ss, t);
    const DatTable d = parse_dat(ss);
    CHECK(d.header == std::vector<std::string>{"MeshSize", "L2Error", "H1Error", "EnergyError"});
    REQUIRE(d.rows.size() == 3);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(d.rows[r][0] == t.rows[r].h);
        for (std::size_t i = 0; i < 3; ++i) CHECK(d.rows[r][i + 1] == t.rows[r].errors[i]);
    }

    std::ostringstream ms;
    write_mesh_table(ms, t);
    CHECK(ms.str().rfind("MeshIndex MeshSize NbCells NbInternalEdges", 0) == 0);
}

TEST_CASE("degree sweeps report decrease factors")
{
    ConvergenceOptions opts;
    opts.sweep = Sweep::K;
    opts.k_min = 0;
    opts.k = 2;
    opts.first_level = 0;
    const ConvergenceTable t = run_convergence(ellipse_case(), opts);
    REQUIRE(t.rows.size() == 3);
    for (std::size_t r = 1; r < 3; ++r) {
        CHECK(t.rows[r].degree == static_cast<int>(r));
        CHECK(t.rows[r].rates[0] == doctest::Approx(t.rows[r - 1].errors[0] / t.rows[r].errors[0]));
    }
    std::stringstream ss;
    write_dat(ss, t);
    CHECK(parse_dat(ss).header.front() == "EdgeDegree");
}

TEST_CASE("metadata is a flat JSON object")
{
    const auto path = std::filesystem::temp_directory_path() / "curvedhho_meta_test.json";
    write_metadata(path, {{"case", "ellipse"}, {"k", "3"}});
    std::ifstream is(path);
    const nlohmann::json j = nlohmann::json::parse(is);
    CHECK(j.at("case") == "ellipse");
    CHECK(j.at("k") == "3");
    std::filesystem::remove(path);
}

TEST_CASE("malformed dat input")
{
    std::istringstream bad("MeshSize L2Error\n0.5 abc\n");
    CHECK_THROWS_AS(parse_dat(bad), IoError);
}
