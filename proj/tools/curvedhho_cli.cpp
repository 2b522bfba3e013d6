// Command-line driver: convergence runs and mesh checks.

#include "curvedhho/errors.hpp"
#include "curvedhho/harness.hpp"
#include "curvedhho/mesh_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace curvedhho;

namespace {

struct RunArgs {
    std::string test = "ellipse";
    int k = 1;
    int k_min = 0;
    std::size_t levels = 4;
    std::size_t first_level = 0;
    std::string mesh = "curved";
    std::string sweep = "h";
    std::size_t quad_points = 30;
    std::string out = "out";
    bool dump_mesh = false;
    bool debug_uncondensed = false;
    bool check = false;
    std::size_t samples = 0;
    double ref_integral = 0.46006947;
    double ref_h1 = 0.80699766;
};

std::string fmt(double v)
{
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

void print_table(const ConvergenceTable& t)
{
    std::cout << (t.sweep == Sweep::H ? "h" : "k") << " elements";
    for (const auto& n : t.error_names) std::cout << ' ' << n << " rate";
    std::cout << '\n';
    for (const auto& r : t.rows) {
        if (t.sweep == Sweep::H) {
            std::cout << fmt(r.h);
        } else {
            std::cout << r.degree;
        }
        std::cout << ' ' << r.elements;
        for (std::size_t i = 0; i < r.errors.size(); ++i) {
            std::cout << ' ' << fmt(r.errors[i]) << ' ' << (r.rates.empty() ? std::string("-") : fmt(r.rates[i]));
        }
        std::cout << '\n';
    }
}

// Tolerances of the reference experiments; other configurations only need
// decreasing errors.
bool check_table(const RunArgs& a, const ConvergenceTable& t)
{
    bool ok = true;
    auto fail = [&](const std::string& what) {
        std::cerr << "check failed: " << what << '\n';
        ok = false;
    };
    if (t.rows.size() < 2) {
        fail("need at least two rows");
        return ok;
    }
    const auto& last = t.rows.back();
    if (a.test == "ellipse" && a.sweep == "h") {
        std::vector<double> minimum;
        if (a.mesh == "curved" && a.k == 1) minimum = {2.6, 1.7, 1.7};
        if (a.mesh == "curved" && a.k == 3) minimum = {4.4, 3.5, 3.5};
        for (std::size_t i = 0; i < minimum.size(); ++i) {
            if (!(last.rates[i] >= minimum[i])) fail(t.error_names[i] + " rate " + fmt(last.rates[i]) + " < " + fmt(minimum[i]));
        }
        if (a.mesh == "straight" && a.k == 3 && !(last.rates[0] <= 2.5)) fail("straight L2 rate above 2.5");
        if (a.mesh == "curved") {
            for (std::size_t r = 1; r < t.rows.size(); ++r) {
                for (std::size_t i = 0; i < last.errors.size(); ++i) {
                    if (!(t.rows[r].errors[i] < t.rows[r - 1].errors[i])) fail(t.error_names[i] + " not decreasing");
                }
            }
        }
    }
    if (a.test == "ellipse" && a.sweep == "k" && a.mesh == "curved") {
        for (std::size_t r = 1; r < t.rows.size(); ++r) {
            for (std::size_t i = 0; i < last.errors.size(); ++i) {
                if (t.rows[r - 1].errors[i] > 1e-10 && !(t.rows[r].rates[i] >= 2.0)) {
                    fail(t.error_names[i] + " decrease factor " + fmt(t.rows[r].rates[i]) + " < 2 at k=" +
                         std::to_string(t.rows[r].degree));
                }
            }
        }
    }
    return ok;
}

int run_command(const RunArgs& a)
{
    const TestCase tc = a.test == "ellipse" ? ellipse_case() : hetero_case();
    ConvergenceOptions opts;
    opts.sweep = a.sweep == "h" ? Sweep::H : Sweep::K;
    opts.mode = a.mesh == "curved" ? MeshMode::Curved : MeshMode::Straight;
    opts.k = a.k;
    opts.k_min = a.k_min;
    opts.levels = a.levels;
    opts.first_level = a.first_level;
    opts.run.quadrature.edge_points = a.quad_points;
    opts.run.quadrature.radial_points = a.quad_points;
    opts.run.uncondensed = a.debug_uncondensed;
    if (!tc.has_exact()) opts.reference = ReferenceFunctionals{a.ref_integral, a.ref_h1};

    fs::create_directories(a.out);
    const std::string stem = tc.name + "_" + a.mesh + "_" + a.sweep + "_k" + std::to_string(a.k);
    const fs::path dat = fs::path(a.out) / (stem + ".dat");
    opts.on_row = [&](const ConvergenceTable& t) {
        // Flushed after every level so a failure keeps the finished rows.
        emit_dat(t, dat);
        std::ofstream ms(fs::path(a.out) / (stem + "_meshes.dat"));
        write_mesh_table(ms, t);
        const auto& r = t.rows.back();
        std::cerr << "  level " << r.mesh_index << " k=" << r.degree << " elements=" << r.elements << " ("
                  << fmt(r.seconds) << " s)\n";
    };

    if (a.dump_mesh) {
        const std::size_t n = opts.sweep == Sweep::H ? a.levels : 1;
        for (std::size_t l = 0; l < n; ++l) {
            const std::size_t level = a.first_level + l;
            write_mesh_file(fs::path(a.out) / (tc.name + "_" + a.mesh + "_level" + std::to_string(level) + ".mesh"),
                            case_mesh(tc, level, opts.mode));
        }
    }

    const auto start = std::chrono::steady_clock::now();
    const ConvergenceTable table = run_convergence(tc, opts);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    print_table(table);

    std::map<std::string, std::string> meta{
        {"case", tc.name},       {"mesh", a.mesh},
        {"sweep", a.sweep},      {"k", std::to_string(a.k)},
        {"quad_points", std::to_string(a.quad_points)},
        {"condensed", a.debug_uncondensed ? "false" : "true"},
        {"wall_seconds", fmt(wall)},
    };
    for (const auto& r : table.rows) {
        meta["seconds_level" + std::to_string(r.mesh_index) + "_k" + std::to_string(r.degree)] = fmt(r.seconds);
    }
    write_metadata(fs::path(a.out) / (stem + "_metadata.json"), meta);

    if (a.samples > 1) {
        const std::size_t level = opts.sweep == Sweep::H ? a.first_level + a.levels - 1 : a.first_level;
        const CaseRun run = run_case(tc, case_mesh(tc, level, opts.mode), a.k, opts.run);
        std::ofstream os(fs::path(a.out) / (stem + "_samples.csv"));
        write_point_samples(os, run, a.samples, a.samples);
    }

    if (a.check && !check_table(a, table)) return 2;
    return 0;
}

int validate_command(const std::string& path)
{
    const Mesh mesh = read_mesh_file(path);
    const auto violations = validate_mesh(mesh);
    std::cout << path << ": " << mesh.num_elements() << " elements, " << mesh.num_faces() << " faces, h = "
              << fmt(mesh.h()) << '\n';
    for (const auto& v : violations) std::cout << to_string(v.kind) << ": " << v.message << '\n';
    if (!violations.empty()) {
        std::cout << violations.size() << " violation(s)\n";
        return 1;
    }
    std::cout << "ok\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Curved-face HHO solver: convergence experiments and mesh checks"};
    app.require_subcommand(1);

    RunArgs args;
    auto* run = app.add_subcommand("run", "Run a convergence sweep and write .dat tables");
    run->add_option("--test", args.test, "Test case")->check(CLI::IsMember({"ellipse", "hetero"}));
    run->add_option("--k", args.k, "Polynomial degree (largest degree for k-sweeps)")->check(CLI::Range(0, 12));
    run->add_option("--k-min", args.k_min, "Smallest degree of a k-sweep")->check(CLI::Range(0, 12));
    run->add_option("--levels", args.levels, "Number of mesh levels of an h-sweep")->check(CLI::Range(1, 8));
    run->add_option("--first-level", args.first_level, "First mesh level (fixed level for k-sweeps)");
    run->add_option("--mesh", args.mesh, "Mesh type")->check(CLI::IsMember({"curved", "straight"}));
    run->add_option("--sweep", args.sweep, "Sweep over mesh size or degree")->check(CLI::IsMember({"h", "k"}));
    run->add_option("--quad-points", args.quad_points, "Gauss-Legendre points per edge and radial rule")
        ->check(CLI::Range(1, 200));
    run->add_option("--out", args.out, "Output directory");
    run->add_flag("--dump-mesh", args.dump_mesh, "Write the meshes in text format");
    run->add_flag("--debug-uncondensed", args.debug_uncondensed, "Solve without static condensation");
    run->add_flag("--check", args.check, "Exit with status 2 if the reference tolerances are not met");
    run->add_option("--samples", args.samples, "Write an N x N point-sample CSV of the finest solution");
    run->add_option("--reference-integral", args.ref_integral, "Reference integral (cases without exact solution)");
    run->add_option("--reference-h1", args.ref_h1, "Reference H1 seminorm (cases without exact solution)");

    std::string mesh_path;
    auto* validate = app.add_subcommand("validate", "Check a mesh file");
    validate->add_option("mesh", mesh_path, "Mesh file")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return run_command(args);
        if (*validate) return validate_command(mesh_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
