#pragma once

// Experiment definitions, error measures and convergence tables.

#include "curvedhho/hho.hpp"
#include "curvedhho/meshgen.hpp"
#include "curvedhho/solver.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace curvedhho {

enum class MeshMode { Curved, Straight };

struct TestCase {
    std::string name;
    CutSpec spec;                   ///< coarsest level of the mesh sequence
    StraightenScope straight_scope = StraightenScope::AllCurved;
    Diffusion diffusion;
    ScalarField source;
    ScalarField exact;              ///< empty when no exact solution is known
    VectorField exact_gradient;
    bool has_exact() const { return static_cast<bool>(exact); }
};

/// Rotated ellipse x^2 + xy + y^2 < 16/25 with u = sin(16/25 - x^2 - xy - y^2), K = I.
/// Level 0 is a 4 x 4 grid on [-1, 1]^2; level 1 has h = 0.3536.
TestCase ellipse_case();

/// Unit disc with K anisotropic inside r < 0.8 (region 1) and K = I outside, f = 1.
/// Level 0 has h = 0.7654.
TestCase hetero_case();

/// Level-th mesh of the case (grid size doubled per level).
Mesh case_mesh(const TestCase& tc, std::size_t level, MeshMode mode);

struct RunOptions {
    QuadratureOptions quadrature;
    bool uncondensed = false; ///< solve the full system instead of the condensed one
};

struct CaseRun {
    CaseRun(Mesh mesh, int k, const QuadratureOptions& quad) : disc(std::move(mesh), k, quad) {}

    Discretization disc;
    std::vector<LocalOperators> ops;
    DofMap dofs;
    DiscreteSolution solution;
    double seconds = 0.0;
};

/// Builds operators, assembles and solves the case on `mesh`.
CaseRun run_case(const TestCase& tc, Mesh mesh, int k, const RunOptions& options = {});

struct ErrorMeasures {
    double e0 = 0.0; ///< relative L2 error of the reconstruction
    double e1 = 0.0; ///< relative broken H1 error of the reconstruction
    double ea = 0.0; ///< relative energy error against the interpolant
};

/// Throws ContractError without an exact solution or with a vanishing norm.
ErrorMeasures error_measures(const TestCase& tc, const CaseRun& run);

struct ReferenceFunctionals {
    double integral = 0.0; ///< int of the reconstructed potential
    double h1 = 0.0;       ///< its broken H1 seminorm
};

ReferenceFunctionals reference_functionals(const CaseRun& run);

/// Reconstructed potential at x inside element e.
double evaluate_potential(const CaseRun& run, ElementId e, const Point& x);

enum class Sweep { H, K };

struct ConvergenceRow {
    std::size_t mesh_index = 0;
    int degree = 0;
    double h = 0.0;
    std::size_t elements = 0;
    std::size_t internal_edges = 0;
    std::vector<double> errors;
    /// h-sweeps: log(E_i/E_{i+1}) / log(h_i/h_{i+1}); k-sweeps: E_i/E_{i+1}.
    /// Empty on the first row.
    std::vector<double> rates;
    double seconds = 0.0;
};

struct ConvergenceTable {
    Sweep sweep = Sweep::H;
    std::vector<std::string> error_names;
    std::vector<ConvergenceRow> rows;
};

struct ConvergenceOptions {
    Sweep sweep = Sweep::H;
    MeshMode mode = MeshMode::Curved;
    int k = 1;                   ///< h-sweeps: degree; k-sweeps: largest degree
    int k_min = 0;               ///< k-sweeps only
    std::size_t first_level = 0; ///< h-sweeps: first level; k-sweeps: the fixed level
    std::size_t levels = 4;      ///< h-sweeps only
    RunOptions run;
    /// Reference values for cases without an exact solution.
    std::optional<ReferenceFunctionals> reference;
    /// Called after every completed row (partial tables survive failures).
    std::function<void(const ConvergenceTable&)> on_row;
};

/// Errors are (E0, E1, Ea) with an exact solution, otherwise the gaps
/// |int p u_h - int u*| and ||u_h|_H1 - |u*|_H1| against `reference`.
ConvergenceTable run_convergence(const TestCase& tc, const ConvergenceOptions& options);

/// Whitespace-separated table: "MeshSize" or "EdgeDegree", then the error
/// columns; 17 significant digits.
void write_dat(std::ostream& os, const ConvergenceTable& table);
void emit_dat(const ConvergenceTable& table, const std::filesystem::path& path);

struct DatTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
DatTable parse_dat(std::istream& is);

/// Mesh statistics per row: index, h, elements, internal edges.
void write_mesh_table(std::ostream& os, const ConvergenceTable& table);

/// Flat key/value run description written as a JSON object.
void write_metadata(const std::filesystem::path& path, const std::map<std::string, std::string>& values);

/// x,y,value samples of the reconstructed potential on an nx x ny grid over
/// the mesh bounding box; points outside the mesh are skipped.
void write_point_samples(std::ostream& os, const CaseRun& run, std::size_t nx, std::size_t ny);

} // namespace curvedhho
