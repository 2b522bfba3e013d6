#pragma once

// Cut-Cartesian meshes with exact curved faces.
//
// A uniform n x n grid over a box is cut along closed conic loops (full
// circles or ellipses). Each loop is split at every grid-line crossing, so
// every arc face lies inside a single grid cell. Boundary loops discard what
// lies outside them; interface loops keep both sides and tag the regions.

#include "curvedhho/geometry.hpp"

#include <vector>

namespace curvedhho {

enum class LoopRole { Boundary, Interface };

struct CutLoop {
    Curve curve; ///< CircularArc or EllipseArc spanning one full period
    LoopRole role = LoopRole::Boundary;
};

enum class SmallCellPolicy {
    Reject, ///< throw DegenerateCutError; shift the grid offset and retry
    Keep,
};

struct CutSpec {
    Point box_min = Point(0.0, 0.0);
    Point box_max = Point(1.0, 1.0);
    std::size_t n = 1;
    std::vector<CutLoop> loops;
    double small_cell_fraction = 1e-8; ///< relative to the grid cell area
    SmallCellPolicy small_cell_policy = SmallCellPolicy::Reject;
};

/// Element region tag: bit i is set when the element lies inside the i-th
/// interface loop (interface loops counted in CutSpec::loops order).
Mesh cut_cartesian(const CutSpec& spec);

enum class StraightenScope {
    AllCurved,    ///< every curved face
    InteriorOnly, ///< curved interior faces; the domain boundary stays exact
};

/// Replaces curved faces by their chords. Connectivity, ids and region tags
/// are kept; areas are recomputed.
Mesh straighten(const Mesh& mesh, StraightenScope scope = StraightenScope::AllCurved);

struct MeshPair {
    Mesh curved;
    Mesh straight;
};

/// Doubles the grid resolution per level, starting from spec.n.
std::vector<MeshPair> mesh_sequence(CutSpec spec, std::size_t levels,
                                    StraightenScope scope = StraightenScope::AllCurved);

} // namespace curvedhho
