#pragma once

// Line-oriented text format for curved meshes; see docs/mesh_format.md.

#include "curvedhho/geometry.hpp"

#include <filesystem>
#include <iosfwd>

namespace curvedhho {

void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);

void write_mesh_file(const std::filesystem::path& path, const Mesh& mesh);
Mesh read_mesh_file(const std::filesystem::path& path);

} // namespace curvedhho
