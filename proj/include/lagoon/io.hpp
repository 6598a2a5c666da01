#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lagoon/mesh.hpp"

namespace lagoon {

struct NamedScalars {
    std::string name;
    std::span<const double> values;
};

struct NamedVectors {
    std::string name;
    std::span<const Point2> values;
};

struct VtkFields {
    std::vector<NamedScalars> point_scalars;
    std::vector<NamedScalars> cell_scalars;
    std::vector<NamedVectors> cell_vectors;
};

/// Legacy ASCII VTK unstructured grid. A "region" cell scalar (0 = Main,
/// 1 = Seg) is always written. Throws InvalidArgument on size mismatches.
void write_vtk(std::ostream& os, const TriMesh& mesh, const VtkFields& fields, const std::string& title = "lagoon");
void write_vtk_file(const std::string& path, const TriMesh& mesh, const VtkFields& fields);

/// "node,x,y,<name>" rows, one per node.
void write_field_csv(std::ostream& os, const TriMesh& mesh, std::span<const double> values,
                     const std::string& name = "g");

} // namespace lagoon
