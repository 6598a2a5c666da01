#include "lagoon/io.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include "lagoon/error.hpp"

namespace lagoon {

namespace {

std::string sanitized(std::string name) {
    for (char& c : name) {
        if (c == ' ' || c == '\t') c = '_';
    }
    return name.empty() ? "field" : name;
}

} // namespace

void write_vtk(std::ostream& os, const TriMesh& mesh, const VtkFields& fields, const std::string& title) {
    for (const auto& f : fields.point_scalars) {
        if (f.values.size() != mesh.node_count()) throw InvalidArgument("point field '" + f.name + "' has the wrong size");
    }
    for (const auto& f : fields.cell_scalars) {
        if (f.values.size() != mesh.triangle_count()) throw InvalidArgument("cell field '" + f.name + "' has the wrong size");
    }
    for (const auto& f : fields.cell_vectors) {
        if (f.values.size() != mesh.triangle_count()) throw InvalidArgument("cell field '" + f.name + "' has the wrong size");
    }

    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << std::setprecision(17);
    os << "POINTS " << mesh.node_count() << " double\n";
    for (const Point2& p : mesh.nodes) os << p.x << ' ' << p.y << " 0\n";
    os << "CELLS " << mesh.triangle_count() << ' ' << 4 * mesh.triangle_count() << '\n';
    for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << "CELL_TYPES " << mesh.triangle_count() << '\n';
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) os << "5\n";

    os << "CELL_DATA " << mesh.triangle_count() << '\n';
    os << "SCALARS region int 1\nLOOKUP_TABLE default\n";
    for (Region r : mesh.regions) os << (r == Region::Main ? 0 : 1) << '\n';
    for (const auto& f : fields.cell_scalars) {
        os << "SCALARS " << sanitized(f.name) << " double 1\nLOOKUP_TABLE default\n";
        for (double v : f.values) os << v << '\n';
    }
    for (const auto& f : fields.cell_vectors) {
        os << "VECTORS " << sanitized(f.name) << " double\n";
        for (const Point2& v : f.values) os << v.x << ' ' << v.y << " 0\n";
    }
    if (!fields.point_scalars.empty()) {
        os << "POINT_DATA " << mesh.node_count() << '\n';
        for (const auto& f : fields.point_scalars) {
            os << "SCALARS " << sanitized(f.name) << " double 1\nLOOKUP_TABLE default\n";
            for (double v : f.values) os << v << '\n';
        }
    }
}

void write_vtk_file(const std::string& path, const TriMesh& mesh, const VtkFields& fields) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    write_vtk(os, mesh, fields);
    if (!os) throw ConfigError("failed writing '" + path + "'");
}

void write_field_csv(std::ostream& os, const TriMesh& mesh, std::span<const double> values, const std::string& name) {
    if (values.size() != mesh.node_count()) throw InvalidArgument("field size does not match the mesh");
    os << "node,x,y," << name << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < values.size(); ++i) {
        os << i << ',' << mesh.nodes[i].x << ',' << mesh.nodes[i].y << ',' << values[i] << '\n';
    }
}

} // namespace lagoon
