#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "pgdschwarz/fem_core.hpp"

namespace pgdschwarz::fem {

void write_vtk(const std::string& path, const std::vector<Point>& points, const std::vector<VtkCell>& cells,
               const std::vector<std::pair<std::string, const Vector*>>& fields, const std::string& title) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << std::setprecision(17);
  out << "POINTS " << points.size() << " double\n";
  for (const auto& p : points) out << p.x << ' ' << p.y << " 0\n";
  // Split every cell into bilinear quads, counter-clockwise.
  std::vector<std::array<std::size_t, 4>> quads;
  for (const auto& c : cells) {
    const int n = c.degree + 1;
    for (int b = 0; b < c.degree; ++b)
      for (int a = 0; a < c.degree; ++a) {
        auto at = [&](int i, int j) { return c.nodes[static_cast<std::size_t>(j * n + i)]; };
        quads.push_back({at(a, b), at(a + 1, b), at(a + 1, b + 1), at(a, b + 1)});
      }
  }
  out << "CELLS " << quads.size() << ' ' << quads.size() * 5 << '\n';
  for (const auto& q : quads) out << "4 " << q[0] << ' ' << q[1] << ' ' << q[2] << ' ' << q[3] << '\n';
  out << "CELL_TYPES " << quads.size() << '\n';
  for (std::size_t k = 0; k < quads.size(); ++k) out << "9\n";
  if (!fields.empty()) out << "POINT_DATA " << points.size() << '\n';
  for (const auto& [name, v] : fields) {
    if (static_cast<std::size_t>(v->size()) != points.size())
      throw std::invalid_argument("field '" + name + "' does not match the point count");
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < v->size(); ++i) out << (*v)(i) << '\n';
  }
}

void write_vtk(const std::string& path, const StructuredMesh& mesh,
               const std::vector<std::pair<std::string, const Vector*>>& fields) {
  std::vector<VtkCell> cells;
  cells.reserve(mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    auto nodes = mesh.cell_nodes(c);
    cells.push_back({std::vector<std::size_t>(nodes.begin(), nodes.end()), mesh.degree()});
  }
  write_vtk(path, mesh.nodes(), cells, fields);
}

}  // namespace pgdschwarz::fem
