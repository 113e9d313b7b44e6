#include "acoustica/fields.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "acoustica/errors.hpp"

namespace acoustica {

int TimeSeriesField::column_of(int node) const {
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] == node) return static_cast<int>(k);
  }
  return -1;
}

void check_compatible(const ObservationTrace& a, const ObservationTrace& b) {
  if (a.nodes != b.nodes || a.n_steps != b.n_steps || a.tau != b.tau || a.values.size() != b.values.size()) {
    throw ShapeError("observation traces do not share nodes and time levels");
  }
}

void write_trace_csv(std::ostream& os, const ObservationTrace& trace) {
  os << "t,node_x1,node_x2,u\n";
  char buf[128];
  for (std::size_t n = 0; n <= trace.n_steps; ++n) {
    for (std::size_t k = 0; k < trace.width(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", trace.time(n), trace.coords[k].x, trace.coords[k].y,
                    trace.at(n, k));
      os << buf;
    }
  }
}

void write_trace_csv(const std::string& path, const ObservationTrace& trace) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  write_trace_csv(os, trace);
  if (!os) throw Error("write failed: " + path);
}

ObservationTrace read_trace_csv(const std::string& path, const ObservationTrace& layout) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path);
  std::string line;
  if (!std::getline(is, line) || line != "t,node_x1,node_x2,u") throw ShapeError(path + ": bad trace header");
  ObservationTrace out = layout;
  const std::size_t expected = (layout.n_steps + 1) * layout.width();
  out.values.assign(expected, 0.0);
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (row >= expected) throw ShapeError(path + ": more rows than the trace layout");
    double t, x, y, u;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t, &x, &y, &u) != 4) {
      std::ostringstream os;
      os << path << ":" << row + 2 << ": malformed row";
      throw ShapeError(os.str());
    }
    const std::size_t n = row / layout.width(), k = row % layout.width();
    const Vec2 p = layout.coords[k];
    const double tol = 1e-9 * std::max(1.0, std::abs(layout.tau * layout.n_steps));
    if (std::abs(t - layout.time(n)) > tol || std::abs(x - p.x) > 1e-9 || std::abs(y - p.y) > 1e-9) {
      std::ostringstream os;
      os << path << ":" << row + 2 << ": row does not match the trace layout";
      throw ShapeError(os.str());
    }
    out.values[row++] = u;
  }
  if (row != expected) throw ShapeError(path + ": fewer rows than the trace layout");
  return out;
}

}  // namespace acoustica
