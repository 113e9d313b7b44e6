#include "acoustica/geometry.hpp"

#include <sstream>

#include "acoustica/errors.hpp"

namespace acoustica {

std::string_view to_string(Region r) {
  switch (r) {
    case Region::G0: return "G0";
    case Region::G1: return "G1";
    case Region::G2: return "G2";
  }
  return "?";
}

std::string_view to_string(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::S1Top: return "S1_top";
    case BoundaryTag::S2Bottom: return "S2_bottom";
    case BoundaryTag::S3Sides: return "S3_sides";
    case BoundaryTag::S4Inner: return "S4_inner";
    case BoundaryTag::Interface: return "interface";
  }
  return "?";
}

Region DomainGeometry::region_of(Vec2 p) const {
  if (g0.contains_open(p)) return Region::G0;
  if (g1.contains_open(p)) return Region::G1;
  return Region::G2;
}

namespace {

void push_rect_sides(std::vector<BoundarySegment>& out, const Rect& r, BoundaryTag top, BoundaryTag bottom,
                     BoundaryTag sides) {
  out.push_back({{r.x0, r.y1}, {r.x1, r.y1}, top});
  out.push_back({{r.x0, r.y0}, {r.x1, r.y0}, bottom});
  out.push_back({{r.x0, r.y0}, {r.x0, r.y1}, sides});
  out.push_back({{r.x1, r.y0}, {r.x1, r.y1}, sides});
}

std::string describe(const Rect& r) {
  std::ostringstream os;
  os << "(" << r.x0 << ", " << r.x1 << ") x (" << r.y0 << ", " << r.y1 << ")";
  return os.str();
}

}  // namespace

DomainGeometry make_geometry(const Rect& d, const Rect& dfem, const Rect& g1, const Rect& g0) {
  const std::pair<const Rect*, const char*> all[] = {{&d, "D"}, {&dfem, "D_FEM"}, {&g1, "G1"}, {&g0, "G0"}};
  for (const auto& [r, name] : all) {
    if (!(r->width() > 0.0) || !(r->height() > 0.0)) {
      throw GeometryError(std::string(name) + " is empty: " + describe(*r));
    }
    if (!r->mirror_symmetric()) {
      throw GeometryError(std::string(name) + " is not symmetric about x1 = 0: " + describe(*r));
    }
  }
  if (!d.strictly_contains(dfem)) throw GeometryError("D_FEM " + describe(dfem) + " is not strictly inside D " + describe(d));
  if (!dfem.strictly_contains(g1)) throw GeometryError("G1 " + describe(g1) + " is not strictly inside D_FEM " + describe(dfem));
  if (!g1.strictly_contains(g0)) throw GeometryError("G0 " + describe(g0) + " is not strictly inside G1 " + describe(g1));

  DomainGeometry geo{d, dfem, g1, g0, {}};
  push_rect_sides(geo.boundary_tags, d, BoundaryTag::S1Top, BoundaryTag::S2Bottom, BoundaryTag::S3Sides);
  push_rect_sides(geo.boundary_tags, g0, BoundaryTag::S4Inner, BoundaryTag::S4Inner, BoundaryTag::S4Inner);
  push_rect_sides(geo.boundary_tags, dfem, BoundaryTag::Interface, BoundaryTag::Interface, BoundaryTag::Interface);
  return geo;
}

}  // namespace acoustica
