#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace acoustica {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Closed axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  bool contains_open(Vec2 p) const { return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1; }
  /// Strict nesting: `inner` lies in the open interior of this rectangle.
  bool strictly_contains(const Rect& inner) const {
    return inner.x0 > x0 && inner.x1 < x1 && inner.y0 > y0 && inner.y1 < y1;
  }
  bool mirror_symmetric() const { return x0 == -x1; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// G0 is the shielded core, G1 the design annulus, G2 the buffer with c = 1.
enum class Region : std::uint8_t { G0 = 0, G1 = 1, G2 = 2 };

enum class BoundaryTag : std::uint8_t {
  S1Top,
  S2Bottom,
  S3Sides,
  S4Inner,
  /// The FE/FD interface ∂D_FEM; not a physical boundary.
  Interface,
};

std::string_view to_string(Region r);
std::string_view to_string(BoundaryTag t);

struct BoundarySegment {
  Vec2 a;
  Vec2 b;
  BoundaryTag tag;
};

/// Nested rectangles D ⊃ D_FEM ⊃ G1 ⊃ G0; G2 = D_FEM \ (G0 ∪ G1).
struct DomainGeometry {
  Rect d;
  Rect dfem;
  Rect g1;
  Rect g0;
  std::vector<BoundarySegment> boundary_tags;

  /// Region of a point inside D_FEM; boundary points fall to the outer region.
  Region region_of(Vec2 p) const;
};

/// Validates nesting and mirror symmetry and tags the boundary segments.
DomainGeometry make_geometry(const Rect& d, const Rect& dfem, const Rect& g1, const Rect& g0);

}  // namespace acoustica
