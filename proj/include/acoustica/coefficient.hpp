#pragma once

#include <memory>
#include <vector>

#include "acoustica/mesh.hpp"

namespace acoustica {

/// Piecewise-constant coefficient c̃ = 1/c² on the triangles of a mesh.
/// c̃ is free only on G1; it equals 1 on G0, G2 and the FD region.
struct CoefficientField {
  std::shared_ptr<const TriMesh> mesh;
  std::vector<double> values;
  double lower = 1.0;
  double upper = 1.0;

  /// c̃ = g1_value on G1 and 1 elsewhere; upper bound defaults to g1_value.
  static CoefficientField uniform(std::shared_ptr<const TriMesh> mesh, double g1_value);
  static CoefficientField uniform(std::shared_ptr<const TriMesh> mesh, double g1_value, double upper);

  double min() const;
  double max() const;
  double max_over(Region r) const;
  /// Projects G1 values onto [lower, upper] and resets every other element to 1.
  void clamp();
  bool admissible(double tol = 0.0) const;
};

/// max_K |c̃_K - c̃_K'| / max |c̃|, where K' is the mirror image of K under
/// x1 -> -x1. Throws ShapeError if some triangle has no mirror partner.
double mirror_asymmetry(const CoefficientField& c);

/// Carries a coefficient from `field.mesh` to a mesh refined from it.
///
/// Elements that were not red-refined copy their parent value. The centre
/// child of a red-refined element inherits the parent value; a corner child
/// takes the mean of the parent and of the G1 neighbours across the two
/// parent edges it lies on. The result is clamped to the field bounds.
CoefficientField interpolate_coefficient(const CoefficientField& field, std::shared_ptr<const TriMesh> fine);

}  // namespace acoustica
