#pragma once

#include <array>
#include <vector>

namespace ensrom {

/// Quadrature on a triangle in barycentric coordinates; weights sum to 1 and
/// are multiplied by the element area by the caller.
struct TriangleRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;
};

/// 7-point rule exact for polynomials of total degree 5.
const TriangleRule& degree5_rule();

}  // namespace ensrom
