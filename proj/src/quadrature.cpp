#include "ensrom/quadrature.hpp"

#include <cmath>

namespace ensrom {

const TriangleRule& degree5_rule() {
  static const TriangleRule rule = [] {
    const double s = std::sqrt(15.0);
    const double a1 = (6.0 - s) / 21.0, b1 = (9.0 + 2.0 * s) / 21.0;
    const double a2 = (6.0 + s) / 21.0, b2 = (9.0 - 2.0 * s) / 21.0;
    const double w1 = (155.0 - s) / 1200.0;
    const double w2 = (155.0 + s) / 1200.0;
    TriangleRule r;
    r.degree = 5;
    r.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                {b1, a1, a1}, {a1, b1, a1}, {a1, a1, b1},
                {b2, a2, a2}, {a2, b2, a2}, {a2, a2, b2}};
    r.weights = {9.0 / 40.0, w1, w1, w1, w2, w2, w2};
    return r;
  }();
  return rule;
}

}  // namespace ensrom
