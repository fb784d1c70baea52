// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

namespace mustructure::quad {

/// Quadrature point on a reference simplex, given in barycentric
/// coordinates. Weights are fractions of the element measure (sum to 1).
struct RefPoint {
    std::array<double, 3> bary{0, 0, 0};
    double weight = 0.0;
};

/// Rule used for assembly: 2-point Gauss on intervals, edge midpoints on
/// triangles. Both integrate quadratics exactly.
const std::vector<RefPoint>& assembly_rule(int dim);

/// Gauss-Legendre with n points per direction (n in {2, 4, 8}); triangles
/// use the collapsed (Duffy) tensor rule with n*n points.
const std::vector<RefPoint>& accurate_rule(int dim, int n);

}  // namespace mustructure::quad
