// SPDX-License-Identifier: Apache-2.0
#pragma once

// Manufactured solutions: loads derived symbolically from a chosen exact
// solution, with sampled consistency checks of the junction and boundary
// conditions the exact solution has to satisfy.

#include "mustructure/relaxation.hpp"

#include <string>
#include <vector>

namespace mustructure {

struct Manufactured {
    std::vector<expr::Expr> exact;  // per component index
    std::vector<expr::Expr> rhs;    // -div_S(theta B_mu grad_S u) / theta
};

/// Conormal flux theta B_mu grad_S u as three expressions.
std::array<expr::Expr, 3> flux_expr(const MatrixField& B, const Component& c, const expr::Expr& u);

/// Symbolic tangential divergence tr(P J(V)) of an ambient vector field.
expr::Expr tangential_divergence(const Component& c, const std::array<expr::Expr, 3>& V);

/// Derives per-component loads and checks, at sample points:
///  - equal values across every coupled junction,
///  - zero net conormal flux at coupled junctions lying on component boundaries,
///  - zero conormal flux on the outer boundary away from junctions.
/// Tolerance 1e-10 relative to the local magnitude. Violations raise
/// InconsistentManufactured.
Manufactured derive_manufactured(const Structure& s, const MatrixField& B, const std::vector<expr::Expr>& exact);

}  // namespace mustructure
