// SPDX-License-Identifier: Apache-2.0
#pragma once

// Numerical regularity diagnostics on discrete solutions: junction trace
// gaps, generalized translations and difference quotients, interior second
// differences, continuity moduli and the smooth second-order identity.

#include "mustructure/manufactured.hpp"
#include "mustructure/solver.hpp"

#include <vector>

namespace mustructure {

enum class GapNorm { L2, Max };

/// Difference of the two junction traces. Trapezoid weights along segment
/// junctions for the L2 norm. UncoupledJunction for uncoupled junctions.
double trace_gap(const MuFunction& u, int junction, GapNorm norm = GapNorm::L2);

/// Solve in the broken space with junction pairs tied by a quadratic penalty.
SolveResult penalty_solve(std::shared_ptr<const Structure> s, const MatrixField& B, const std::vector<expr::Expr>& f,
                          double kappa, const SolveOptions& opt = {});

struct TranslationSpec {
    Vec3 axis{1, 0, 0};  // ambient unit direction
    double h = 0.0;      // step
    double margin = 0.0; // interior band, at least |h|
    int junction = 0;    // junction whose window is used
};

/// Node mask of the interior window: nodes at distance >= margin from the
/// outer boundary whose generalized translation stays inside the structure.
std::vector<std::vector<char>> translation_window(const Structure& s, const TranslationSpec& spec);

/// Closed-form generalized translation around one junction. If the axis lies
/// in both tangent spaces it is a plain shift on both components; if it lies
/// in one component S1 only, S1 is shifted and the other component receives
/// the shifted minus unshifted S1 trace, extended constantly away from the
/// junction. Nodes outside the window keep their values.
/// Errors: MarginViolation, UnsupportedGeometry.
MuFunction generalized_translate(const MuFunction& u, const TranslationSpec& spec);

/// (generalized_translate(u) - u) / h. ZeroStep for h = 0.
MuFunction difference_quotient(const MuFunction& u, const TranslationSpec& spec);

struct WindowNorms {
    double l2 = 0.0;    // ||v||_{L2_mu(window)}
    double grad = 0.0;  // ||grad_mu v||_{L2_mu(window)}
};

/// Norms over the cells whose vertices all lie in the node mask.
WindowNorms window_norms(const MuFunction& v, const std::vector<std::vector<char>>& window);

struct DqRow {
    double h = 0.0;
    double norm = 0.0;       // ||D^h u||
    double grad_norm = 0.0;  // ||grad_mu D^h u||
};

struct DqScan {
    std::vector<DqRow> rows;
    double ratio = 0.0;  // max / min of grad_norm; 1 when every row vanishes
    bool pass = false;   // ratio <= 1.25
};

/// Difference quotients over a decreasing list of steps sharing one window
/// (margin >= every |h|).
DqScan dq_uniform_bound_scan(const MuFunction& u, const Vec3& axis, const std::vector<double>& hs, double margin, int junction = 0);

/// Symbolic counterpart of the scan limit: the L2_mu norm of grad_mu of the
/// pointwise limit of D^h u over the cells of the same window. The limit is
/// the axis derivative of u on the shifted component(s); on the receiving
/// component it is the axis derivative of u1 at the junction foot, which only
/// varies along a segment junction. `exact` holds one expression per component.
double dq_limit_oracle(const Structure& s, const std::vector<expr::Expr>& exact, const TranslationSpec& spec);

struct H2Indicator {
    std::vector<double> second;  // ||Delta^2_{kk} u|| per tangent direction
    double mixed = 0.0;          // ||Delta^2_{12} u||
    double mixed_asymmetry = 0.0;  // ||Delta^2_{12} u - Delta^2_{21} u||
    double total = 0.0;          // sqrt(sum_k second_k^2 + 2 mixed^2)
    int probes = 0;
};

/// Central second differences with stencil `delta` along the local axes of a
/// component, sampled on a tensor probe grid over the component shrunk by
/// margin and summed with trapezoid weights. n intervals per direction; with
/// n = 0 the probe spacing equals delta. Rectangles and intervals only
/// (EmptyWindow if the window is empty, UnsupportedGeometry otherwise).
H2Indicator h2_indicator(const MuFunction& u, int component_id, double margin, double delta, int n = 0);

/// The matching symbolic quantity: sqrt of the integral over the same window
/// of the squared tangential Hessian (Frobenius), theta weighted.
double hessian_norm_oracle(const Structure& s, int component_id, const expr::Expr& u, double margin, int n = 64);

struct ContinuityReport {
    double coupled_jump = 0.0;    // max nodal jump over coupled junctions
    double uncoupled_jump = 0.0;  // same over uncoupled junctions
    std::vector<double> modulus;  // per component, max |u(p) - u(q)| over mesh edges
    double h = 0.0;
};

ContinuityReport continuity_modulus(const MuFunction& u);

struct LinearFit {
    double intercept = 0.0, slope = 0.0, r2 = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Max entrywise residual of the smooth second-order identity at `samples`
/// interior points per component (deterministic in the seed).
double second_order_residual(const expr::Expr& phi, const Structure& s, int samples = 20, unsigned seed = 1);

}  // namespace mustructure
