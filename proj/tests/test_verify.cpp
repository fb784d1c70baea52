// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"
#include "mustructure/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

using namespace mustructure;
using namespace fixtures;
using expr::parse;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<expr::Expr> exprs(const std::vector<std::string>& t) {
    std::vector<expr::Expr> out;
    for (const auto& s : t) out.push_back(parse(s));
    return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::IoError;
}

std::shared_ptr<const Structure> structure_of(const StructureSpec& spec) {
    return std::make_shared<const Structure>(build_structure(spec));
}

const std::vector<std::string> kPlateExact = {"cos(pi*x)*cos(pi*y)", "cos(pi*z)*cos(pi*y)"};

MuFunction manufactured_solve(const StructureSpec& spec, const std::vector<std::string>& exact) {
    auto s = structure_of(spec);
    const Manufactured m = derive_manufactured(*s, MatrixField(), exprs(exact));
    auto space = make_space(s);
    const LinearSystem sys = assemble(space, relax(MatrixField(), *space), m.rhs);
    compatibility_check(m.rhs, *space, sys.groups);
    return solve_neumann(sys).u;
}

}  // namespace

TEST(TraceGap, ConformingIsZero) {
    auto space = make_space(structure_of(two_discs(0.2)));
    const LinearSystem sys = assemble(space, relax(MatrixField(), *space), exprs({"x+y+z", "x+y+z"}));
    const MuFunction u = solve_neumann(sys).u;
    EXPECT_GT(u.values().norm(), 0.0);
    EXPECT_EQ(trace_gap(u, 0), 0.0);
    EXPECT_EQ(trace_gap(u, 0, GapNorm::Max), 0.0);
}

TEST(TraceGap, PenaltySweepDecreases) {
    // The mirror-symmetric plate pair with symmetric data gives a broken
    // solution that is continuous already, so the second component gets a
    // different (still admissible) exact solution.
    auto s = structure_of(crossed_plates(0.1));
    const Manufactured m = derive_manufactured(*s, MatrixField(), exprs({"cos(pi*x)*cos(pi*y)", "cos(pi*y)*cos(2*pi*z)"}));
    double previous = std::numeric_limits<double>::infinity();
    for (double kappa : {1e3, 1e4, 1e5}) {
        const SolveResult r = penalty_solve(s, MatrixField(), m.rhs, kappa);
        const double gap = trace_gap(r.u, 0);
        EXPECT_GT(gap, 1e-8);
        // Gap ~ 1 / kappa once the penalty dominates.
        if (std::isfinite(previous)) {
            EXPECT_LT(gap / previous, 0.5) << "kappa " << kappa;
        }
        previous = gap;
    }
}

TEST(TraceGap, DecoupledConstants) {
    auto space = make_space(structure_of(crossed_plates(0.25)), true);
    const MuFunction u = interpolate(space, exprs({"1", "0"}));
    EXPECT_NEAR(trace_gap(u, 0), std::sqrt(2.0), 1e-14);  // junction length 2
    EXPECT_EQ(trace_gap(u, 0, GapNorm::Max), 1.0);
    auto mixed = make_space(structure_of(segment_plate(0.25)));
    EXPECT_EQ(kind_of([&] { trace_gap(MuFunction(mixed), 0); }), ErrorKind::UncoupledJunction);
}

TEST(Translate, HandEvaluatedExample) {
    auto space = make_space(structure_of(crossed_plates(0.125)));
    const MuFunction u = interpolate(space, exprs({"x", "0"}));
    const TranslationSpec spec{ex, 0.25, 0.25, 0};
    const MuFunction t = generalized_translate(u, spec);
    const auto window = translation_window(space->structure(), spec);
    const Structure& s = space->structure();
    int checked = 0;
    for (int c = 0; c < 2; ++c)
        for (std::size_t n = 0; n < s.meshes[c].nodes.size(); ++n) {
            if (!window[c][n]) continue;
            const double want = c == 0 ? s.meshes[c].nodes[n].x() + 0.25 : 0.25;
            EXPECT_NEAR(t.at(c, static_cast<int>(n)), want, 1e-14);
            ++checked;
        }
    EXPECT_GT(checked, 50);

    const MuFunction d = difference_quotient(u, spec);
    for (int c = 0; c < 2; ++c)
        for (std::size_t n = 0; n < s.meshes[c].nodes.size(); ++n)
            if (window[c][n]) {
                EXPECT_NEAR(d.at(c, static_cast<int>(n)), 1.0, 1e-13);
            }
}

TEST(Translate, ConstantsLinearityAndSharedAxis) {
    auto space = make_space(structure_of(crossed_plates(0.1)));
    const MuFunction one = interpolate(space, parse("3"));
    for (const Vec3& axis : {ex, ey, ez}) {
        const TranslationSpec spec{axis, 0.2, 0.3, 0};
        // Exact up to the rounding of barycentric interpolation.
        EXPECT_LT((generalized_translate(one, spec).values() - one.values()).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT(difference_quotient(one, spec).values().cwiseAbs().maxCoeff(), 1e-13);
    }
    const MuFunction u = interpolate(space, parse("sin(2*x+y)*exp(z)"));
    const MuFunction v = interpolate(space, parse("x*y - z^2"));
    const TranslationSpec sx{ex, 0.1, 0.2, 0};
    const MuFunction lhs = generalized_translate(2.0 * u - 0.5 * v, sx);
    const MuFunction rhs = 2.0 * generalized_translate(u, sx) - 0.5 * generalized_translate(v, sx);
    EXPECT_LT((lhs.values() - rhs.values()).cwiseAbs().maxCoeff(), 1e-14);

    // Along the shared direction the translation is a plain nodal shift.
    const TranslationSpec sy{ey, 0.2, 0.2, 0};
    const MuFunction ty = generalized_translate(u, sy);
    const auto window = translation_window(space->structure(), sy);
    const Structure& s = space->structure();
    for (int c = 0; c < 2; ++c)
        for (std::size_t n = 0; n < s.meshes[c].nodes.size(); ++n)
            if (window[c][n]) {
                const Vec3 x = s.meshes[c].nodes[n] + Vec3(0, 0.2, 0);
                EXPECT_NEAR(ty.at(c, static_cast<int>(n)), std::sin(2 * x.x() + x.y()) * std::exp(x.z()), 1e-14);
            }
}

TEST(Translate, Errors) {
    auto space = make_space(structure_of(crossed_plates(0.1)));
    const MuFunction u(space);
    EXPECT_EQ(kind_of([&] { generalized_translate(u, {ex, 0.3, 0.2, 0}); }), ErrorKind::MarginViolation);
    EXPECT_EQ(kind_of([&] { difference_quotient(u, {ex, 0.0, 0.2, 0}); }), ErrorKind::ZeroStep);
    const Vec3 diag = Vec3(1, 0, 1).normalized();
    EXPECT_EQ(kind_of([&] { generalized_translate(u, {diag, 0.1, 0.2, 0}); }), ErrorKind::UnsupportedGeometry);
    auto mixed = make_space(structure_of(segment_plate(0.25)));
    EXPECT_EQ(kind_of([&] { generalized_translate(MuFunction(mixed), {ex, 0.1, 0.2, 0}); }), ErrorKind::UnsupportedGeometry);
}

TEST(DifferenceQuotient, ConvergesToDerivative) {
    auto space = make_space(structure_of(crossed_plates(0.0125)));
    const MuFunction u = interpolate(space, exprs({"cos(pi*x)", "1"}));
    const MuFunction du = interpolate(space, exprs({"-pi*sin(pi*x)", "0"}));
    std::vector<double> err;
    for (double h : {0.2, 0.1, 0.05}) {
        const TranslationSpec spec{ex, h, 0.25, 0};
        const auto window = translation_window(space->structure(), spec);
        err.push_back(window_norms(difference_quotient(u, spec) - du, window).l2);
    }
    // First order in the step while the mesh error stays negligible.
    EXPECT_NEAR(std::log2(err[0] / err[1]), 1.0, 0.1);
    EXPECT_NEAR(std::log2(err[1] / err[2]), 1.0, 0.1);
}

TEST(DqScan, AffineAndKink) {
    auto space = make_space(structure_of(crossed_plates(0.025)));
    const std::vector<double> hs = {0.2, 0.1, 0.05, 0.025};
    const DqScan affine = dq_uniform_bound_scan(interpolate(space, exprs({"x+2*y", "2*y"})), ex, hs, 0.25);
    for (const DqRow& r : affine.rows) {
        EXPECT_NEAR(r.norm, affine.rows[0].norm, 1e-12);
        EXPECT_LT(r.grad_norm, 1e-10);
    }
    EXPECT_TRUE(affine.pass);

    const DqScan kink = dq_uniform_bound_scan(interpolate(space, exprs({"abs(x-0.3)", "0.3"})), ex, hs, 0.25);
    EXPECT_FALSE(kink.pass);
    // Growth like h^(-1/2): each halving multiplies the norm by about sqrt(2).
    for (std::size_t k = 1; k < kink.rows.size(); ++k)
        EXPECT_NEAR(kink.rows[k].grad_norm / kink.rows[k - 1].grad_norm, std::sqrt(2.0), 0.05);
}

TEST(H2, QuadraticOnSegment) {
    auto space = make_space(structure_of({{segment(1, Vec3::Zero(), ex, -1, 1)}, 0.05}));
    const H2Indicator ind = h2_indicator(interpolate(space, parse("x^2")), 1, 0.2, 0.05);
    // Second differences of the nodal interpolant of x^2 are exactly 2 at
    // nodes and interpolate linearly between them; window length 1.6.
    EXPECT_NEAR(ind.second[0], 2.0 * std::sqrt(1.6), 1e-9);
    EXPECT_NEAR(hessian_norm_oracle(space->structure(), 1, parse("x^2"), 0.2), 2.0 * std::sqrt(1.6), 1e-12);
    EXPECT_EQ(kind_of([&] { h2_indicator(interpolate(space, parse("x^2")), 1, 1.0, 0.05); }), ErrorKind::EmptyWindow);
}

TEST(H2, MixedSymmetry) {
    auto space = make_space(structure_of(crossed_plates(0.05)));
    const H2Indicator ind = h2_indicator(interpolate(space, exprs({"sin(2*x)*cos(3*y)+x*y", "0"})), 1, 0.2, 0.05);
    EXPECT_LE(ind.mixed_asymmetry, 1e-12 * ind.mixed);
}

TEST(Continuity, ConstantsAndConforming) {
    const ContinuityReport c = continuity_modulus(interpolate(make_space(structure_of(crossed_plates(0.2))), parse("2")));
    EXPECT_EQ(c.coupled_jump, 0.0);
    for (double m : c.modulus) EXPECT_EQ(m, 0.0);

    std::vector<double> hs, mod;
    for (double h : {0.2, 0.1, 0.05, 0.025}) {
        const MuFunction u = manufactured_solve(crossed_plates(h), kPlateExact);
        const ContinuityReport r = continuity_modulus(u);
        EXPECT_EQ(r.coupled_jump, 0.0);
        hs.push_back(h);
        mod.push_back(*std::max_element(r.modulus.begin(), r.modulus.end()));
    }
    EXPECT_GE(linear_fit(hs, mod).r2, 0.98);
}

TEST(Continuity, MixedDimensionJump) {
    const MuFunction u = manufactured_solve(segment_plate(0.05), {"cos(pi*x)", "-cos(pi*y)*cos(pi*z)"});
    const ContinuityReport r = continuity_modulus(u);
    EXPECT_NEAR(r.uncoupled_jump, 2.0, 0.05);
}

TEST(SecondOrder, Examples) {
    const Structure plates = build_structure(crossed_plates(0.5));
    EXPECT_LE(second_order_residual(parse("x^2+z^2"), plates), 1e-12);
    EXPECT_LE(second_order_residual(parse("cos(pi*x)*cos(pi*y)"), plates), 1e-10);
    EXPECT_LE(second_order_residual(parse("x"), plates), 0.0);
}

TEST(LinearFit, Exact) {
    const LinearFit f = linear_fit({1, 2, 3}, {3, 5, 7});
    EXPECT_NEAR(f.slope, 2.0, 1e-15);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.r2, 1.0, 1e-15);
}

// The uniform bound and the interior second differences on the manufactured
// crossed-plate solution, against symbolic oracles.
TEST(Regularity, CrossedPlateDqBound) {
    const MuFunction fine = manufactured_solve(crossed_plates(0.025), kPlateExact);
    const DqScan scan = dq_uniform_bound_scan(fine, ex, {0.2, 0.1, 0.05, 0.025}, 0.25);
    EXPECT_TRUE(scan.pass);
    EXPECT_LE(scan.ratio, 1.25);
    // Limit: ||d_x grad u|| over the S1 window; the S2 part vanishes since
    // d_x d_y u1 = 0 on the junction.
    const auto uxx = parse("pi^2*cos(pi*x)*cos(pi*y)"), uxy = parse("pi^2*sin(pi*x)*sin(pi*y)");
    const auto& g = quad::accurate_rule(1, 4);
    double acc = 0.0;
    const int m = 60;
    const double w = 1.5 / m;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (const auto& a : g)
                for (const auto& b : g) {
                    const Vec3 x(-0.75 + (i + a.bary[1]) * w, -0.75 + (j + b.bary[1]) * w, 0);
                    acc += a.weight * b.weight * w * w * (std::pow(uxx.eval(x), 2) + std::pow(uxy.eval(x), 2));
                }
    EXPECT_NEAR(scan.rows.back().grad_norm / std::sqrt(acc), 1.0, 0.1);
}

TEST(Regularity, CrossedPlateH2Indicator) {
    std::vector<double> totals;
    double oracle = 0.0;
    for (double h : {0.1, 0.05, 0.025}) {
        const MuFunction u = manufactured_solve(crossed_plates(h), kPlateExact);
        totals.push_back(h2_indicator(u, 1, 0.4, h).total);
        oracle = hessian_norm_oracle(u.structure(), 1, parse(kPlateExact[0]), 0.4);
    }
    const double lo = *std::min_element(totals.begin(), totals.end());
    const double hi = *std::max_element(totals.begin(), totals.end());
    EXPECT_LE(hi / lo - 1.0, 0.05);
    for (double t : totals) EXPECT_NEAR(t / oracle, 1.0, 0.1);
    // Oracle cross-check: |Hess|^2 = 2 pi^4 (c^2 c^2 + s^2 s^2) integrates in
    // closed form over the window [-0.6, 0.6]^2.
    const double a = 0.6, pi = kPi;
    const double C = a + std::sin(2 * pi * a) / (2 * pi), S = a - std::sin(2 * pi * a) / (2 * pi);
    EXPECT_NEAR(oracle, std::sqrt(2 * std::pow(pi, 4) * (C * C + S * S)), 1e-9);
}
