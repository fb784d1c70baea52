// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"
#include "mustructure/solver.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace mustructure;
using namespace fixtures;
using expr::parse;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

std::shared_ptr<const Structure> structure_of(const StructureSpec& spec) {
    return std::make_shared<const Structure>(build_structure(spec));
}

LinearSystem system_of(std::shared_ptr<const Structure> s, const std::vector<std::string>& f, bool broken = false) {
    auto space = make_space(std::move(s), broken);
    std::vector<expr::Expr> fe;
    for (const auto& t : f) fe.push_back(parse(t));
    return assemble(space, relax(MatrixField(), *space), fe);
}

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

// Structure holding one component of `s` with its mesh unchanged.
std::shared_ptr<const Structure> single(const Structure& s, int c) {
    Structure out;
    out.components = {s.components[c]};
    out.meshes = {s.meshes[c]};
    out.h = s.h;
    return std::make_shared<const Structure>(std::move(out));
}

}  // namespace

TEST(KernelGroups, Examples) {
    EXPECT_EQ(kernel_groups(*structure_of(two_discs(0.3))).members, (std::vector<std::vector<int>>{{0, 1}}));
    EXPECT_EQ(kernel_groups(*structure_of(segment_plate(0.5))).members, (std::vector<std::vector<int>>{{0}, {1}}));
    StructureSpec three{{segment(1, Vec3::Zero(), ex, 0, 1), segment(2, Vec3(0, 1, 0), ex, 0, 1), segment(3, Vec3(0, 2, 0), ex, 0, 1)}, 0.5};
    EXPECT_EQ(kernel_groups(*structure_of(three)).d(), 3);
}

TEST(Compatibility, Examples) {
    auto plates = make_space(structure_of(crossed_plates(0.1)));
    const auto g = kernel_groups(plates->structure());
    const auto rep = compatibility_check(exprs({"2*pi^2*cos(pi*x)*cos(pi*y)", "2*pi^2*cos(pi*x)*cos(pi*y)"}), *plates, g);
    EXPECT_TRUE(rep.pass);
    EXPECT_NEAR(rep.residual[0], 0.0, 1e-12);

    const auto one = compatibility_check(exprs({"1", "1"}), *plates, g, 1e-8, false);
    EXPECT_FALSE(one.pass);
    EXPECT_NEAR(one.residual[0], 8.0, 1e-12);
    EXPECT_EQ(kind_of([&] { compatibility_check(exprs({"1", "1"}), *plates, g); }), ErrorKind::IncompatibleRHS);

    auto seg = make_space(structure_of({{segment(1, Vec3::Zero(), ex, -1, 1)}, 0.1}));
    EXPECT_TRUE(compatibility_check(exprs({"x"}), *seg, kernel_groups(seg->structure())).pass);
}

TEST(Assemble, OneDimensionalStencil) {
    const double h = 0.25;
    const LinearSystem sys = system_of(structure_of({{segment(1, Vec3::Zero(), ex, -1, 1)}, h}), {"0"});
    const int n = 9;
    ASSERT_EQ(sys.A.rows(), n);
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        expect(i, i) = (i == 0 || i == n - 1) ? 1.0 / h : 2.0 / h;
        if (i > 0) expect(i, i - 1) = -1.0 / h;
        if (i + 1 < n) expect(i, i + 1) = -1.0 / h;
    }
    EXPECT_LT((Eigen::MatrixXd(sys.A) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Assemble, CrossedSegmentOriginRow) {
    const double h = 0.5;
    const LinearSystem sys = system_of(structure_of(crossed_segments(h)), {"0", "0"});
    const Junction& J = sys.space->structure().junctions[0];
    const int o = sys.space->dofs().dof(J.ci, J.nodes_i[0]);
    int offdiag = 0;
    for (SparseMatrix::InnerIterator it(sys.A, o); it; ++it) {
        if (it.col() == o) {
            EXPECT_NEAR(it.value(), 4.0 / h, 1e-12);
        } else {
            EXPECT_NEAR(it.value(), -1.0 / h, 1e-12);
            ++offdiag;
        }
    }
    EXPECT_EQ(offdiag, 4);
}

TEST(Assemble, TwoDiscsAreGluedBlocks) {
    auto s = structure_of(two_discs(0.2));
    const LinearSystem conf = system_of(s, {"0", "0"});
    const LinearSystem brk = system_of(s, {"0", "0"}, true);
    // The broken matrix is block diagonal.
    const auto& d = brk.space->dofs();
    for (int r = 0; r < brk.A.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(brk.A, r); it; ++it)
            EXPECT_EQ(d.owner(r).first, d.owner(static_cast<int>(it.col())).first);
    // Gluing the blocks through the DOF map reproduces the conforming matrix.
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(brk.space->size(), conf.space->size());
    for (int c = 0; c < 2; ++c)
        for (std::size_t nd = 0; nd < s->meshes[c].nodes.size(); ++nd)
            G(d.dof(c, static_cast<int>(nd)), conf.space->dofs().dof(c, static_cast<int>(nd))) = 1.0;
    const Eigen::MatrixXd glued = G.transpose() * Eigen::MatrixXd(brk.A) * G;
    EXPECT_LT((glued - Eigen::MatrixXd(conf.A)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Assemble, ConservationOnGroups) {
    for (const StructureSpec& spec : {crossed_segments(0.1), crossed_plates(0.2), two_discs(0.2), segment_plate(0.2)}) {
        const LinearSystem sys = system_of(structure_of(spec), {"0", "0"});
        for (const Vector& chi : sys.masks) EXPECT_LT((sys.A * chi).cwiseAbs().maxCoeff(), 1e-12);
        // Mass is symmetric positive definite.
        const Eigen::MatrixXd M(sys.M);
        EXPECT_LT((M - M.transpose()).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues().minCoeff(), 0.0);
    }
}

TEST(Solve, ZeroLoad) {
    const LinearSystem sys = system_of(structure_of(crossed_plates(0.2)), {"0", "0"});
    const SolveResult r = solve_neumann(sys);
    EXPECT_EQ(r.u.values().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE(r.report.iterations, 1);
}

TEST(Solve, CrossedSegmentsManufactured) {
    std::vector<double> err;
    for (double h : {0.1, 0.05, 0.025}) {
        const LinearSystem sys = system_of(structure_of(crossed_segments(h)), {"pi^2*cos(pi*x)", "pi^2*cos(pi*z)"});
        const SolveResult r = solve_neumann(sys);
        EXPECT_LE(r.report.relative_residual, 1e-10);
        for (double m : r.report.group_means) EXPECT_LE(std::abs(m), 1e-12);
        err.push_back(error_norms(r.u, exprs({"cos(pi*x)", "cos(pi*z)"}), {{0, 1}}).l2);
    }
    EXPECT_GE(std::log2(err[0] / err[1]), 1.9);
    EXPECT_GE(std::log2(err[1] / err[2]), 1.9);
}

TEST(Solve, CrossedPlatesManufactured) {
    const std::vector<std::string> f = {"2*pi^2*cos(pi*x)*cos(pi*y)", "2*pi^2*cos(pi*z)*cos(pi*y)"};
    const auto exact = exprs({"cos(pi*x)*cos(pi*y)", "cos(pi*z)*cos(pi*y)"});
    const SolveResult fine = solve_neumann(system_of(structure_of(crossed_plates(0.05)), f));
    const SolveResult r = solve_neumann(system_of(structure_of(crossed_plates(0.1)), f));
    const double e_coarse = error_norms(r.u, exact, {{0, 1}}).l2;
    const double e_fine = error_norms(fine.u, exact, {{0, 1}}).l2;
    EXPECT_GE(std::log2(e_coarse / e_fine), 1.9);
    const Trace a = trace_on(r.u, 0, 1), b = trace_on(r.u, 0, 2);
    EXPECT_EQ(a.values, b.values);
    for (std::size_t k = 0; k < a.values.size(); ++k) EXPECT_NEAR(a.values[k], std::cos(std::numbers::pi * (a.arclength[k] - 1.0)), 0.05);
}

TEST(Solve, KernelShiftOfInitialGuessIsInvisible) {
    const LinearSystem sys = system_of(structure_of(segment_plate(0.1)), {"pi^2*cos(pi*x)", "2*pi^2*cos(pi*y)*cos(pi*z)"});
    const SolveResult a = solve_neumann(sys);
    SolveOptions opt;
    opt.x0 = 3.5 * sys.masks[0] - 1.25 * sys.masks[1];
    const SolveResult b = solve_neumann(sys, opt);
    EXPECT_LT((a.u.values() - b.u.values()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Solve, GalerkinOrthogonality) {
    const LinearSystem sys = system_of(structure_of(two_discs(0.15)), {"exp(x)*sin(y) - 0.3*z", "exp(x)*sin(y) - 0.3*z"});
    const SolveResult r = solve_neumann(sys);
    Vector F = sys.F;
    for (std::size_t k = 0; k < sys.masks.size(); ++k) F -= r.report.rhs_shift[k] * sys.mass_masks[k];
    const Vector res = F - sys.A * r.u.values();
    EXPECT_LE(res.norm(), 1e-10 * F.norm() * 1.0001);
    for (const Vector& chi : sys.masks) EXPECT_LT(std::abs(chi.dot(res)), 1e-12 * F.norm());
}

TEST(Solve, Errors) {
    const LinearSystem one = system_of(structure_of(crossed_plates(0.2)), {"1", "1"});
    EXPECT_EQ(kind_of([&] { solve_neumann(one); }), ErrorKind::IncompatibleRHS);
    const LinearSystem sys = system_of(structure_of(crossed_plates(0.1)), {"x + y^3", "z + y^3"});
    SolveOptions opt;
    opt.maxiter = 3;
    EXPECT_EQ(kind_of([&] { solve_neumann(sys, opt); }), ErrorKind::NoConvergence);
}

TEST(Solve, DecouplingAcrossUncoupledJunction) {
    auto s = structure_of(segment_plate(0.1));
    const std::vector<std::string> f = {"pi^2*cos(pi*x)", "2*pi^2*cos(pi*y)*cos(pi*z)"};
    const SolveResult whole = solve_neumann(system_of(s, f));
    for (int c = 0; c < 2; ++c) {
        const SolveResult part = solve_neumann(system_of(single(*s, c), {f[c]}));
        const auto& dofs = whole.u.space().dofs().component(c);
        Vector restricted(static_cast<int>(dofs.size()));
        for (std::size_t k = 0; k < dofs.size(); ++k) restricted[static_cast<int>(k)] = whole.u.values()[dofs[k]];
        const MuFunction diff(part.u.space_ptr(), restricted - part.u.values());
        EXPECT_LT(l2mu_norm(diff), 1e-9);
    }
}

TEST(Poincare, ClassicalConstants) {
    const double oracle = 1.0 / kPi2;
    const PoincareEstimate seg = poincare_constant(system_of(structure_of(unit_segment(0.02)), {"0"}), 0);
    EXPECT_NEAR(seg.constant / oracle, 1.0, 0.05);
    const PoincareEstimate plate = poincare_constant(system_of(structure_of(unit_plate(0.05)), {"0"}), 0);
    EXPECT_NEAR(plate.constant / oracle, 1.0, 0.05);

    // Independent groups give the constants of their separate problems.
    auto s = structure_of(segment_plate(0.1));
    const LinearSystem both = system_of(s, {"0", "0"});
    for (int c = 0; c < 2; ++c) {
        const double joint = poincare_constant(both, c).constant;
        const double alone = poincare_constant(system_of(single(*s, c), {"0"}), 0).constant;
        EXPECT_NEAR(joint, alone, 1e-5 * alone);
    }
}

TEST(Poincare, SampledInequality) {
    const LinearSystem sys = system_of(structure_of(two_discs(0.1)), {"0", "0"});
    const double C = poincare_constant(sys, 0).constant;
    EXPECT_GT(C, 0.0);
    std::mt19937 rng(77);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> freq(0.5, 4.0);
    for (int trial = 0; trial < 50; ++trial) {
        Vector v(sys.space->size());
        if (trial % 2 == 0) {
            for (int i = 0; i < v.size(); ++i) v[i] = n(rng);
        } else {
            const std::string e = "sin(" + std::to_string(freq(rng)) + "*x + " + std::to_string(freq(rng)) + "*y) + cos(" +
                                  std::to_string(freq(rng)) + "*z)";
            v = interpolate(sys.space, parse(e)).values();
        }
        v.array() -= v.dot(sys.mass_masks[0]) / sys.masks[0].dot(sys.mass_masks[0]);
        const MuFunction u(sys.space, v);
        const double l2 = l2mu_norm2(u, {0, 1});
        const double g2 = grad_norm2(u, {0, 1});
        EXPECT_LE(l2, C * g2 * (1.0 + 1e-9)) << "trial " << trial;
    }
}
