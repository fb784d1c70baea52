// SPDX-License-Identifier: Apache-2.0
#pragma once

// Weak Neumann problem on a structure: kernel groups, compatibility of the
// load, stiffness/mass assembly, projected conjugate gradients and
// per-group Poincare constants.

#include "mustructure/relaxation.hpp"

#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>
#include <vector>

namespace mustructure {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int32_t>;

/// Partition of component indices into maximal sets whose union has a
/// characteristic function with zero mu-gradient.
struct KernelGroups {
    std::vector<std::vector<int>> members;  // component indices, ascending
    std::vector<int> group_of;              // per component index

    int d() const { return static_cast<int>(members.size()); }
    std::vector<int> member_ids(int k, const Structure& s) const;
};

/// Connected components of the graph whose edges are coupled junctions.
KernelGroups kernel_groups(const Structure& s);

/// Group characteristic vectors over the DOFs of a space.
std::vector<Vector> group_masks(const KernelGroups& g, const Space& space);

struct CompatibilityReport {
    std::vector<double> residual;   // integral of f theta over each group
    std::vector<double> tolerance;  // tol_factor * mu(group) * max|f|
    std::vector<double> measure;    // mu(group)
    bool pass = true;
};

/// Per-group integrals of f theta with an accurate rule. Throws
/// IncompatibleRHS naming the failing groups unless `throw_on_failure` is off.
CompatibilityReport compatibility_check(const std::vector<expr::Expr>& f, const Space& space, const KernelGroups& groups,
                                        double tol_factor = 1e-8, bool throw_on_failure = true);

struct LinearSystem {
    SpacePtr space;
    SparseMatrix A;   // stiffness, integral of B_mu grad phi_a . grad phi_b theta
    SparseMatrix M;   // consistent mass
    Vector F;         // load
    KernelGroups groups;
    std::vector<Vector> masks;
    std::vector<Vector> mass_masks;  // M * mask, the mu-weighted characteristic
};

/// Element assembly with theta and B_mu sampled at the assembly points.
/// `f` holds one expression per component index.
LinearSystem assemble(SpacePtr space, const RelaxedField& Bmu, const std::vector<expr::Expr>& f);

/// Adds kappa * sum_p w_p (u_a - u_b)^2 over the node pairs of every coupled
/// junction, with trapezoid weights along segment junctions and w = 1 at
/// point junctions. Meant for broken spaces.
void add_junction_penalty(LinearSystem& sys, double kappa);

struct SolveOptions {
    double tol = 1e-10;          // relative residual
    int maxiter = 0;             // 0 means 20 * DOF count
    double drift_tol = 1e-3;     // |chi_k . F| relative to chi_k . |F|
    std::optional<Vector> x0;    // initial guess
};

struct SolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    std::vector<double> group_means;
    std::vector<double> rhs_shift;  // constant removed from f on each group
    double energy = 0.0;            // (Au,u)/2 - (F,u)
};

struct SolveResult {
    MuFunction u;
    SolveReport report;
};

/// Jacobi-preconditioned CG on the complement of the group characteristics.
/// The load is projected onto the range of A (which removes the per-group
/// mean of f), the residual and preconditioned residual are kept orthogonal
/// to every characteristic, and the result is shifted to zero mu-mean per
/// group. Throws IncompatibleRHS when the unprojected load drifts by more
/// than drift_tol, NoConvergence when maxiter is reached.
SolveResult solve_neumann(const LinearSystem& sys, const SolveOptions& opt = {});

struct PoincareEstimate {
    int group = 0;
    double constant = 0.0;   // 1 / lambda
    double lambda = 0.0;     // smallest positive eigenvalue of A v = lambda M v
    int iterations = 0;
};

/// Inverse power iteration on the DOFs of group k with mean deflation.
PoincareEstimate poincare_constant(const LinearSystem& sys, int k, unsigned seed = 12345, double rel_tol = 1e-6,
                                   int maxiter = 2000);

}  // namespace mustructure
