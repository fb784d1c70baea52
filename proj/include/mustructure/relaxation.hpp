// SPDX-License-Identifier: Apache-2.0
#pragma once

// Coefficient fields B(x) and their relaxation B_mu(x): the normal directions
// that B can see are eliminated with a B-orthonormal basis of
// T_mu(x)^perp intersected with Im B(x).

#include "mustructure/funcspace.hpp"

#include <array>
#include <string>
#include <vector>

namespace mustructure {

/// Symmetric 3x3 field of expressions. Only the upper triangle is stored, so
/// symmetry holds by construction.
class MatrixField {
public:
    MatrixField();  // identity
    explicit MatrixField(const std::array<expr::Expr, 6>& upper);  // 00 01 02 11 12 22
    static MatrixField constant(const Mat3& B);  // NotSymmetric if B is not

    /// Nine entry strings, row major. Lower entries may be empty; when both
    /// halves are given they must agree structurally (NotSymmetric otherwise).
    static MatrixField parse(const std::array<std::string, 9>& entries);

    const expr::Expr& entry(int i, int j) const;
    Mat3 eval(const Vec3& x) const;
    bool is_constant() const;

private:
    std::array<expr::Expr, 6> upper_;
};

struct BasisSet {
    std::vector<Vec3> e;
    int l() const { return static_cast<int>(e.size()); }
};

/// Relative eigenvalue threshold separating numerical zero from rank.
inline constexpr double kRankTol = 1e-8;

/// Checks symmetry, T_mu(x) inside Im B(x) and ellipticity on Im B(x).
/// Returns the smallest Rayleigh quotient of B over Im B(x).
double admissibility_check(const Mat3& B, const TangentFrame& frame);

/// B-orthonormal basis of W = T^perp intersected with Im B.
BasisSet b_orthonormal_basis(const Mat3& B, const TangentFrame& frame);

/// B-Gram-Schmidt of an arbitrary spanning set of W. Vectors whose B-norm
/// falls below the rank threshold after orthogonalisation are dropped.
BasisSet b_orthonormal_basis_from(const Mat3& B, const std::vector<Vec3>& spanning);

/// B - sum_i (B e_i)(B e_i)^T / (B e_i, e_i).
Mat3 relax_with(const Mat3& B, const BasisSet& basis);

/// Admissibility check, basis construction and formula at one point.
Mat3 relax_at(const Mat3& B, const TangentFrame& frame);

/// Smallest eigenvalue of B_mu restricted to the tangent space.
double tangential_ellipticity(const Mat3& Bmu, const TangentFrame& frame);

/// B_mu at every assembly quadrature point, indexed like Space::theta.
struct RelaxedField {
    std::vector<std::vector<Mat3>> qp;       // [component][cell * nq + q]
    double lambda = 0.0;                      // min admissibility constant
    double tangential_min = 0.0;              // min tangential ellipticity
    std::vector<double> lipschitz;            // per component, sampled on mesh edges
    int nq_1d = 0, nq_2d = 0;

    const Mat3& at(int comp, int cell, int q, int nq) const { return qp[comp][cell * nq + q]; }
};

/// Quadrature points inside a component are relaxed with that component's
/// tangent frame (junction sets have zero measure there). Admissibility is
/// additionally checked at every junction node with the full T_mu frame.
RelaxedField relax(const MatrixField& B, const Space& space);

/// Symbolic B_mu on one component, valid when B is positive definite on the
/// normal space of the component: successive rank-one eliminations along an
/// orthonormal basis of the normal space. Constant fields are relaxed
/// numerically instead, which also covers semidefinite B.
std::array<expr::Expr, 9> relaxed_expr(const MatrixField& B, const Component& c);

/// Orthonormal basis of the normal space of a component.
std::vector<Vec3> normal_basis(const Component& c);

}  // namespace mustructure
