// SPDX-License-Identifier: Apache-2.0
#include "mustructure/relaxation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mustructure {

namespace {

constexpr int kUpper[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};

std::string fmt_mat(const Mat3& B) {
    std::string s = "[";
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%s%.6g", j ? ", " : (i ? "; " : ""), B(i, j));
            s += buf;
        }
    }
    return s + "]";
}

double scale_of(const Mat3& B) { return std::max(B.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min()); }

}  // namespace

MatrixField::MatrixField() {
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) upper_[kUpper[i][j]] = expr::Expr::constant(i == j ? 1.0 : 0.0);
}

MatrixField::MatrixField(const std::array<expr::Expr, 6>& upper) : upper_(upper) {}

MatrixField MatrixField::constant(const Mat3& B) {
    if (!B.allFinite()) throw Error(ErrorKind::NotSymmetric, "coefficient matrix is not finite");
    if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale_of(B))
        throw Error(ErrorKind::NotSymmetric, "coefficient matrix " + fmt_mat(B) + " is not symmetric");
    std::array<expr::Expr, 6> u;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) u[kUpper[i][j]] = expr::Expr::constant(B(i, j));
    return MatrixField(u);
}

MatrixField MatrixField::parse(const std::array<std::string, 9>& entries) {
    std::array<expr::Expr, 6> u;
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            const std::string& up = entries[3 * i + j];
            const std::string& lo = entries[3 * j + i];
            if (up.empty()) throw Error(ErrorKind::ConfigError, "coefficient entry b" + std::to_string(i + 1) + std::to_string(j + 1) + " is missing");
            u[kUpper[i][j]] = expr::parse(up);
            if (i != j && !lo.empty() && !expr::structurally_equal(u[kUpper[i][j]], expr::parse(lo)))
                throw Error(ErrorKind::NotSymmetric, "coefficient entries b" + std::to_string(i + 1) + std::to_string(j + 1) + " and b" +
                                                         std::to_string(j + 1) + std::to_string(i + 1) + " differ");
        }
    }
    return MatrixField(u);
}

const expr::Expr& MatrixField::entry(int i, int j) const { return upper_[kUpper[i][j]]; }

Mat3 MatrixField::eval(const Vec3& x) const {
    Mat3 B;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) B(i, j) = B(j, i) = upper_[kUpper[i][j]].eval(x);
    return B;
}

bool MatrixField::is_constant() const {
    return std::all_of(upper_.begin(), upper_.end(), [](const expr::Expr& e) { return e.is_constant(); });
}

double admissibility_check(const Mat3& B, const TangentFrame& frame) {
    if (!B.allFinite()) throw Error(ErrorKind::NotSymmetric, "coefficient matrix is not finite");
    const double scale = scale_of(B);
    if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error(ErrorKind::NotSymmetric, "coefficient matrix " + fmt_mat(B) + " is not symmetric");
    const Eigen::SelfAdjointEigenSolver<Mat3> es(B);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    Mat3 Pim = Mat3::Zero();
    double lambda = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        if (std::abs(es.eigenvalues()[k]) <= kRankTol * top) continue;
        const Vec3 v = es.eigenvectors().col(k);
        Pim += v * v.transpose();
        lambda = std::min(lambda, es.eigenvalues()[k]);
    }
    for (const Vec3& t : frame.basis) {
        if ((t - Pim * t).norm() > 1e-10)
            throw Error(ErrorKind::TangentNotInImage, "tangent direction is not in the image of " + fmt_mat(B));
    }
    if (!(lambda > 0.0)) throw Error(ErrorKind::NotElliptic, "coefficient matrix " + fmt_mat(B) + " is not elliptic on its image");
    return lambda;
}

BasisSet b_orthonormal_basis_from(const Mat3& B, const std::vector<Vec3>& spanning) {
    const double scale = scale_of(B);
    BasisSet out;
    for (const Vec3& v0 : spanning) {
        const double n0 = v0.norm();
        if (n0 == 0.0) continue;
        Vec3 v = v0 / n0;
        for (int pass = 0; pass < 2; ++pass)
            for (const Vec3& e : out.e) v -= (B * v).dot(e) * e;
        const double n2 = (B * v).dot(v);
        if (n2 > kRankTol * scale * v.squaredNorm() && v.norm() > kRankTol) out.e.push_back(v / std::sqrt(n2));
    }
    return out;
}

BasisSet b_orthonormal_basis(const Mat3& B, const TangentFrame& frame) {
    // v lies in W iff P_T v = 0 and (I - P_im) v = 0, i.e. v is in the kernel of
    // the positive semidefinite sum of the two projectors.
    const Eigen::SelfAdjointEigenSolver<Mat3> eb(B);
    const double top = eb.eigenvalues().cwiseAbs().maxCoeff();
    Mat3 Pim = Mat3::Zero();
    for (int k = 0; k < 3; ++k) {
        const double rel = std::abs(eb.eigenvalues()[k]) / top;
        if (rel >= 1e-2 * kRankTol && rel <= 1e2 * kRankTol)
            throw Error(ErrorKind::RankDeficiency, "numerical rank of the coefficient matrix is ambiguous");
        if (rel <= kRankTol) continue;
        const Vec3 v = eb.eigenvectors().col(k);
        Pim += v * v.transpose();
    }
    const Mat3 M = frame.projector + (Mat3::Identity() - Pim);
    const Eigen::SelfAdjointEigenSolver<Mat3> em(M);
    std::vector<Vec3> span;
    for (int k = 0; k < 3; ++k) {
        const double ev = em.eigenvalues()[k];
        if (ev >= 1e-2 * kRankTol && ev <= 1e2 * kRankTol)
            throw Error(ErrorKind::RankDeficiency, "dimension of the relaxation space is ambiguous (eigenvalue " + std::to_string(ev) + ")");
        if (ev < kRankTol) span.push_back(em.eigenvectors().col(k));
    }
    BasisSet out = b_orthonormal_basis_from(B, span);
    if (out.l() != static_cast<int>(span.size()))
        throw Error(ErrorKind::RankDeficiency, "relaxation space is numerically degenerate in the B inner product");
    return out;
}

Mat3 relax_with(const Mat3& B, const BasisSet& basis) {
    Mat3 R = B;
    for (const Vec3& e : basis.e) {
        const Vec3 be = B * e;
        R -= be * be.transpose() / be.dot(e);
    }
    return R;
}

Mat3 relax_at(const Mat3& B, const TangentFrame& frame) {
    admissibility_check(B, frame);
    return relax_with(B, b_orthonormal_basis(B, frame));
}

double tangential_ellipticity(const Mat3& Bmu, const TangentFrame& frame) {
    const int r = frame.rank();
    Eigen::MatrixXd F(3, r);
    for (int k = 0; k < r; ++k) F.col(k) = frame.basis[k];
    const Eigen::MatrixXd G = F.transpose() * Bmu * F;
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues().minCoeff();
}

RelaxedField relax(const MatrixField& B, const Space& space) {
    const Structure& s = space.structure();
    RelaxedField out;
    out.lambda = std::numeric_limits<double>::infinity();
    out.tangential_min = std::numeric_limits<double>::infinity();
    out.qp.resize(s.components.size());
    out.lipschitz.assign(s.components.size(), 0.0);
    out.nq_1d = static_cast<int>(quad::assembly_rule(1).size());
    out.nq_2d = static_cast<int>(quad::assembly_rule(2).size());
    const bool constant = B.is_constant();

    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Component& comp = s.components[c];
        const Mesh& m = s.meshes[c];
        const TangentFrame frame = frame_from_vectors(comp.origin, comp.tangents);
        auto one = [&](const Vec3& x) {
            const Mat3 Bx = B.eval(x);
            out.lambda = std::min(out.lambda, admissibility_check(Bx, frame));
            const Mat3 R = relax_with(Bx, b_orthonormal_basis(Bx, frame));
            out.tangential_min = std::min(out.tangential_min, tangential_ellipticity(R, frame));
            return R;
        };
        const auto& rule = quad::assembly_rule(comp.dim);
        out.qp[c].reserve(m.cells.size() * rule.size());
        if (constant) {
            const Mat3 R = one(comp.origin);
            out.qp[c].assign(m.cells.size() * rule.size(), R);
            continue;
        }
        for (int t = 0; t < static_cast<int>(m.cells.size()); ++t)
            for (const auto& q : rule) out.qp[c].push_back(one(cell_point(m, t, q.bary)));
        std::vector<Mat3> at_node;
        at_node.reserve(m.nodes.size());
        for (const Vec3& x : m.nodes) at_node.push_back(one(x));
        for (const auto& e : m.edges()) {
            const double d = (m.nodes[e[0]] - m.nodes[e[1]]).norm();
            out.lipschitz[c] = std::max(out.lipschitz[c], (at_node[e[0]] - at_node[e[1]]).norm() / d);
        }
    }

    for (const Junction& J : s.junctions) {
        if (!J.coupled) continue;
        for (int n : J.nodes_i) {
            const Vec3& x = s.meshes[J.ci].nodes[n];
            out.lambda = std::min(out.lambda, admissibility_check(B.eval(x), tangent_frame_at(s, x)));
        }
    }
    return out;
}

std::vector<Vec3> normal_basis(const Component& c) {
    if (c.dim == 2) return {c.tangents[0].cross(c.tangents[1]).normalized()};
    const Vec3& t = c.tangents[0];
    int axis = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(t[k]) < std::abs(t[axis])) axis = k;
    const Vec3 a = Vec3::Unit(axis);
    const Vec3 n1 = (a - a.dot(t) * t).normalized();
    return {n1, t.cross(n1).normalized()};
}

std::array<expr::Expr, 9> relaxed_expr(const MatrixField& B, const Component& c) {
    using expr::Expr;
    std::array<Expr, 9> R;
    if (B.is_constant()) {
        const Mat3 Rm = relax_at(B.eval(c.origin), frame_from_vectors(c.origin, c.tangents));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) R[3 * i + j] = Expr::constant(Rm(i, j));
        return R;
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) R[3 * i + j] = B.entry(i, j);
    for (const Vec3& n : normal_basis(c)) {
        std::array<Expr, 3> v;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (n[j] != 0.0) v[i] = v[i] + R[3 * i + j] * Expr::constant(n[j]);
        Expr d;
        for (int i = 0; i < 3; ++i)
            if (n[i] != 0.0) d = d + Expr::constant(n[i]) * v[i];
        std::array<Expr, 9> next;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) next[3 * i + j] = R[3 * i + j] - v[i] * v[j] / d;
        R = next;
    }
    return R;
}

}  // namespace mustructure
