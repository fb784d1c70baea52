// SPDX-License-Identifier: Apache-2.0
#include "mustructure/suites.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mustructure {

namespace {

Mat3 random_rotation(std::mt19937& rng) {
    std::normal_distribution<double> n;
    Mat3 A;
    for (int i = 0; i < 9; ++i) A(i) = n(rng);
    const Eigen::HouseholderQR<Mat3> qr(A);
    return qr.householderQ();
}

struct Case {
    Mat3 B;
    TangentFrame frame;
};

Case random_case(std::mt19937& rng) {
    std::uniform_int_distribution<int> rank(1, 3);
    std::uniform_real_distribution<double> eig(0.2, 5.0);
    std::bernoulli_distribution singular(0.4);
    const Mat3 Q = random_rotation(rng);
    const int r = rank(rng);
    std::vector<Vec3> t;
    for (int k = 0; k < r; ++k) t.push_back(Q.col(k));
    Vec3 lam(eig(rng), eig(rng), eig(rng));
    Mat3 V = random_rotation(rng);
    if (r < 3 && singular(rng)) {
        Vec3 k = Q.col(2);
        if (r == 1) {
            std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
            const double a = ang(rng);
            k = std::cos(a) * Q.col(1) + std::sin(a) * Q.col(2);
        }
        V.col(0) = k;
        V.col(1) = k.unitOrthogonal();
        V.col(2) = k.cross(V.col(1));
        lam[0] = 0.0;
    }
    const Mat3 B = V * lam.asDiagonal() * V.transpose();
    return {0.5 * (B + B.transpose()), frame_from_vectors(Vec3::Zero(), t)};
}

// min over eta with P eta = xi of (B eta, eta).
double variational_min(const Mat3& B, const TangentFrame& f, const Vec3& xi) {
    const Eigen::SelfAdjointEigenSolver<Mat3> es(f.normal_projector);
    Eigen::MatrixXd N(3, 0);
    for (int k = 0; k < 3; ++k)
        if (es.eigenvalues()[k] > 0.5) {
            N.conservativeResize(3, N.cols() + 1);
            N.col(N.cols() - 1) = es.eigenvectors().col(k);
        }
    if (N.cols() == 0) return xi.dot(B * xi);
    const Eigen::MatrixXd S = N.transpose() * B * N;
    const Eigen::VectorXd g = N.transpose() * B * xi;
    const Eigen::VectorXd c = -S.completeOrthogonalDecomposition().pseudoInverse() * g;
    const Vec3 eta = xi + N * c;
    return eta.dot(B * eta);
}

bool worked_examples() {
    const Vec3 ex(1, 0, 0), ey(0, 1, 0), ez(0, 0, 1);
    const Mat3 B211 = Vec3(2, 1, 1).asDiagonal();
    return relax_at(B211, frame_from_vectors(Vec3::Zero(), {ex})) == Mat3(Vec3(2, 0, 0).asDiagonal()) &&
           relax_at(Mat3::Identity(), frame_from_vectors(Vec3::Zero(), {ex, ey})) == Mat3(Vec3(1, 1, 0).asDiagonal()) &&
           relax_at(B211, frame_from_vectors(Vec3::Zero(), {ex, ey, ez})) == B211;
}

}  // namespace

RelaxSuiteReport relaxation_suite(int cases, unsigned seed) {
    RelaxSuiteReport rep;
    rep.cases = cases;
    rep.worked_examples = worked_examples();
    std::mt19937 rng(seed);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < cases; ++trial) {
        const Case c = random_case(rng);
        const double scale = c.B.cwiseAbs().maxCoeff();
        bool ok = admissibility_check(c.B, c.frame) > 0.0;

        const BasisSet b1 = b_orthonormal_basis(c.B, c.frame);
        // A second, randomly mixed spanning set of the same space.
        Eigen::MatrixXd G = Eigen::MatrixXd::Identity(b1.l(), b1.l());
        for (int i = 0; i < b1.l(); ++i)
            for (int j = 0; j < b1.l(); ++j) G(i, j) += 0.7 * n(rng);
        std::vector<Vec3> mixed;
        for (int i = b1.l() - 1; i >= 0; --i) {
            Vec3 v = Vec3::Zero();
            for (int j = 0; j < b1.l(); ++j) v += G(i, j) * b1.e[j];
            mixed.push_back(v);
        }
        const BasisSet b2 = b_orthonormal_basis_from(c.B, mixed);
        ok = ok && b1.l() == b2.l();

        const Mat3 R1 = relax_with(c.B, b1);
        const Mat3 R2 = relax_with(c.B, b2);
        const double dev = (R1 - R2).cwiseAbs().maxCoeff() / scale;
        double ann = 0.0;
        for (const BasisSet* b : {&b1, &b2})
            for (const Vec3& e : b->e) ann = std::max(ann, (R1 * e).norm() / scale);
        double var = 0.0;
        for (int k = 0; k < 5; ++k) {
            const Vec3 xi = c.frame.projector * Vec3(n(rng), n(rng), n(rng));
            var = std::max(var, std::abs(xi.dot(R1 * xi) - variational_min(c.B, c.frame, xi)) /
                                    (scale * std::max(1.0, xi.squaredNorm())));
        }
        ok = ok && dev <= 1e-10 && ann <= 1e-9 && var <= 1e-8 && tangential_ellipticity(R1, c.frame) > 0.0;
        rep.basis_independence = std::max(rep.basis_independence, dev);
        rep.annihilation = std::max(rep.annihilation, ann);
        rep.variational = std::max(rep.variational, var);
        if (!ok) ++rep.failures;
    }
    rep.pass = rep.failures == 0 && rep.worked_examples;
    return rep;
}

PoincareSuiteReport poincare_suite(const LinearSystem& sys, int k, double constant, int samples, unsigned seed) {
    PoincareSuiteReport rep;
    rep.group = k;
    rep.constant = constant;
    rep.samples = samples;
    std::mt19937 rng(seed);
    std::normal_distribution<double> n;
    const Vector& mask = sys.masks[k];
    const std::vector<int>& members = sys.groups.members[k];
    for (int trial = 0; trial < samples; ++trial) {
        Vector v(sys.space->size());
        if (trial % 2 == 0) {
            for (int i = 0; i < v.size(); ++i) v[i] = n(rng);
        } else {
            v = interpolate(sys.space, expr::parse(random_smooth_field(rng))).values();
        }
        v = v.cwiseProduct(mask);
        v -= (v.dot(sys.mass_masks[k]) / mask.dot(sys.mass_masks[k])) * mask;
        const MuFunction u(sys.space, v);
        const double g2 = grad_norm2(u, members);
        const double l2 = l2mu_norm2(u, members);
        if (g2 > 0.0) rep.max_ratio = std::max(rep.max_ratio, l2 / (constant * g2));
    }
    rep.pass = rep.max_ratio <= 1.0 + 1e-9;
    return rep;
}

std::string random_smooth_field(std::mt19937& rng) {
    std::uniform_int_distribution<int> kind(0, 3), coef(1, 8), sign(0, 1), deg(0, 2), var(0, 2);
    const char* names[3] = {"x", "y", "z"};
    auto quarter = [&] {
        std::ostringstream os;
        os << (sign(rng) ? "-" : "") << coef(rng) * 0.25;
        return os.str();
    };
    auto phase = [&] { return "(" + quarter() + "*x + " + quarter() + "*y + " + quarter() + "*z)"; };
    std::string out;
    for (int term = 0; term < 3; ++term) {
        std::string t;
        switch (kind(rng)) {
            case 0: {
                t = quarter();
                for (const char* v : names) {
                    const int p = deg(rng);
                    if (p > 0) t += std::string("*") + v + "^" + std::to_string(p);
                }
                break;
            }
            case 1: t = quarter() + "*sin" + phase(); break;
            case 2: t = quarter() + "*cos" + phase(); break;
            default: t = quarter() + "*exp(" + quarter() + "*" + names[var(rng)] + ")*cos(" + quarter() + "*" + names[var(rng)] + ")"; break;
        }
        out += (term ? " + (" : "(") + t + ")";
    }
    return out;
}

}  // namespace mustructure
