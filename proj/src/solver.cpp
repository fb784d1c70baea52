// SPDX-License-Identifier: Apache-2.0
#include "mustructure/solver.hpp"

#include "mustructure/kernels.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mustructure {

namespace {

int find_root(std::vector<int>& parent, int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
}

kernels::CsrView view_of(const SparseMatrix& A) {
    return {static_cast<std::size_t>(A.rows()), A.outerIndexPtr(), A.innerIndexPtr(), A.valuePtr()};
}


std::string id_list(const KernelGroups& g, int k, const Structure& s) {
    std::string out = "{";
    for (int id : g.member_ids(k, s)) out += (out.size() > 1 ? "," : "") + std::to_string(id);
    return out + "}";
}

}  // namespace

std::vector<int> KernelGroups::member_ids(int k, const Structure& s) const {
    std::vector<int> ids;
    for (int c : members[k]) ids.push_back(s.components[c].id);
    return ids;
}

KernelGroups kernel_groups(const Structure& s) {
    const int n = static_cast<int>(s.components.size());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    for (const Junction& J : s.junctions) {
        if (!J.coupled) continue;
        const int a = find_root(parent, J.ci), b = find_root(parent, J.cj);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    KernelGroups g;
    g.group_of.assign(n, -1);
    std::vector<int> root_group(n, -1);
    for (int c = 0; c < n; ++c) {
        const int r = find_root(parent, c);
        if (root_group[r] < 0) {
            root_group[r] = g.d();
            g.members.emplace_back();
        }
        g.group_of[c] = root_group[r];
        g.members[root_group[r]].push_back(c);
    }
    return g;
}

std::vector<Vector> group_masks(const KernelGroups& g, const Space& space) {
    std::vector<Vector> out;
    for (const auto& members : g.members) {
        Vector chi = Vector::Zero(space.size());
        for (int c : members)
            for (int d : space.dofs().component(c)) chi[d] = 1.0;
        out.push_back(std::move(chi));
    }
    return out;
}

CompatibilityReport compatibility_check(const std::vector<expr::Expr>& f, const Space& space, const KernelGroups& groups,
                                        double tol_factor, bool throw_on_failure) {
    const Structure& s = space.structure();
    CompatibilityReport rep;
    std::string failing;
    for (int k = 0; k < groups.d(); ++k) {
        double integral = 0.0, measure = 0.0, fmax = 0.0;
        for (int c : groups.members[k]) {
            const Mesh& m = s.meshes[c];
            const auto& rule = quad::accurate_rule(s.components[c].dim, 4);
            for (int t = 0; t < static_cast<int>(m.cells.size()); ++t) {
                const double meas = cell_geometry(m, t).measure;
                for (const auto& q : rule) {
                    const Vec3 x = cell_point(m, t, q.bary);
                    const double w = q.weight * meas * s.components[c].density.eval(x);
                    const double fx = f[c].eval(x);
                    integral += w * fx;
                    measure += w;
                    fmax = std::max(fmax, std::abs(fx));
                }
            }
        }
        rep.residual.push_back(integral);
        rep.measure.push_back(measure);
        rep.tolerance.push_back(tol_factor * measure * fmax);
        if (std::abs(integral) > rep.tolerance.back()) {
            rep.pass = false;
            char buf[96];
            std::snprintf(buf, sizeof buf, " group %s: residual %.6g", id_list(groups, k, s).c_str(), integral);
            failing += buf;
        }
    }
    if (!rep.pass && throw_on_failure) throw Error(ErrorKind::IncompatibleRHS, "load has nonzero mean on" + failing);
    return rep;
}

LinearSystem assemble(SpacePtr space, const RelaxedField& Bmu, const std::vector<expr::Expr>& f) {
    const Structure& s = space->structure();
    if (f.size() != s.components.size()) throw std::invalid_argument("assemble: one load expression per component expected");
    const int n = space->size();
    std::vector<Eigen::Triplet<double, std::int32_t>> ta, tm;
    Vector F = Vector::Zero(n);
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Mesh& m = s.meshes[c];
        const auto& rule = quad::assembly_rule(s.components[c].dim);
        const int nq = static_cast<int>(rule.size());
        const auto& dofs = space->dofs().component(static_cast<int>(c));
        ta.reserve(ta.size() + m.cells.size() * 9);
        tm.reserve(tm.size() + m.cells.size() * 9);
        for (int t = 0; t < static_cast<int>(m.cells.size()); ++t) {
            const CellGeometry g = cell_geometry(m, t);
            double K[3][3] = {}, Me[3][3] = {}, Fe[3] = {};
            for (int q = 0; q < nq; ++q) {
                const double w = rule[q].weight * g.measure * space->theta(static_cast<int>(c), t, q);
                const Mat3& B = Bmu.qp[c][t * nq + q];
                const double fx = f[c].eval(cell_point(m, t, rule[q].bary));
                for (int a = 0; a < g.nv; ++a) {
                    const Vec3 bg = B * g.grad[a];
                    Fe[a] += w * fx * rule[q].bary[a];
                    for (int b = 0; b < g.nv; ++b) {
                        K[a][b] += w * bg.dot(g.grad[b]);
                        Me[a][b] += w * rule[q].bary[a] * rule[q].bary[b];
                    }
                }
            }
            for (int a = 0; a < g.nv; ++a) {
                const int da = dofs[m.cells[t][a]];
                F[da] += Fe[a];
                for (int b = 0; b < g.nv; ++b) {
                    const int db = dofs[m.cells[t][b]];
                    ta.emplace_back(da, db, K[a][b]);
                    tm.emplace_back(da, db, Me[a][b]);
                }
            }
        }
    }
    LinearSystem sys;
    sys.space = std::move(space);
    sys.A.resize(n, n);
    sys.M.resize(n, n);
    sys.A.setFromTriplets(ta.begin(), ta.end());
    sys.M.setFromTriplets(tm.begin(), tm.end());
    sys.F = std::move(F);
    sys.groups = kernel_groups(s);
    sys.masks = group_masks(sys.groups, *sys.space);
    for (const Vector& chi : sys.masks) sys.mass_masks.push_back(sys.M * chi);
    return sys;
}

void add_junction_penalty(LinearSystem& sys, double kappa) {
    const Structure& s = sys.space->structure();
    const DofMap& d = sys.space->dofs();
    std::vector<Eigen::Triplet<double, std::int32_t>> tp;
    for (const Junction& J : s.junctions) {
        if (!J.coupled) continue;
        const std::size_t np = J.nodes_i.size();
        for (std::size_t k = 0; k < np; ++k) {
            double w = 1.0;
            if (J.is_segment) {
                const double left = k > 0 ? J.arclength[k] - J.arclength[k - 1] : 0.0;
                const double right = k + 1 < np ? J.arclength[k + 1] - J.arclength[k] : 0.0;
                w = 0.5 * (left + right);
            }
            const int a = d.dof(J.ci, J.nodes_i[k]), b = d.dof(J.cj, J.nodes_j[k]);
            if (a == b) continue;
            tp.emplace_back(a, a, kappa * w);
            tp.emplace_back(b, b, kappa * w);
            tp.emplace_back(a, b, -kappa * w);
            tp.emplace_back(b, a, -kappa * w);
        }
    }
    SparseMatrix P(sys.A.rows(), sys.A.cols());
    P.setFromTriplets(tp.begin(), tp.end());
    sys.A = sys.A + P;
    sys.A.makeCompressed();
}

SolveResult solve_neumann(const LinearSystem& sys, const SolveOptions& opt) {
    const kernels::KernelTable& kt = kernels::active();
    const Structure& s = sys.space->structure();
    const int n = static_cast<int>(sys.F.size());
    const std::size_t un = static_cast<std::size_t>(n);
    const int maxiter = opt.maxiter > 0 ? opt.maxiter : 20 * n;
    const kernels::CsrView A = view_of(sys.A);
    const int d = sys.groups.d();

    std::vector<double> chi_dot_chi(d), mu(d);
    for (int k = 0; k < d; ++k) {
        chi_dot_chi[k] = kt.dot(sys.masks[k].data(), sys.masks[k].data(), un);
        mu[k] = kt.dot(sys.masks[k].data(), sys.mass_masks[k].data(), un);
    }
    auto orth = [&](Vector& v) {
        for (int k = 0; k < d; ++k) kt.axpy(-kt.dot(sys.masks[k].data(), v.data(), un) / chi_dot_chi[k], sys.masks[k].data(), v.data(), un);
    };

    SolveReport rep;
    Vector F = sys.F;
    for (int k = 0; k < d; ++k) {
        const double sum = kt.dot(sys.masks[k].data(), F.data(), un);
        const double abs_sum = sys.masks[k].cwiseProduct(F.cwiseAbs()).sum();
        if (abs_sum > 0.0 && std::abs(sum) > opt.drift_tol * abs_sum)
            throw Error(ErrorKind::IncompatibleRHS, "load has nonzero mean on group " + id_list(sys.groups, k, s));
        const double c = sum / mu[k];
        kt.axpy(-c, sys.mass_masks[k].data(), F.data(), un);
        rep.rhs_shift.push_back(c);
    }

    Vector x = opt.x0 ? *opt.x0 : Vector::Zero(n);
    if (x.size() != n) throw std::invalid_argument("solve_neumann: initial guess has the wrong length");
    const double normF = std::sqrt(kt.dot(F.data(), F.data(), un));
    Vector r(n), z(n), p(n), q(n);
    if (normF == 0.0) {
        x.setZero();
    } else {
        Vector diag = sys.A.diagonal();
        for (int i = 0; i < n; ++i) diag[i] = diag[i] > 0.0 ? 1.0 / diag[i] : 1.0;
        kt.spmv(A, x.data(), r.data());
        kt.xpay(F.data(), -1.0, r.data(), un);  // r = F - A x
        orth(r);
        double rnorm = std::sqrt(kt.dot(r.data(), r.data(), un));
        auto precondition = [&] {
            z = diag.cwiseProduct(r);
            orth(z);
        };
        precondition();
        p = z;
        double rz = kt.dot(r.data(), z.data(), un);
        int it = 0;
        while (rnorm > opt.tol * normF) {
            if (it == maxiter) {
                char buf[128];
                std::snprintf(buf, sizeof buf, "conjugate gradients stopped after %d iterations at relative residual %.3g", it, rnorm / normF);
                throw Error(ErrorKind::NoConvergence, buf);
            }
            kt.spmv(A, p.data(), q.data());
            const double alpha = rz / kt.dot(p.data(), q.data(), un);
            kt.axpy(alpha, p.data(), x.data(), un);
            kt.axpy(-alpha, q.data(), r.data(), un);
            orth(r);
            rnorm = std::sqrt(kt.dot(r.data(), r.data(), un));
            precondition();
            const double rz_new = kt.dot(r.data(), z.data(), un);
            kt.xpay(z.data(), rz_new / rz, p.data(), un);  // p = z + beta p
            rz = rz_new;
            ++it;
        }
        rep.iterations = it;
    }

    for (int k = 0; k < d; ++k) kt.axpy(-kt.dot(x.data(), sys.mass_masks[k].data(), un) / mu[k], sys.masks[k].data(), x.data(), un);
    for (int k = 0; k < d; ++k) rep.group_means.push_back(kt.dot(x.data(), sys.mass_masks[k].data(), un) / mu[k]);

    kt.spmv(A, x.data(), q.data());
    rep.energy = 0.5 * kt.dot(q.data(), x.data(), un) - kt.dot(F.data(), x.data(), un);
    kt.xpay(F.data(), -1.0, q.data(), un);  // q = F - A x
    orth(q);
    rep.relative_residual = normF > 0.0 ? std::sqrt(kt.dot(q.data(), q.data(), un)) / normF : 0.0;
    return {MuFunction(sys.space, std::move(x)), rep};
}

PoincareEstimate poincare_constant(const LinearSystem& sys, int k, unsigned seed, double rel_tol, int maxiter) {
    if (k < 0 || k >= sys.groups.d()) throw std::invalid_argument("poincare_constant: group index out of range");
    const Vector& chi = sys.masks[k];
    std::vector<int> local(chi.size(), -1), global;
    for (int i = 0; i < chi.size(); ++i)
        if (chi[i] != 0.0) {
            local[i] = static_cast<int>(global.size());
            global.push_back(i);
        }
    const int m = static_cast<int>(global.size());
    if (m < 2) throw Error(ErrorKind::EigenFailure, "group has no positive eigenvalue");

    using ColMatrix = Eigen::SparseMatrix<double>;
    std::vector<Eigen::Triplet<double>> ta, tm;
    for (int gi : global) {
        for (SparseMatrix::InnerIterator it(sys.A, gi); it; ++it)
            if (local[it.col()] >= 0) ta.emplace_back(local[gi], local[it.col()], it.value());
        for (SparseMatrix::InnerIterator it(sys.M, gi); it; ++it)
            if (local[it.col()] >= 0) tm.emplace_back(local[gi], local[it.col()], it.value());
    }
    ColMatrix Ak(m, m), Mk(m, m);
    Ak.setFromTriplets(ta.begin(), ta.end());
    Mk.setFromTriplets(tm.begin(), tm.end());

    // The last DOF is pinned. The pinned system is positive definite and, for
    // right-hand sides with zero sum, reproduces a solution of the singular one.
    const ColMatrix pinned = Ak.topLeftCorner(m - 1, m - 1);
    Eigen::SimplicialLDLT<ColMatrix> ldlt(pinned);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "group stiffness factorisation failed");

    const Eigen::VectorXd mones = Mk * Eigen::VectorXd::Ones(m);
    const double mass = mones.sum();
    auto deflate = [&](Eigen::VectorXd& v) { v.array() -= v.dot(mones) / mass; };
    auto mnorm = [&](const Eigen::VectorXd& v) { return std::sqrt(v.dot(Mk * v)); };

    std::mt19937 rng(seed + static_cast<unsigned>(k));
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(m);
    for (int i = 0; i < m; ++i) v[i] = normal(rng);
    deflate(v);
    v /= mnorm(v);

    PoincareEstimate est;
    est.group = k;
    double lambda = 0.0;
    for (int it = 1; it <= maxiter; ++it) {
        const Eigen::VectorXd b = Mk * v;
        Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
        y.head(m - 1) = ldlt.solve(b.head(m - 1));
        deflate(y);
        const double ny = mnorm(y);
        if (!(ny > 0.0) || !std::isfinite(ny)) throw Error(ErrorKind::EigenFailure, "inverse iteration collapsed");
        y /= ny;
        const double next = y.dot(Ak * y);
        v = std::move(y);
        if (!(next > 0.0) || !std::isfinite(next)) throw Error(ErrorKind::EigenFailure, "nonpositive Rayleigh quotient");
        if (it > 1 && std::abs(next - lambda) <= rel_tol * next) {
            est.lambda = next;
            est.constant = 1.0 / next;
            est.iterations = it;
            return est;
        }
        lambda = next;
    }
    throw Error(ErrorKind::EigenFailure, "inverse iteration did not converge");
}

}  // namespace mustructure
