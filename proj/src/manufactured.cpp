// SPDX-License-Identifier: Apache-2.0
#include "mustructure/manufactured.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mustructure {

using expr::Expr;

namespace {

constexpr double kConsistencyTol = 1e-10;
constexpr int kSamples = 16;

Vec3 eval3(const std::array<Expr, 3>& v, const Vec3& x) { return {v[0].eval(x), v[1].eval(x), v[2].eval(x)}; }

std::string where(const Vec3& x) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "(%.6g, %.6g, %.6g)", x.x(), x.y(), x.z());
    return buf;
}

// Outward conormal of component c at a boundary point given in local
// coordinates, or nullopt when the point is not on the boundary.
std::optional<Vec3> outward_conormal(const Component& c, const Vec2& local) {
    if (c.dim == 1) {
        if (std::abs(local.x() - c.b) <= kIncidenceTol) return c.tangents[0];
        if (std::abs(local.x() - c.a) <= kIncidenceTol) return Vec3(-c.tangents[0]);
        return std::nullopt;
    }
    const std::size_t n = c.polygon.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 a = c.polygon[k], b = c.polygon[(k + 1) % n];
        const Vec2 d = b - a;
        const double len = d.norm();
        const double t = std::clamp((local - a).dot(d) / (len * len), 0.0, 1.0);
        if ((a + t * d - local).norm() <= kIncidenceTol) {
            const Vec2 nu(d.y() / len, -d.x() / len);
            return Vec3(nu.x() * c.tangents[0] + nu.y() * c.tangents[1]);
        }
    }
    return std::nullopt;
}

bool on_junction(const Structure& s, int comp, const Vec3& x) {
    for (const Junction& J : s.junctions) {
        if (J.ci != comp && J.cj != comp) continue;
        const Vec3 d = J.p1 - J.p0;
        const double L2 = d.squaredNorm();
        const double t = L2 > 0.0 ? std::clamp((x - J.p0).dot(d) / L2, 0.0, 1.0) : 0.0;
        if ((J.p0 + t * d - x).norm() <= 1e-9) return true;
    }
    return false;
}

}  // namespace

std::array<Expr, 3> flux_expr(const MatrixField& B, const Component& c, const Expr& u) {
    const Mat3 P = c.projector();
    const auto grad = expr::gradient(u);
    std::array<Expr, 3> g;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (P(a, b) != 0.0) g[a] = g[a] + Expr::constant(P(a, b)) * grad[b];
    const auto R = relaxed_expr(B, c);
    std::array<Expr, 3> V;
    for (int a = 0; a < 3; ++a) {
        Expr acc;
        for (int b = 0; b < 3; ++b) acc = acc + R[3 * a + b] * g[b];
        V[a] = c.density * acc;
    }
    return V;
}

Expr tangential_divergence(const Component& c, const std::array<Expr, 3>& V) {
    const Mat3 P = c.projector();
    Expr div;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (P(a, b) != 0.0) div = div + Expr::constant(P(a, b)) * expr::differentiate(V[a], static_cast<expr::Var>(b));
    return div;
}

Manufactured derive_manufactured(const Structure& s, const MatrixField& B, const std::vector<Expr>& exact) {
    if (exact.size() != s.components.size())
        throw Error(ErrorKind::ConfigError, "manufactured solution needs one expression per component");
    Manufactured out;
    out.exact = exact;
    std::vector<std::array<Expr, 3>> flux;
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Component& comp = s.components[c];
        flux.push_back(flux_expr(B, comp, exact[c]));
        out.rhs.push_back(-tangential_divergence(comp, flux.back()) / comp.density);
    }

    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InconsistentManufactured, msg); };

    for (const Junction& J : s.junctions) {
        if (!J.coupled) continue;
        const int ns = J.is_segment ? kSamples : 0;
        for (int k = 0; k <= ns; ++k) {
            const double t = ns ? static_cast<double>(k) / ns : 0.0;
            const Vec3 x = J.p0 + t * (J.p1 - J.p0);
            const double ui = exact[J.ci].eval(x), uj = exact[J.cj].eval(x);
            if (std::abs(ui - uj) > kConsistencyTol * std::max({1.0, std::abs(ui), std::abs(uj)}))
                fail("exact solution is discontinuous across the junction of components " + std::to_string(s.components[J.ci].id) +
                     " and " + std::to_string(s.components[J.cj].id) + " at " + where(x));
            // Flux balance over the components for which the junction is a
            // boundary piece. Point junctions between plates carry no flux.
            if (!J.is_segment && s.components[J.ci].dim == 2) continue;
            double net = 0.0, scale = 1.0;
            for (int side : {J.ci, J.cj}) {
                const Vec2 local = side == J.ci ? Vec2(J.local_i0 + t * (J.local_i1 - J.local_i0)) : Vec2(J.local_j0 + t * (J.local_j1 - J.local_j0));
                if (J.is_segment && (k == 0 || k == ns)) continue;  // segment ends may be polygon corners
                const auto nu = outward_conormal(s.components[side], local);
                if (!nu) continue;
                const Vec3 q = eval3(flux[side], x);
                net += q.dot(*nu);
                scale = std::max(scale, q.norm());
            }
            if (std::abs(net) > kConsistencyTol * scale)
                fail("net conormal flux at the junction of components " + std::to_string(s.components[J.ci].id) + " and " +
                     std::to_string(s.components[J.cj].id) + " is nonzero at " + where(x));
        }
    }

    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Component& comp = s.components[c];
        auto check = [&](const Vec2& local, const Vec3& nu) {
            const Vec3 x = comp.to_ambient(local);
            if (on_junction(s, static_cast<int>(c), x)) return;
            const Vec3 q = eval3(flux[c], x);
            if (std::abs(q.dot(nu)) > kConsistencyTol * std::max(1.0, q.norm()))
                fail("exact solution violates the Neumann condition of component " + std::to_string(comp.id) + " at " + where(x));
        };
        if (comp.dim == 1) {
            check(Vec2(comp.a, 0), -comp.tangents[0]);
            check(Vec2(comp.b, 0), comp.tangents[0]);
            continue;
        }
        const std::size_t n = comp.polygon.size();
        for (std::size_t k = 0; k < n; ++k) {
            const Vec2 a = comp.polygon[k], b = comp.polygon[(k + 1) % n];
            const Vec2 d = b - a;
            const Vec2 nu2 = Vec2(d.y(), -d.x()).normalized();
            const Vec3 nu = nu2.x() * comp.tangents[0] + nu2.y() * comp.tangents[1];
            for (int j = 0; j < kSamples; ++j) check(a + (j + 0.5) / kSamples * d, nu);
        }
    }
    return out;
}

}  // namespace mustructure
