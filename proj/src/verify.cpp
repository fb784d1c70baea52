// SPDX-License-Identifier: Apache-2.0
#include "mustructure/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mustructure {

namespace {

// Signed distance-like quantity: distance to the boundary for interior
// points, negative outside.
double boundary_distance(const Component& c, const Vec2& p) {
    if (c.dim == 1) return std::min(p.x() - c.a, c.b - p.x());
    if (!c.shape_contains(p, 1e-12)) return -1.0;
    double d = std::numeric_limits<double>::infinity();
    const std::size_t n = c.polygon.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 a = c.polygon[k], b = c.polygon[(k + 1) % n];
        const Vec2 e = b - a;
        const double t = std::clamp((p - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
        d = std::min(d, (a + t * e - p).norm());
    }
    return d;
}

struct Roles {
    bool shared = false;
    int s1 = 0, s2 = 1;  // shifted component and the one receiving the trace
};

const Junction& junction_of(const Structure& s, int j) {
    if (j < 0 || j >= static_cast<int>(s.junctions.size()))
        throw Error(ErrorKind::UnsupportedGeometry, "structure has no junction " + std::to_string(j));
    return s.junctions[j];
}

Roles roles_for(const Structure& s, const Junction& J, const Vec3& axis) {
    if (s.components.size() != 2)
        throw Error(ErrorKind::UnsupportedGeometry, "generalized translation needs exactly two components");
    if (!J.coupled) throw Error(ErrorKind::UnsupportedGeometry, "generalized translation needs a coupled junction");
    if (std::abs(axis.norm() - 1.0) > 1e-12) throw Error(ErrorKind::UnsupportedGeometry, "translation axis must be a unit vector");
    const bool in_i = (s.components[J.ci].projector() * axis - axis).norm() <= 1e-12;
    const bool in_j = (s.components[J.cj].projector() * axis - axis).norm() <= 1e-12;
    if (!in_i && !in_j) throw Error(ErrorKind::UnsupportedGeometry, "translation axis is tangent to neither component");
    Roles r;
    r.shared = in_i && in_j;
    r.s1 = in_i ? J.ci : J.cj;
    r.s2 = in_i ? J.cj : J.ci;
    return r;
}

// Closest point of the junction set to x, and whether x projects inside it.
std::pair<Vec3, bool> junction_foot(const Junction& J, const Vec3& x) {
    if (!J.is_segment) return {J.p0, true};
    const Vec3 d = J.direction();
    const double t = (x - J.p0).dot(d);
    const bool inside = t >= -kIncidenceTol && t <= J.length() + kIncidenceTol;
    return {J.p0 + std::clamp(t, 0.0, J.length()) * d, inside};
}

double value_at(const MuFunction& u, int comp, const Vec3& x) {
    const auto v = u.eval_local(comp, u.structure().components[comp].to_local(x));
    if (!v) throw Error(ErrorKind::MarginViolation, "translated point leaves component " + std::to_string(u.structure().components[comp].id));
    return *v;
}

}  // namespace

double trace_gap(const MuFunction& u, int junction, GapNorm norm) {
    const Structure& s = u.structure();
    const Junction& J = junction_of(s, junction);
    if (!J.coupled) throw Error(ErrorKind::UncoupledJunction, "junction " + std::to_string(junction) + " is not coupled");
    const std::size_t n = J.nodes_i.size();
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = u.at(J.ci, J.nodes_i[k]) - u.at(J.cj, J.nodes_j[k]);
        if (norm == GapNorm::Max || !J.is_segment) {
            acc = std::max(acc, std::abs(d));
            continue;
        }
        const double left = k > 0 ? J.arclength[k] - J.arclength[k - 1] : 0.0;
        const double right = k + 1 < n ? J.arclength[k + 1] - J.arclength[k] : 0.0;
        acc += 0.5 * (left + right) * d * d;
    }
    return norm == GapNorm::Max || !J.is_segment ? acc : std::sqrt(acc);
}

SolveResult penalty_solve(std::shared_ptr<const Structure> s, const MatrixField& B, const std::vector<expr::Expr>& f, double kappa,
                          const SolveOptions& opt) {
    auto space = make_space(std::move(s), true);
    LinearSystem sys = assemble(space, relax(B, *space), f);
    add_junction_penalty(sys, kappa);
    return solve_neumann(sys, opt);
}

std::vector<std::vector<char>> translation_window(const Structure& s, const TranslationSpec& spec) {
    const Junction& J = junction_of(s, spec.junction);
    const Roles r = roles_for(s, J, spec.axis);
    std::vector<std::vector<char>> mask(s.components.size());
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Component& comp = s.components[c];
        const Mesh& m = s.meshes[c];
        mask[c].assign(m.nodes.size(), 0);
        for (std::size_t n = 0; n < m.nodes.size(); ++n) {
            bool ok = boundary_distance(comp, m.local[n]) >= spec.margin - 1e-12;
            if (ok && !r.shared && static_cast<int>(c) == r.s2) {
                const auto [foot, inside] = junction_foot(J, m.nodes[n]);
                const Component& c1 = s.components[r.s1];
                ok = inside && boundary_distance(c1, c1.to_local(foot)) >= spec.margin - 1e-12;
            }
            mask[c][n] = ok ? 1 : 0;
        }
    }
    return mask;
}

MuFunction generalized_translate(const MuFunction& u, const TranslationSpec& spec) {
    const Structure& s = u.structure();
    if (std::abs(spec.h) > spec.margin)
        throw Error(ErrorKind::MarginViolation, "step " + std::to_string(spec.h) + " exceeds the margin " + std::to_string(spec.margin));
    const Junction& J = junction_of(s, spec.junction);
    const Roles r = roles_for(s, J, spec.axis);
    const auto mask = translation_window(s, spec);
    const DofMap& dofs = u.space().dofs();

    std::vector<char> active(u.space().size(), 1);
    for (std::size_t c = 0; c < s.components.size(); ++c)
        for (std::size_t n = 0; n < mask[c].size(); ++n)
            if (!mask[c][n]) active[dofs.dof(static_cast<int>(c), static_cast<int>(n))] = 0;

    Vector out = u.values();
    const Vec3 shift = spec.h * spec.axis;
    // The receiving component is written first so that shared junction DOFs
    // end with the plain shift of S1 (both formulas agree there).
    for (int c : {r.s2, r.s1}) {
        const Mesh& m = s.meshes[c];
        for (std::size_t n = 0; n < m.nodes.size(); ++n) {
            const int d = dofs.dof(c, static_cast<int>(n));
            if (!active[d]) continue;
            const Vec3& x = m.nodes[n];
            if (r.shared || c == r.s1) {
                out[d] = value_at(u, c, x + shift);
            } else {
                const Vec3 foot = junction_foot(J, x).first;
                out[d] = u.at(c, static_cast<int>(n)) + (value_at(u, r.s1, foot + shift) - value_at(u, r.s1, foot));
            }
        }
    }
    return MuFunction(u.space_ptr(), std::move(out));
}

MuFunction difference_quotient(const MuFunction& u, const TranslationSpec& spec) {
    if (spec.h == 0.0) throw Error(ErrorKind::ZeroStep, "difference quotient with zero step");
    MuFunction d = generalized_translate(u, spec);
    d -= u;
    d *= 1.0 / spec.h;
    return d;
}

WindowNorms window_norms(const MuFunction& v, const std::vector<std::vector<char>>& window) {
    const Structure& s = v.structure();
    double l2 = 0.0, g2 = 0.0;
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Mesh& m = s.meshes[c];
        const auto& rule = quad::assembly_rule(s.components[c].dim);
        const int nq = static_cast<int>(rule.size());
        for (int t = 0; t < static_cast<int>(m.cells.size()); ++t) {
            const CellGeometry g = cell_geometry(m, t);
            bool inside = true;
            for (int a = 0; a < g.nv; ++a) inside = inside && window[c][m.cells[t][a]];
            if (!inside) continue;
            Vec3 grad = Vec3::Zero();
            for (int a = 0; a < g.nv; ++a) grad += v.at(static_cast<int>(c), m.cells[t][a]) * g.grad[a];
            for (int q = 0; q < nq; ++q) {
                const double w = rule[q].weight * g.measure * v.space().theta(static_cast<int>(c), t, q);
                double val = 0.0;
                for (int a = 0; a < g.nv; ++a) val += rule[q].bary[a] * v.at(static_cast<int>(c), m.cells[t][a]);
                l2 += w * val * val;
                g2 += w * grad.squaredNorm();
            }
        }
    }
    return {std::sqrt(l2), std::sqrt(g2)};
}

DqScan dq_uniform_bound_scan(const MuFunction& u, const Vec3& axis, const std::vector<double>& hs, double margin, int junction) {
    if (hs.empty()) throw Error(ErrorKind::ZeroStep, "empty step list");
    DqScan scan;
    TranslationSpec spec{axis, 0.0, margin, junction};
    const auto window = translation_window(u.structure(), spec);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, scale = 0.0;
    for (double h : hs) {
        spec.h = h;
        const WindowNorms n = window_norms(difference_quotient(u, spec), window);
        scan.rows.push_back({h, n.l2, n.grad});
        lo = std::min(lo, n.grad);
        hi = std::max(hi, n.grad);
        scale = std::max(scale, n.l2);
    }
    // Gradients at rounding level (affine u) are bounded by zero uniformly.
    if (hi <= 1e-12 * std::max(1.0, scale))
        scan.ratio = 1.0;
    else
        scan.ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    scan.pass = scan.ratio <= 1.25;
    return scan;
}

double dq_limit_oracle(const Structure& s, const std::vector<expr::Expr>& exact, const TranslationSpec& spec) {
    const Junction& J = junction_of(s, spec.junction);
    const Roles r = roles_for(s, J, spec.axis);
    const auto window = translation_window(s, spec);
    // grad of the axis derivative, one symbolic vector per component.
    std::vector<std::array<expr::Expr, 3>> hess_row;
    for (const expr::Expr& u : exact) {
        const auto g = expr::gradient(u);
        const auto k = [&](int i) { return expr::Expr::constant(spec.axis[i]); };
        hess_row.push_back(expr::gradient(k(0) * g[0] + k(1) * g[1] + k(2) * g[2]));
    }
    auto eval = [](const std::array<expr::Expr, 3>& v, const Vec3& x) { return Vec3(v[0].eval(x), v[1].eval(x), v[2].eval(x)); };
    double acc = 0.0;
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Component& comp = s.components[c];
        const Mesh& m = s.meshes[c];
        const Mat3 P = comp.projector();
        const bool receiving = !r.shared && static_cast<int>(c) == r.s2;
        if (receiving && !J.is_segment) continue;  // constant extension of a point value
        const auto& rule = quad::accurate_rule(comp.dim, 4);
        for (int t = 0; t < static_cast<int>(m.cells.size()); ++t) {
            const CellGeometry g = cell_geometry(m, t);
            bool inside = true;
            for (int a = 0; a < g.nv; ++a) inside = inside && window[c][m.cells[t][a]];
            if (!inside) continue;
            for (const auto& q : rule) {
                const Vec3 x = cell_point(m, t, q.bary);
                Vec3 G;
                if (receiving) {
                    const Vec3 d = J.direction();
                    G = d * d.dot(eval(hess_row[r.s1], junction_foot(J, x).first));
                } else {
                    G = P * eval(hess_row[c], x);
                }
                acc += q.weight * g.measure * comp.density.eval(x) * G.squaredNorm();
            }
        }
    }
    return std::sqrt(acc);
}

namespace {

struct Window {
    Vec2 lo{0, 0}, hi{0, 0};
};

Window component_window(const Component& c, double margin) {
    Window w;
    if (c.dim == 1) {
        w.lo = Vec2(c.a + margin, 0);
        w.hi = Vec2(c.b - margin, 0);
        if (!(w.hi.x() > w.lo.x())) throw Error(ErrorKind::EmptyWindow, "window of component " + std::to_string(c.id) + " is empty");
        return w;
    }
    if (c.kind != ShapeKind::Rectangle)
        throw Error(ErrorKind::UnsupportedGeometry, "second-difference windows need rectangles or intervals");
    Vec2 lo = c.polygon[0], hi = c.polygon[0];
    for (const Vec2& p : c.polygon) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
    w.lo = lo + Vec2::Constant(margin);
    w.hi = hi - Vec2::Constant(margin);
    if (!(w.hi.x() > w.lo.x() && w.hi.y() > w.lo.y()))
        throw Error(ErrorKind::EmptyWindow, "window of component " + std::to_string(c.id) + " is empty");
    return w;
}

}  // namespace

H2Indicator h2_indicator(const MuFunction& u, int component_id, double margin, double delta, int n) {
    const Structure& s = u.structure();
    const int c = s.index_of(component_id);
    const Component& comp = s.components[c];
    if (!(delta > 0.0)) throw Error(ErrorKind::ZeroStep, "second-difference stencil must be positive");
    if (delta > margin) throw Error(ErrorKind::MarginViolation, "stencil exceeds the window margin");
    const Window w = component_window(comp, margin);
    auto at = [&](const Vec2& q) {
        const auto v = u.eval_local(c, q);
        if (!v) throw Error(ErrorKind::MarginViolation, "probe leaves component " + std::to_string(component_id));
        return *v;
    };
    const int dim = comp.dim;
    // Probe grid: n intervals per local direction, trapezoid weights. With
    // n = 0 the spacing follows the stencil, so probes land on the lattice
    // generated by the stencil from the window corner.
    auto intervals = [&](double len) { return n > 0 ? n : std::max(1, static_cast<int>(std::lround(len / delta))); };
    const int nx = intervals(w.hi.x() - w.lo.x());
    const int ny = dim == 1 ? 0 : intervals(w.hi.y() - w.lo.y());
    const Vec2 step((w.hi.x() - w.lo.x()) / nx, dim == 1 ? 0.0 : (w.hi.y() - w.lo.y()) / ny);
    auto trap = [](int k, int m) { return (k == 0 || k == m) ? 0.5 : 1.0; };
    const Vec2 e1(delta, 0), e2(0, delta);
    const double d2 = delta * delta;

    H2Indicator out;
    std::vector<double> sq(dim, 0.0);
    double mixed = 0.0, asym = 0.0;
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            const Vec2 q(w.lo.x() + i * step.x(), dim == 1 ? 0.0 : w.lo.y() + j * step.y());
            const double cell = dim == 1 ? step.x() * trap(i, nx) : step.x() * step.y() * trap(i, nx) * trap(j, ny);
            const double wt = cell * comp.density.eval(comp.to_ambient(q));
            const double u0 = at(q);
            const double s11 = (at(q + e1) - 2.0 * u0 + at(q - e1)) / d2;
            sq[0] += wt * s11 * s11;
            if (dim == 2) {
                const double s22 = (at(q + e2) - 2.0 * u0 + at(q - e2)) / d2;
                sq[1] += wt * s22 * s22;
                const double pp = at(q + e1 + e2), pm = at(q + e1 - e2), mp = at(q - e1 + e2), mm = at(q - e1 - e2);
                const double dxy = ((pp - mp) / (2 * delta) - (pm - mm) / (2 * delta)) / (2 * delta);  // d/dy of d/dx
                const double dyx = ((pp - pm) / (2 * delta) - (mp - mm) / (2 * delta)) / (2 * delta);  // d/dx of d/dy
                mixed += wt * dxy * dxy;
                asym += wt * (dxy - dyx) * (dxy - dyx);
            }
            ++out.probes;
        }
    }
    double total = 0.0;
    for (double v : sq) {
        out.second.push_back(std::sqrt(v));
        total += v;
    }
    out.mixed = std::sqrt(mixed);
    out.mixed_asymmetry = std::sqrt(asym);
    out.total = std::sqrt(total + 2.0 * mixed);
    return out;
}

double hessian_norm_oracle(const Structure& s, int component_id, const expr::Expr& u, double margin, int n) {
    const Component& comp = s.components[s.index_of(component_id)];
    const Window w = component_window(comp, margin);
    const auto grad = expr::gradient(u);
    std::array<std::array<expr::Expr, 3>, 3> H;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) H[a][b] = expr::differentiate(grad[a], static_cast<expr::Var>(b));
    const auto& g1 = quad::accurate_rule(1, 4);
    const int dim = comp.dim;
    const Vec2 step((w.hi.x() - w.lo.x()) / n, dim == 1 ? 0.0 : (w.hi.y() - w.lo.y()) / n);
    double acc = 0.0;
    auto point = [&](int i, int k) { return (i + g1[k].bary[1]) ; };
    for (int j = 0; j < (dim == 1 ? 1 : n); ++j)
        for (int kj = 0; kj < (dim == 1 ? 1 : static_cast<int>(g1.size())); ++kj)
            for (int i = 0; i < n; ++i)
                for (std::size_t ki = 0; ki < g1.size(); ++ki) {
                    const Vec2 q(w.lo.x() + point(i, static_cast<int>(ki)) * step.x(),
                                 dim == 1 ? 0.0 : w.lo.y() + point(j, kj) * step.y());
                    const double wt = g1[ki].weight * step.x() * (dim == 1 ? 1.0 : g1[kj].weight * step.y());
                    const Vec3 x = comp.to_ambient(q);
                    Mat3 Hx;
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b) Hx(a, b) = H[a][b].eval(x);
                    double f2 = 0.0;
                    for (const Vec3& tk : comp.tangents)
                        for (const Vec3& tl : comp.tangents) f2 += std::pow(tk.dot(Hx * tl), 2);
                    acc += wt * comp.density.eval(x) * f2;
                }
    return std::sqrt(acc);
}

ContinuityReport continuity_modulus(const MuFunction& u) {
    const Structure& s = u.structure();
    ContinuityReport rep;
    rep.h = s.h;
    for (const Junction& J : s.junctions) {
        double& target = J.coupled ? rep.coupled_jump : rep.uncoupled_jump;
        for (std::size_t k = 0; k < J.nodes_i.size(); ++k)
            target = std::max(target, std::abs(u.at(J.ci, J.nodes_i[k]) - u.at(J.cj, J.nodes_j[k])));
    }
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        double m = 0.0;
        for (const auto& e : s.meshes[c].edges())
            m = std::max(m, std::abs(u.at(static_cast<int>(c), e[0]) - u.at(static_cast<int>(c), e[1])));
        rep.modulus.push_back(m);
    }
    return rep;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) mx += x[k] / n, my += y[k] / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    LinearFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double res = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) res += std::pow(y[k] - f.intercept - f.slope * x[k], 2);
    f.r2 = syy > 0.0 ? 1.0 - res / syy : (res == 0.0 ? 1.0 : 0.0);
    return f;
}

double second_order_residual(const expr::Expr& phi, const Structure& s, int samples, unsigned seed) {
    const auto grad = expr::gradient(phi);
    // Route one differentiates the gradient components; route two builds the
    // Hessian in the opposite order of differentiation.
    std::array<std::array<expr::Expr, 3>, 3> rows, hess;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            rows[a][b] = expr::differentiate(grad[a], static_cast<expr::Var>(b));
            hess[a][b] = expr::differentiate(expr::differentiate(phi, static_cast<expr::Var>(b)), static_cast<expr::Var>(a));
        }
    double worst = 0.0;
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Component& comp = s.components[c];
        const Mat3 P = comp.projector();
        const Mat3 Q = Mat3::Identity() - P;
        std::mt19937 rng(seed + static_cast<unsigned>(c));
        Vec2 lo, hi;
        if (comp.dim == 1) {
            lo = Vec2(comp.a, 0);
            hi = Vec2(comp.b, 0);
        } else {
            lo = hi = comp.polygon[0];
            for (const Vec2& p : comp.polygon) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
        }
        std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
        int taken = 0;
        while (taken < samples) {
            const Vec2 q(ux(rng), comp.dim == 1 ? 0.0 : uy(rng));
            if (boundary_distance(comp, q) <= 1e-6) continue;
            ++taken;
            const Vec3 x = comp.to_ambient(q);
            const Vec3 g(grad[0].eval(x), grad[1].eval(x), grad[2].eval(x));
            const Vec3 b = Q * g;
            worst = std::max(worst, (P * g + b - g).cwiseAbs().maxCoeff());
            Mat3 D, H;
            for (int a = 0; a < 3; ++a)
                for (int k = 0; k < 3; ++k) {
                    D(a, k) = rows[a][k].eval(x);
                    H(a, k) = hess[a][k].eval(x);
                }
            // Row a of the tangential derivative of grad phi is P applied to
            // the ambient gradient of its a-th component.
            const Mat3 lhs = (P * D.transpose()).transpose();
            const Mat3 rhs = H * P.transpose();
            worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

}  // namespace mustructure
