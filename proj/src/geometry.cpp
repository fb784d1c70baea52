// SPDX-License-Identifier: Apache-2.0
#include "mustructure/geometry.hpp"

#include "mustructure/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gmpxx.h>

namespace mustructure {

namespace {

constexpr double kAngleTol = 1e-8;
constexpr double kSpanTol = 1e-8;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

std::string fmt_vec(const Vec3& v) {
    std::ostringstream os;
    os.precision(6);
    os << '(' << v.x() << ", " << v.y() << ", " << v.z() << ')';
    return os.str();
}

double signed_area(const std::vector<Vec2>& poly) {
    double a = 0.0;
    for (std::size_t k = 0; k < poly.size(); ++k) a += cross2(poly[k], poly[(k + 1) % poly.size()]);
    return 0.5 * a;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 e = b - a;
    const double len2 = e.squaredNorm();
    double t = len2 > 0 ? (p - a).dot(e) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + t * e)).norm();
}

double point_segment_distance3(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 e = b - a;
    const double len2 = e.squaredNorm();
    double t = len2 > 0 ? (p - a).dot(e) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + t * e)).norm();
}

// Distance between two closed 3D segments (points allowed).
double segment_segment_distance3(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
    const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
    const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
    double s = 0.0, t = 0.0;
    if (a <= 1e-300 && e <= 1e-300) return r.norm();
    if (a <= 1e-300) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= 1e-300) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            s = denom > 1e-300 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

double polygon_boundary_distance(const std::vector<Vec2>& poly, const Vec2& p) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < poly.size(); ++k) d = std::min(d, point_segment_distance(p, poly[k], poly[(k + 1) % poly.size()]));
    return d;
}

bool polygon_strictly_contains(const std::vector<Vec2>& poly, const Vec2& p) {
    bool inside = false;
    for (std::size_t k = 0, m = poly.size() - 1; k < poly.size(); m = k++) {
        const Vec2& a = poly[k];
        const Vec2& b = poly[m];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (p.x() < x) inside = !inside;
        }
    }
    return inside;
}

bool polygon_contains(const std::vector<Vec2>& poly, const Vec2& p, double tol) {
    if (polygon_boundary_distance(poly, p) <= tol) return true;
    return polygon_strictly_contains(poly, p);
}

// Closed-segment intersection test in the plane.
bool segments_touch(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d, double tol) {
    const double scale = std::max({(b - a).norm(), (d - c).norm(), 1.0});
    const double o1 = cross2(b - a, c - a), o2 = cross2(b - a, d - a);
    const double o3 = cross2(d - c, a - c), o4 = cross2(d - c, b - c);
    const double eps = tol * scale;
    if (((o1 > eps && o2 < -eps) || (o1 < -eps && o2 > eps)) && ((o3 > eps && o4 < -eps) || (o3 < -eps && o4 > eps)))
        return true;
    return point_segment_distance(c, a, b) <= tol || point_segment_distance(d, a, b) <= tol ||
           point_segment_distance(a, c, d) <= tol || point_segment_distance(b, c, d) <= tol;
}

Vec3 plane_normal(const Component& c) { return c.tangents[0].cross(c.tangents[1]).normalized(); }

// Parameter intervals [t0, t1] where the in-plane line P + t d meets the
// polygon of component c. Degenerate intervals are touching points.
std::vector<std::array<double, 2>> line_polygon_intervals(const Component& c, const Vec3& P, const Vec3& d) {
    const Vec2 p = c.to_local(P);
    const Vec2 dl(c.tangents[0].dot(d), c.tangents[1].dot(d));
    const auto& poly = c.polygon;
    std::vector<double> ts;
    for (std::size_t k = 0; k < poly.size(); ++k) {
        const Vec2& a = poly[k];
        const Vec2 e = poly[(k + 1) % poly.size()] - a;
        const double denom = cross2(dl, e);
        if (std::abs(denom) > 1e-14 * e.norm()) {
            const double s = cross2(dl, p - a) / denom;
            if (s >= -1e-12 && s <= 1.0 + 1e-12) ts.push_back((a + s * e - p).dot(dl));
        } else if (std::abs(cross2(dl, a - p)) <= kIncidenceTol) {
            ts.push_back((a - p).dot(dl));
            ts.push_back((a + e - p).dot(dl));
        }
    }
    std::sort(ts.begin(), ts.end());
    std::vector<double> u;
    for (double t : ts)
        if (u.empty() || t - u.back() > kIncidenceTol) u.push_back(t);

    std::vector<std::array<double, 2>> out;
    std::size_t k = 0;
    while (k < u.size()) {
        std::size_t m = k;
        while (m + 1 < u.size() && polygon_contains(poly, p + 0.5 * (u[m] + u[m + 1]) * dl, 0.0)) ++m;
        out.push_back({u[k], u[m]});
        k = m + 1;
    }
    return out;
}

Junction make_junction(const std::vector<Component>& cs, int i, int j, const Vec3& p0, const Vec3& p1, bool segment) {
    Junction J;
    J.ci = i;
    J.cj = j;
    J.is_segment = segment;
    J.p0 = p0;
    J.p1 = segment ? p1 : p0;
    J.local_i0 = cs[i].to_local(J.p0);
    J.local_i1 = cs[i].to_local(J.p1);
    J.local_j0 = cs[j].to_local(J.p0);
    J.local_j1 = cs[j].to_local(J.p1);
    J.coupled = cs[i].dim == cs[j].dim;
    return J;
}

[[noreturn]] void throw_pair(ErrorKind k, const Component& a, const Component& b, const std::string& what) {
    throw Error(k, "components " + std::to_string(a.id) + " and " + std::to_string(b.id) + ": " + what);
}

// Coplanar polygons: positive-area overlap, touching, or disjoint.
enum class Coplanar { Disjoint, Touch, Overlap };

Coplanar coplanar_relation(const std::vector<Vec2>& A, const std::vector<Vec2>& B) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < A.size(); ++k)
        for (std::size_t m = 0; m < B.size(); ++m) {
            const Vec2 &a0 = A[k], &a1 = A[(k + 1) % A.size()], &b0 = B[m], &b1 = B[(m + 1) % B.size()];
            if (segments_touch(a0, a1, b0, b1, kIncidenceTol)) dmin = 0.0;
            dmin = std::min({dmin, point_segment_distance(a0, b0, b1), point_segment_distance(b0, a0, a1)});
        }
    bool any_inside = false;
    for (const Vec2& v : A) any_inside |= polygon_contains(B, v, kIncidenceTol);
    for (const Vec2& v : B) any_inside |= polygon_contains(A, v, kIncidenceTol);
    if (dmin > kIncidenceTol && !any_inside) return Coplanar::Disjoint;

    // Look for a point strictly inside both, on a probe grid over the common box.
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    for (const Vec2& v : A) lo = lo.cwiseMin(v), hi = hi.cwiseMax(v);
    Vec2 lo2 = Vec2::Constant(std::numeric_limits<double>::infinity()), hi2 = -lo2;
    for (const Vec2& v : B) lo2 = lo2.cwiseMin(v), hi2 = hi2.cwiseMax(v);
    lo = lo.cwiseMax(lo2);
    hi = hi.cwiseMin(hi2);
    const int n = 64;
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b) {
            const Vec2 p(lo.x() + (hi.x() - lo.x()) * (a + 0.5) / (n + 1), lo.y() + (hi.y() - lo.y()) * (b + 0.5) / (n + 1));
            if (polygon_strictly_contains(A, p) && polygon_strictly_contains(B, p) &&
                polygon_boundary_distance(A, p) > 1e-9 && polygon_boundary_distance(B, p) > 1e-9)
                return Coplanar::Overlap;
        }
    return Coplanar::Touch;
}

void junctions_for_pair(const std::vector<Component>& cs, int i, int j, std::vector<Junction>& out) {
    const Component& A = cs[i];
    const Component& B = cs[j];

    if (A.dim == 1 && B.dim == 1) {
        const Vec3 d1 = A.tangents[0], d2 = B.tangents[0];
        const Vec3 r = B.origin - A.origin;
        if (d1.cross(d2).norm() < kAngleTol) {
            if (d1.cross(r).norm() > kIncidenceTol) return;
            // Collinear: overlap of the two parameter ranges along d1.
            const double s0 = r.dot(d1) + B.a * d2.dot(d1), s1 = r.dot(d1) + B.b * d2.dot(d1);
            const double lo = std::max(A.a, std::min(s0, s1)), hi = std::min(A.b, std::max(s0, s1));
            if (hi - lo > kIncidenceTol) throw_pair(ErrorKind::DegenerateOverlap, A, B, "collinear segments overlap");
            if (hi - lo >= -kIncidenceTol) throw_pair(ErrorKind::NonTransversal, A, B, "collinear segments touch");
            return;
        }
        // Closest points of the two lines.
        const double b = d1.dot(d2);
        const double c = d1.dot(r), f = d2.dot(r);
        const double denom = 1.0 - b * b;
        const double s = (c - b * f) / denom;
        const double t = (b * c - f) / denom;
        const Vec3 pa = A.origin + s * d1, pb = B.origin + t * d2;
        if ((pa - pb).norm() > kIncidenceTol) return;
        if (s < A.a - kIncidenceTol || s > A.b + kIncidenceTol || t < B.a - kIncidenceTol || t > B.b + kIncidenceTol) return;
        const Vec3 p = 0.5 * (pa + pb);
        out.push_back(make_junction(cs, i, j, p, p, false));
        return;
    }

    if (A.dim != B.dim) {
        const Component& L = A.dim == 1 ? A : B;
        const Component& P = A.dim == 1 ? B : A;
        const Vec3 n = plane_normal(P);
        const Vec3 d = L.tangents[0];
        if (std::abs(n.dot(d)) < kAngleTol) {
            if (std::abs(n.dot(L.origin - P.origin)) > kIncidenceTol) return;
            for (const auto& iv : line_polygon_intervals(P, L.origin, d)) {
                const double lo = std::max(iv[0], L.a), hi = std::min(iv[1], L.b);
                if (hi - lo > kIncidenceTol) throw_pair(ErrorKind::DegenerateOverlap, A, B, "segment lies inside the plate");
                if (hi - lo >= -kIncidenceTol) throw_pair(ErrorKind::NonTransversal, A, B, "segment touches the plate in its plane");
            }
            return;
        }
        const double s = n.dot(P.origin - L.origin) / n.dot(d);
        if (s < L.a - kIncidenceTol || s > L.b + kIncidenceTol) return;
        const Vec3 p = L.origin + s * d;
        if (!P.shape_contains(P.to_local(p), kIncidenceTol)) return;
        out.push_back(make_junction(cs, i, j, p, p, false));
        return;
    }

    // Two plates.
    const Vec3 na = plane_normal(A), nb = plane_normal(B);
    Vec3 d = na.cross(nb);
    if (d.norm() < kAngleTol) {
        if (std::abs(na.dot(B.origin - A.origin)) > kIncidenceTol) return;
        std::vector<Vec2> pb;
        for (const Vec2& v : B.polygon) pb.push_back(A.to_local(B.to_ambient(v)));
        switch (coplanar_relation(A.polygon, pb)) {
            case Coplanar::Disjoint: return;
            case Coplanar::Touch: throw_pair(ErrorKind::NonTransversal, A, B, "coplanar plates touch");
            case Coplanar::Overlap: throw_pair(ErrorKind::DegenerateOverlap, A, B, "coplanar plates overlap");
        }
    }
    d.normalize();
    for (int k = 0; k < 3; ++k) {
        if (std::abs(d[k]) > 1e-12) {
            if (d[k] < 0) d = -d;
            break;
        }
    }
    Mat3 M;
    M.row(0) = na.transpose();
    M.row(1) = nb.transpose();
    M.row(2) = d.transpose();
    const Vec3 rhs(na.dot(A.origin), nb.dot(B.origin), 0.0);
    const Vec3 P0 = M.colPivHouseholderQr().solve(rhs);

    const auto ia = line_polygon_intervals(A, P0, d);
    const auto ib = line_polygon_intervals(B, P0, d);
    for (const auto& u : ia)
        for (const auto& v : ib) {
            const double lo = std::max(u[0], v[0]), hi = std::min(u[1], v[1]);
            if (hi - lo < -kIncidenceTol) continue;
            if (hi - lo > kIncidenceTol) {
                out.push_back(make_junction(cs, i, j, P0 + lo * d, P0 + hi * d, true));
            } else {
                const Vec3 p = P0 + 0.5 * (lo + hi) * d;
                out.push_back(make_junction(cs, i, j, p, p, false));
            }
        }
}

// Boundary vertices of component c in ambient coordinates.
std::vector<Vec3> boundary_points(const Component& c) {
    std::vector<Vec3> pts;
    if (c.dim == 1) {
        if (c.boundary_vertex[0]) pts.push_back(c.to_ambient({c.a, 0}));
        if (c.boundary_vertex[1]) pts.push_back(c.to_ambient({c.b, 0}));
    } else {
        for (std::size_t k = 0; k < c.polygon.size(); ++k)
            if (c.boundary_vertex[k]) pts.push_back(c.to_ambient(c.polygon[k]));
    }
    return pts;
}

void check_transversal(const Structure& s, const Junction& J) {
    const Component& A = s.components[J.ci];
    const Component& B = s.components[J.cj];
    const Component& small = A.dim <= B.dim ? A : B;
    const Component& big = A.dim <= B.dim ? B : A;
    const Mat3 Q = Mat3::Identity() - big.projector();
    double worst = 0.0;
    for (const Vec3& t : small.tangents) worst = std::max(worst, (Q * t).norm());
    if (worst < std::sin(kAngleTol)) throw_pair(ErrorKind::NonTransversal, A, B, "tangent spaces are nested at the junction");
}

void check_boundary(const Structure& s, const Junction& J) {
    for (int side : {J.ci, J.cj}) {
        const Component& c = s.components[side];
        for (const Vec3& b : boundary_points(c)) {
            if (!J.is_segment) {
                if ((b - J.p0).norm() <= kIncidenceTol)
                    throw Error(ErrorKind::BoundaryJunction, "junction point " + fmt_vec(J.p0) + " sits on a declared boundary vertex of component " + std::to_string(c.id));
            } else if (point_segment_distance3(b, J.p0, J.p1) <= kIncidenceTol && (b - J.p0).norm() > kIncidenceTol &&
                       (b - J.p1).norm() > kIncidenceTol) {
                throw Error(ErrorKind::BoundaryJunction, "declared boundary vertex " + fmt_vec(b) + " of component " + std::to_string(c.id) + " lies inside a junction segment");
            }
        }
    }
}

void check_triples(const Structure& s) {
    const auto& js = s.junctions;
    for (std::size_t a = 0; a < js.size(); ++a)
        for (std::size_t b = a + 1; b < js.size(); ++b) {
            const Junction &A = js[a], &B = js[b];
            const bool share = A.ci == B.ci || A.ci == B.cj || A.cj == B.ci || A.cj == B.cj;
            if (!share) continue;
            if (A.ci == B.ci && A.cj == B.cj) continue;
            if (segment_segment_distance3(A.p0, A.p1, B.p0, B.p1) <= kIncidenceTol) {
                std::ostringstream os;
                os << "components " << s.components[A.ci].id << ", " << s.components[A.cj].id << " and "
                   << s.components[A.ci == B.ci || A.cj == B.ci ? B.cj : B.ci].id << " share a point";
                throw Error(ErrorKind::TripleIntersection, os.str());
            }
        }
}

// ---------------------------------------------------------------- meshing

std::vector<double> subdivide(double p, double q, double h) {
    const int n = std::max(1, static_cast<int>(std::ceil((q - p) / h - 1e-9)));
    std::vector<double> out;
    for (int k = 0; k < n; ++k) out.push_back(p + (q - p) * k / n);
    return out;
}

std::vector<double> merged(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || x - out.back() > kIncidenceTol) out.push_back(x);
    return out;
}

std::vector<double> breakpoints_to_nodes(const std::vector<double>& bp, double h) {
    std::vector<double> nodes;
    for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
        const auto part = subdivide(bp[k], bp[k + 1], h);
        nodes.insert(nodes.end(), part.begin(), part.end());
    }
    nodes.push_back(bp.back());
    return nodes;
}

struct LocalJunction {
    bool segment;
    Vec2 a, b;
};

std::vector<LocalJunction> local_junctions(const Structure& s, int ci) {
    std::vector<LocalJunction> out;
    for (const Junction& J : s.junctions) {
        if (J.ci == ci) out.push_back({J.is_segment, J.local_i0, J.local_i1});
        if (J.cj == ci) out.push_back({J.is_segment, J.local_j0, J.local_j1});
    }
    return out;
}

Mesh mesh_interval(const Structure& s, int ci, double h) {
    const Component& c = s.components[ci];
    std::vector<double> bp{c.a, c.b};
    for (const auto& lj : local_junctions(s, ci))
        if (lj.a.x() > c.a + kIncidenceTol && lj.a.x() < c.b - kIncidenceTol) bp.push_back(lj.a.x());
    Mesh m;
    for (double x : breakpoints_to_nodes(merged(bp), h)) {
        m.local.emplace_back(x, 0.0);
        m.nodes.push_back(c.to_ambient({x, 0.0}));
    }
    for (int k = 0; k + 1 < static_cast<int>(m.local.size()); ++k) m.cells.push_back({k, k + 1, -1});
    return m;
}

std::optional<Mesh> mesh_tensor(const Structure& s, int ci, double h) {
    const Component& c = s.components[ci];
    if (c.kind != ShapeKind::Rectangle) return std::nullopt;
    const Vec2 lo = c.polygon[0], hi = c.polygon[2];
    std::vector<double> bu{lo.x(), hi.x()}, bv{lo.y(), hi.y()};
    const auto ljs = local_junctions(s, ci);
    for (const auto& lj : ljs) {
        if (lj.segment && std::abs(lj.a.x() - lj.b.x()) > kIncidenceTol && std::abs(lj.a.y() - lj.b.y()) > kIncidenceTol)
            return std::nullopt;
        for (const Vec2& p : {lj.a, lj.b}) {
            if (p.x() > lo.x() + kIncidenceTol && p.x() < hi.x() - kIncidenceTol) bu.push_back(p.x());
            if (p.y() > lo.y() + kIncidenceTol && p.y() < hi.y() - kIncidenceTol) bv.push_back(p.y());
        }
    }
    bu = merged(bu);
    bv = merged(bv);
    // A breakpoint strictly inside a junction segment would break the shared
    // uniform subdivision of that segment.
    for (const auto& lj : ljs) {
        if (!lj.segment) continue;
        const bool along_u = std::abs(lj.a.y() - lj.b.y()) <= kIncidenceTol;
        const auto& bp = along_u ? bu : bv;
        const double p = along_u ? std::min(lj.a.x(), lj.b.x()) : std::min(lj.a.y(), lj.b.y());
        const double q = along_u ? std::max(lj.a.x(), lj.b.x()) : std::max(lj.a.y(), lj.b.y());
        for (double x : bp)
            if (x > p + kIncidenceTol && x < q - kIncidenceTol) return std::nullopt;
    }
    const auto us = breakpoints_to_nodes(bu, h);
    const auto vs = breakpoints_to_nodes(bv, h);
    const int nu = static_cast<int>(us.size()), nv = static_cast<int>(vs.size());
    Mesh m;
    m.tensor = true;
    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i) {
            m.local.emplace_back(us[i], vs[j]);
            m.nodes.push_back(c.to_ambient(m.local.back()));
        }
    for (int j = 0; j + 1 < nv; ++j)
        for (int i = 0; i + 1 < nu; ++i) {
            // Alternating diagonals: a single diagonal direction biases
            // the coarse-mesh error along that direction.
            const int a = j * nu + i, b = a + 1, cc = a + nu + 1, d = a + nu;
            if ((i + j) % 2 == 0) {
                m.cells.push_back({a, b, cc});
                m.cells.push_back({a, cc, d});
            } else {
                m.cells.push_back({a, b, d});
                m.cells.push_back({b, cc, d});
            }
        }
    return m;
}

// Sign of the in-circle determinant for counter-clockwise (a, b, c): positive
// when d lies strictly inside the circumcircle. Disc boundaries make exact
// cocircularity the common case, so uncertain signs are settled in rationals.
int incircle_sign(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double adx = a.x() - d.x(), ady = a.y() - d.y();
    const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
    const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;
    const double det = alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) + clift * (adx * bdy - ady * bdx);
    const double perm = alift * (std::abs(bdx * cdy) + std::abs(bdy * cdx)) + blift * (std::abs(cdx * ady) + std::abs(cdy * adx)) +
                        clift * (std::abs(adx * bdy) + std::abs(ady * bdx));
    const double bound = 1e-14 * perm;
    if (det > bound) return 1;
    if (det < -bound) return -1;

    const mpq_class ax = mpq_class(a.x()) - d.x(), ay = mpq_class(a.y()) - d.y();
    const mpq_class bx = mpq_class(b.x()) - d.x(), by = mpq_class(b.y()) - d.y();
    const mpq_class cx = mpq_class(c.x()) - d.x(), cy = mpq_class(c.y()) - d.y();
    const mpq_class e = (ax * ax + ay * ay) * (bx * cy - by * cx) + (bx * bx + by * by) * (cx * ay - cy * ax) +
                        (cx * cx + cy * cy) * (ax * by - ay * bx);
    return sgn(e);
}

// Bowyer-Watson Delaunay triangulation; points from index `interior_from` on
// are inserted first. Returns counter-clockwise triangles.
std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& pts, int interior_from) {
    Vec2 lo = pts[0], hi = pts[0];
    for (const Vec2& p : pts) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
    const Vec2 c = 0.5 * (lo + hi);
    const double D = std::max((hi - lo).maxCoeff(), 1e-3);
    std::vector<Vec2> P = pts;
    const int n = static_cast<int>(pts.size());
    P.emplace_back(c.x() - 40 * D, c.y() - 20 * D);
    P.emplace_back(c.x() + 40 * D, c.y() - 20 * D);
    P.emplace_back(c.x(), c.y() + 40 * D);

    std::vector<int> order;
    for (int k = interior_from; k < n; ++k) order.push_back(k);
    for (int k = 0; k < interior_from; ++k) order.push_back(k);

    std::vector<std::array<int, 3>> tris{{n, n + 1, n + 2}}, keep;
    std::vector<std::array<int, 2>> edges;
    for (int k : order) {
        const Vec2& p = P[k];
        edges.clear();
        keep.clear();
        for (const auto& t : tris) {
            if (incircle_sign(P[t[0]], P[t[1]], P[t[2]], p) > 0) {
                for (int e = 0; e < 3; ++e) edges.push_back({t[e], t[(e + 1) % 3]});
            } else {
                keep.push_back(t);
            }
        }
        // Cavity boundary: directed edges whose reverse is absent.
        std::sort(edges.begin(), edges.end());
        for (const auto& e : edges) {
            if (std::binary_search(edges.begin(), edges.end(), std::array<int, 2>{e[1], e[0]})) continue;
            keep.push_back({e[0], e[1], k});
        }
        tris.swap(keep);
    }
    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris)
        if (t[0] < n && t[1] < n && t[2] < n) out.push_back(t);
    return out;
}

Mesh mesh_delaunay(const Structure& s, int ci, double h) {
    const Component& c = s.components[ci];
    const auto& poly = c.polygon;
    const auto ljs = local_junctions(s, ci);

    std::vector<Vec2> pts;
    std::vector<std::array<int, 2>> constraints;
    auto add_point = [&](const Vec2& p) {
        for (std::size_t k = 0; k < pts.size(); ++k)
            if ((pts[k] - p).norm() <= kIncidenceTol) return static_cast<int>(k);
        pts.push_back(p);
        return static_cast<int>(pts.size() - 1);
    };

    // Boundary, split at junction points lying on each edge.
    for (std::size_t k = 0; k < poly.size(); ++k) {
        const Vec2 a = poly[k], e = poly[(k + 1) % poly.size()] - a;
        std::vector<double> ts{0.0, 1.0};
        for (const auto& lj : ljs)
            for (const Vec2& p : {lj.a, lj.b})
                if (point_segment_distance(p, a, a + e) <= kIncidenceTol) ts.push_back(std::clamp((p - a).dot(e) / e.squaredNorm(), 0.0, 1.0));
        ts = merged(ts);
        int prev = -1;
        for (double t : breakpoints_to_nodes(ts, h / e.norm())) {
            const int id = add_point(a + t * e);
            if (prev >= 0) constraints.push_back({prev, id});
            prev = id;
        }
    }
    // Junction segments with a shared uniform subdivision; junction points.
    for (const auto& lj : ljs) {
        if (!lj.segment) {
            add_point(lj.a);
            continue;
        }
        const double L = (lj.b - lj.a).norm();
        const int n = std::max(1, static_cast<int>(std::ceil(L / h - 1e-9)));
        int prev = add_point(lj.a);
        for (int k = 1; k <= n; ++k) {
            const int id = add_point(k == n ? lj.b : Vec2(lj.a + (lj.b - lj.a) * (static_cast<double>(k) / n)));
            constraints.push_back({prev, id});
            prev = id;
        }
    }

    const int n_constrained = static_cast<int>(pts.size());

    // Interior triangular lattice, centred on the bounding box.
    Vec2 lo = poly[0], hi = poly[0];
    for (const Vec2& p : poly) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
    const Vec2 mid = 0.5 * (lo + hi);
    const double dy = h * std::sqrt(3.0) / 2.0;
    const int ny = static_cast<int>(std::ceil((hi.y() - lo.y()) / (2 * dy))) + 1;
    const int nx = static_cast<int>(std::ceil((hi.x() - lo.x()) / (2 * h))) + 1;
    const double keep_off = 0.55 * h;
    for (int j = -ny; j <= ny; ++j)
        for (int i = -nx; i <= nx; ++i) {
            const Vec2 p(mid.x() + (i + ((j & 1) ? 0.5 : 0.0)) * h, mid.y() + j * dy);
            if (!polygon_strictly_contains(poly, p) || polygon_boundary_distance(poly, p) < keep_off) continue;
            bool ok = true;
            for (const auto& lj : ljs) ok = ok && point_segment_distance(p, lj.a, lj.b) >= keep_off;
            if (ok) pts.push_back(p);
        }

    Mesh m;
    m.local = pts;
    for (const Vec2& p : pts) m.nodes.push_back(c.to_ambient(p));
    for (const auto& t : delaunay(pts, n_constrained)) {
        const Vec2 g = (pts[t[0]] + pts[t[1]] + pts[t[2]]) / 3.0;
        if (!polygon_strictly_contains(poly, g)) continue;
        m.cells.push_back(t);
    }

    // Conformity: full area recovered, every constrained subsegment is an edge.
    double area = 0.0;
    for (const auto& t : m.cells) {
        const double a = 0.5 * cross2(pts[t[1]] - pts[t[0]], pts[t[2]] - pts[t[0]]);
        if (a <= 1e-14 * h * h) throw Error(ErrorKind::MeshConformityFailure, "degenerate triangle in component " + std::to_string(c.id));
        area += a;
    }
    if (std::abs(area - c.measure()) > 1e-9 * c.measure())
        throw Error(ErrorKind::MeshConformityFailure, "triangulation of component " + std::to_string(c.id) + " does not cover the polygon");
    const auto edges = m.edges();
    for (auto e : constraints) {
        if (e[0] > e[1]) std::swap(e[0], e[1]);
        if (!std::binary_search(edges.begin(), edges.end(), e))
            throw Error(ErrorKind::MeshConformityFailure, "constrained edge missing in component " + std::to_string(c.id));
    }
    return m;
}

// Nodes of mesh m lying on the junction geometry, sorted by arclength from p0.
std::vector<std::pair<double, int>> nodes_on(const Mesh& m, const Junction& J) {
    std::vector<std::pair<double, int>> out;
    const Vec3 dir = J.direction();
    for (int k = 0; k < static_cast<int>(m.nodes.size()); ++k) {
        const Vec3& x = m.nodes[k];
        const double d = J.is_segment ? point_segment_distance3(x, J.p0, J.p1) : (x - J.p0).norm();
        if (d <= kIncidenceTol) out.emplace_back(J.is_segment ? (x - J.p0).dot(dir) : 0.0, k);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

// ---------------------------------------------------------------- Component

Vec3 Component::to_ambient(const Vec2& local) const {
    Vec3 x = origin + local.x() * tangents[0];
    if (dim == 2) x += local.y() * tangents[1];
    return x;
}

Vec2 Component::to_local(const Vec3& x) const {
    const Vec3 r = x - origin;
    return {r.dot(tangents[0]), dim == 2 ? r.dot(tangents[1]) : 0.0};
}

double Component::normal_distance(const Vec3& x) const { return (x - to_ambient(to_local(x))).norm(); }

bool Component::shape_contains(const Vec2& local, double tol) const {
    if (dim == 1) return local.x() >= a - tol && local.x() <= b + tol;
    return polygon_contains(polygon, local, tol);
}

bool Component::contains(const Vec3& x, double tol) const {
    return normal_distance(x) <= tol && shape_contains(to_local(x), tol);
}

Mat3 Component::projector() const {
    Mat3 P = Mat3::Zero();
    for (const Vec3& t : tangents) P += t * t.transpose();
    return P;
}

double Component::measure() const { return dim == 1 ? b - a : std::abs(signed_area(polygon)); }

Vec3 Junction::direction() const {
    const Vec3 d = p1 - p0;
    const double n = d.norm();
    return n > 0 ? Vec3(d / n) : Vec3::Zero();
}

std::vector<std::array<int, 2>> Mesh::edges() const {
    std::vector<std::array<int, 2>> out;
    const int k = cell_size();
    for (const auto& c : cells)
        for (int a = 0; a < k; ++a)
            for (int b = a + 1; b < k; ++b) out.push_back({std::min(c[a], c[b]), std::max(c[a], c[b])});
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

TangentFrame frame_from_vectors(const Vec3& point, const std::vector<Vec3>& vectors) {
    TangentFrame f;
    f.point = point;
    for (Vec3 v : vectors) {
        for (const Vec3& b : f.basis) v -= v.dot(b) * b;
        for (const Vec3& b : f.basis) v -= v.dot(b) * b;  // second pass for stability
        const double n = v.norm();
        if (n > kSpanTol) f.basis.push_back(v / n);
    }
    for (const Vec3& b : f.basis) f.projector += b * b.transpose();
    f.normal_projector = Mat3::Identity() - f.projector;
    return f;
}

int Structure::index_of(int component_id) const {
    for (std::size_t k = 0; k < components.size(); ++k)
        if (components[k].id == component_id) return static_cast<int>(k);
    throw Error(ErrorKind::ConfigError, "unknown component id " + std::to_string(component_id));
}

double Structure::total_measure() const {
    double m = 0.0;
    for (const Component& c : components) m += c.measure();
    return m;
}

Component make_component(const ComponentSpec& spec, double h) {
    const std::string who = "component " + std::to_string(spec.id);
    if (spec.dim != 1 && spec.dim != 2) throw Error(ErrorKind::MalformedShape, who + ": dim must be 1 or 2");
    if (static_cast<int>(spec.tangents.size()) != spec.dim)
        throw Error(ErrorKind::MalformedShape, who + ": expected " + std::to_string(spec.dim) + " tangent vectors");
    for (int p = 0; p < spec.dim; ++p)
        for (int q = 0; q < spec.dim; ++q)
            if (std::abs(spec.tangents[p].dot(spec.tangents[q]) - (p == q ? 1.0 : 0.0)) > kOrthonormalTol)
                throw Error(ErrorKind::MalformedShape, who + ": tangent vectors are not orthonormal");

    Component c;
    c.id = spec.id;
    c.dim = spec.dim;
    c.origin = spec.origin;
    c.tangents = spec.tangents;
    c.kind = spec.shape.kind;
    const ShapeSpec& sh = spec.shape;
    std::size_t nvert = 2;
    if (spec.dim == 1) {
        if (sh.kind != ShapeKind::Interval) throw Error(ErrorKind::MalformedShape, who + ": a 1D component needs an interval");
        if (!(sh.a < sh.b)) throw Error(ErrorKind::MalformedShape, who + ": interval needs a < b");
        c.a = sh.a;
        c.b = sh.b;
    } else {
        switch (sh.kind) {
            case ShapeKind::Interval: throw Error(ErrorKind::MalformedShape, who + ": a 2D component needs a polygon");
            case ShapeKind::Rectangle:
                if (!(sh.lo.x() < sh.hi.x() && sh.lo.y() < sh.hi.y())) throw Error(ErrorKind::MalformedShape, who + ": empty rectangle");
                c.polygon = {sh.lo, {sh.hi.x(), sh.lo.y()}, sh.hi, {sh.lo.x(), sh.hi.y()}};
                break;
            case ShapeKind::Polygon: c.polygon = sh.vertices; break;
            case ShapeKind::Disc: {
                if (!(sh.radius > 0)) throw Error(ErrorKind::MalformedShape, who + ": disc radius must be positive");
                const int n = std::max(16, 4 * static_cast<int>(std::ceil(2 * std::numbers::pi * sh.radius / (4 * h))));
                for (int k = 0; k < n; ++k) {
                    double cs = std::cos(2 * std::numbers::pi * k / n), sn = std::sin(2 * std::numbers::pi * k / n);
                    if (std::abs(cs) < 1e-15) cs = 0.0;
                    if (std::abs(sn) < 1e-15) sn = 0.0;
                    c.polygon.push_back(sh.center + sh.radius * Vec2(cs, sn));
                }
                break;
            }
        }
        const auto& P = c.polygon;
        if (P.size() < 3) throw Error(ErrorKind::MalformedShape, who + ": polygon needs at least 3 vertices");
        if (std::abs(signed_area(P)) <= 1e-12) throw Error(ErrorKind::MalformedShape, who + ": polygon has zero area");
        const std::size_t n = P.size();
        for (std::size_t k = 0; k < n; ++k) {
            if ((P[(k + 1) % n] - P[k]).norm() <= kIncidenceTol) throw Error(ErrorKind::MalformedShape, who + ": repeated polygon vertex");
            for (std::size_t m = k + 1; m < n; ++m) {
                const bool adjacent = m == k + 1 || (k == 0 && m == n - 1);
                if (adjacent) {
                    // Adjacent edges may only share their common vertex.
                    const std::size_t shared = m == k + 1 ? m : k;
                    const Vec2 e1 = P[(shared + n - 1) % n] - P[shared], e2 = P[(shared + 1) % n] - P[shared];
                    if (std::abs(cross2(e1, e2)) <= 1e-14 * e1.norm() * e2.norm() && e1.dot(e2) > 0)
                        throw Error(ErrorKind::MalformedShape, who + ": polygon folds back on itself");
                    continue;
                }
                if (segments_touch(P[k], P[(k + 1) % n], P[m], P[(m + 1) % n], kIncidenceTol))
                    throw Error(ErrorKind::MalformedShape, who + ": polygon is not simple");
            }
        }
        nvert = n;
    }

    c.boundary_vertex.assign(nvert, spec.boundary.mode == BoundarySpec::Mode::All);
    if (spec.boundary.mode == BoundarySpec::Mode::Listed) {
        for (int v : spec.boundary.vertices) {
            if (v < 0 || v >= static_cast<int>(nvert)) throw Error(ErrorKind::MalformedShape, who + ": boundary vertex index out of range");
            c.boundary_vertex[v] = true;
        }
    }
    if (c.dim == 2 && signed_area(c.polygon) < 0) {
        std::reverse(c.polygon.begin(), c.polygon.end());
        std::reverse(c.boundary_vertex.begin(), c.boundary_vertex.end());
    }

    c.density_text = spec.density_expr;
    c.density = expr::parse(spec.density_expr);
    return c;
}

std::vector<Junction> compute_junctions(const std::vector<Component>& components) {
    for (std::size_t i = 0; i < components.size(); ++i)
        for (std::size_t j = i + 1; j < components.size(); ++j)
            if (components[i].id == components[j].id)
                throw Error(ErrorKind::ConfigError, "duplicate component id " + std::to_string(components[i].id));
    std::vector<Junction> out;
    for (int i = 0; i < static_cast<int>(components.size()); ++i)
        for (int j = i + 1; j < static_cast<int>(components.size()); ++j) junctions_for_pair(components, i, j, out);
    return out;
}

Structure build_meshes(Structure s, double h) {
    if (!(h > 0)) throw Error(ErrorKind::ConfigError, "mesh size must be positive");
    s.h = h;
    s.meshes.clear();
    for (int ci = 0; ci < static_cast<int>(s.components.size()); ++ci) {
        if (s.components[ci].dim == 1) {
            s.meshes.push_back(mesh_interval(s, ci, h));
        } else if (auto t = mesh_tensor(s, ci, h)) {
            s.meshes.push_back(std::move(*t));
        } else {
            s.meshes.push_back(mesh_delaunay(s, ci, h));
        }
    }
    for (Junction& J : s.junctions) {
        const auto a = nodes_on(s.meshes[J.ci], J);
        const auto b = nodes_on(s.meshes[J.cj], J);
        const std::string which = "junction between components " + std::to_string(s.components[J.ci].id) + " and " +
                                  std::to_string(s.components[J.cj].id);
        if (a.empty() || a.size() != b.size()) throw Error(ErrorKind::MeshConformityFailure, which + ": node counts differ");
        J.nodes_i.clear();
        J.nodes_j.clear();
        J.arclength.clear();
        for (std::size_t k = 0; k < a.size(); ++k) {
            if ((s.meshes[J.ci].nodes[a[k].second] - s.meshes[J.cj].nodes[b[k].second]).norm() > kIncidenceTol)
                throw Error(ErrorKind::MeshConformityFailure, which + ": nodes do not coincide");
            J.nodes_i.push_back(a[k].second);
            J.nodes_j.push_back(b[k].second);
            J.arclength.push_back(a[k].first);
        }
        if (J.is_segment) {
            if (std::abs(J.arclength.front()) > kIncidenceTol || std::abs(J.arclength.back() - J.length()) > kIncidenceTol)
                throw Error(ErrorKind::MeshConformityFailure, which + ": endpoints are not mesh nodes");
            for (int side = 0; side < 2; ++side) {
                const auto edges = s.meshes[side == 0 ? J.ci : J.cj].edges();
                const auto& ids = side == 0 ? J.nodes_i : J.nodes_j;
                for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
                    const std::array<int, 2> e{std::min(ids[k], ids[k + 1]), std::max(ids[k], ids[k + 1])};
                    if (!std::binary_search(edges.begin(), edges.end(), e))
                        throw Error(ErrorKind::MeshConformityFailure, which + ": junction is not a union of mesh edges");
                }
            }
        }
    }
    return s;
}

Structure build_structure(const StructureSpec& spec) {
    if (spec.components.empty()) throw Error(ErrorKind::ConfigError, "structure needs at least one component");
    if (!(spec.h > 0)) throw Error(ErrorKind::ConfigError, "mesh size must be positive");
    Structure s;
    for (const ComponentSpec& cs : spec.components) s.components.push_back(make_component(cs, spec.h));
    s.junctions = compute_junctions(s.components);
    for (const Junction& J : s.junctions) check_transversal(s, J);
    check_triples(s);
    for (const Junction& J : s.junctions) check_boundary(s, J);
    s = build_meshes(std::move(s), spec.h);

    for (std::size_t ci = 0; ci < s.components.size(); ++ci) {
        Component& c = s.components[ci];
        const Mesh& m = s.meshes[ci];
        double lo = std::numeric_limits<double>::infinity();
        for (const Vec3& x : m.nodes) lo = std::min(lo, c.density.eval(x));
        const int k = m.cell_size();
        for (const auto& cell : m.cells)
            for (const auto& q : quad::assembly_rule(c.dim)) {
                Vec3 x = Vec3::Zero();
                for (int a = 0; a < k; ++a) x += q.bary[a] * m.nodes[cell[a]];
                lo = std::min(lo, c.density.eval(x));
            }
        c.min_density = lo;
        if (!(lo > 0)) {
            std::ostringstream os;
            os << "component " << c.id << ": density minimum " << lo << " is not positive";
            throw Error(ErrorKind::NonPositiveDensity, os.str());
        }
    }
    return s;
}

TangentFrame tangent_frame_at(const Structure& s, const Vec3& x) {
    std::vector<Vec3> vs;
    for (const Component& c : s.components)
        if (c.contains(x)) vs.insert(vs.end(), c.tangents.begin(), c.tangents.end());
    if (vs.empty()) throw Error(ErrorKind::PointNotOnStructure, "point " + fmt_vec(x) + " is not on the structure");
    return frame_from_vectors(x, vs);
}

// ---------------------------------------------------------------- locator

PointLocator::PointLocator(const Component& c, const Mesh& m) : mesh_(&m), dim_(c.dim) {
    Vec2 lo = m.local[0], hi = m.local[0];
    for (const Vec2& p : m.local) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
    const double span = std::max((hi - lo).maxCoeff(), 1e-12);
    const double ncell = static_cast<double>(m.cells.size());
    cell_ = dim_ == 1 ? span / std::max(1.0, ncell / 2.0) : span / std::max(1.0, std::sqrt(ncell / 2.0));
    lo_ = lo - Vec2::Constant(1e-9 * span);
    nx_ = std::max(1, static_cast<int>(std::ceil((hi.x() - lo_.x()) / cell_)) + 1);
    ny_ = dim_ == 1 ? 1 : std::max(1, static_cast<int>(std::ceil((hi.y() - lo_.y()) / cell_)) + 1);
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    const int k = m.cell_size();
    const double pad = 1e-9 * span;
    for (int t = 0; t < static_cast<int>(m.cells.size()); ++t) {
        Vec2 a = m.local[m.cells[t][0]], b = a;
        for (int v = 1; v < k; ++v) a = a.cwiseMin(m.local[m.cells[t][v]]), b = b.cwiseMax(m.local[m.cells[t][v]]);
        const int i0 = std::clamp(static_cast<int>((a.x() - pad - lo_.x()) / cell_), 0, nx_ - 1);
        const int i1 = std::clamp(static_cast<int>((b.x() + pad - lo_.x()) / cell_), 0, nx_ - 1);
        const int j0 = dim_ == 1 ? 0 : std::clamp(static_cast<int>((a.y() - pad - lo_.y()) / cell_), 0, ny_ - 1);
        const int j1 = dim_ == 1 ? 0 : std::clamp(static_cast<int>((b.y() + pad - lo_.y()) / cell_), 0, ny_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(t);
    }
}

std::optional<PointLocator::Hit> PointLocator::locate(const Vec2& p, double tol) const {
    const int i = static_cast<int>(std::floor((p.x() - lo_.x()) / cell_));
    const int j = dim_ == 1 ? 0 : static_cast<int>(std::floor((p.y() - lo_.y()) / cell_));
    std::optional<Hit> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int jj = std::max(0, j - 1); jj <= std::min(ny_ - 1, j + 1); ++jj)
        for (int ii = std::max(0, i - 1); ii <= std::min(nx_ - 1, i + 1); ++ii)
            for (int t : buckets_[static_cast<std::size_t>(jj) * nx_ + ii]) {
                const auto& c = mesh_->cells[t];
                Hit h;
                h.cell = t;
                double score;
                double len;
                if (dim_ == 1) {
                    const double a = mesh_->local[c[0]].x(), b = mesh_->local[c[1]].x();
                    len = b - a;
                    const double s = (p.x() - a) / len;
                    h.bary = {1.0 - s, s, 0.0};
                    score = std::min(1.0 - s, s);
                } else {
                    const Vec2 A = mesh_->local[c[0]], B = mesh_->local[c[1]], C = mesh_->local[c[2]];
                    const double det = cross2(B - A, C - A);
                    const double l1 = cross2(p - A, C - A) / det;
                    const double l2 = cross2(B - A, p - A) / det;
                    h.bary = {1.0 - l1 - l2, l1, l2};
                    score = std::min({h.bary[0], h.bary[1], h.bary[2]});
                    len = std::sqrt(std::abs(det));
                }
                if (score >= -tol / len && score > best_score) {
                    best_score = score;
                    best = h;
                }
            }
    return best;
}

}  // namespace mustructure
