// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mustructure/geometry.hpp"

namespace fixtures {

using mustructure::ComponentSpec;
using mustructure::ShapeKind;
using mustructure::StructureSpec;
using mustructure::Vec2;
using mustructure::Vec3;

inline const Vec3 ex{1, 0, 0}, ey{0, 1, 0}, ez{0, 0, 1};

inline ComponentSpec segment(int id, const Vec3& origin, const Vec3& t, double a, double b, const char* density = "1") {
    ComponentSpec c;
    c.id = id;
    c.dim = 1;
    c.origin = origin;
    c.tangents = {t};
    c.shape.kind = ShapeKind::Interval;
    c.shape.a = a;
    c.shape.b = b;
    c.density_expr = density;
    return c;
}

inline ComponentSpec rectangle(int id, const Vec3& origin, const Vec3& t1, const Vec3& t2, Vec2 lo, Vec2 hi,
                               const char* density = "1") {
    ComponentSpec c;
    c.id = id;
    c.dim = 2;
    c.origin = origin;
    c.tangents = {t1, t2};
    c.shape.kind = ShapeKind::Rectangle;
    c.shape.lo = lo;
    c.shape.hi = hi;
    c.density_expr = density;
    return c;
}

inline ComponentSpec disc(int id, const Vec3& t1, const Vec3& t2, double r = 1.0) {
    ComponentSpec c;
    c.id = id;
    c.dim = 2;
    c.origin = Vec3::Zero();
    c.tangents = {t1, t2};
    c.shape.kind = ShapeKind::Disc;
    c.shape.radius = r;
    return c;
}

// {(x,0,0)} and {(0,0,z)}, both over [-1,1].
inline StructureSpec crossed_segments(double h) {
    return {{segment(1, Vec3::Zero(), ex, -1, 1), segment(2, Vec3::Zero(), ez, -1, 1)}, h};
}

// [-1,1]^2 in the plane z = 0 (coordinates x,y) and in x = 0 (coordinates y,z).
inline StructureSpec crossed_plates(double h) {
    return {{rectangle(1, Vec3::Zero(), ex, ey, {-1, -1}, {1, 1}), rectangle(2, Vec3::Zero(), ey, ez, {-1, -1}, {1, 1})}, h};
}

// Unit discs in z = 0 and x = 0.
inline StructureSpec two_discs(double h) { return {{disc(1, ex, ey), disc(2, ey, ez)}, h}; }

// Segment {(x,0,0)} through a plate [-1,1]^2 in the plane x = 0.
inline StructureSpec segment_plate(double h) {
    return {{segment(1, Vec3::Zero(), ex, -1, 1), rectangle(2, Vec3::Zero(), ey, ez, {-1, -1}, {1, 1})}, h};
}

inline StructureSpec unit_segment(double h) { return {{segment(1, Vec3::Zero(), ex, 0, 1)}, h}; }

inline StructureSpec unit_plate(double h) { return {{rectangle(1, Vec3::Zero(), ex, ey, {0, 0}, {1, 1})}, h}; }

}  // namespace fixtures
