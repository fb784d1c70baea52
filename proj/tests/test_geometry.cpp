// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <cmath>
#include <random>

using namespace mustructure;
using namespace fixtures;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an exception";
    return ErrorKind::IoError;
}

// Independent rank oracle: singular values of the stacked spanning vectors.
int svd_rank(const std::vector<Vec3>& vs) {
    Eigen::MatrixXd M(3, vs.size());
    for (std::size_t k = 0; k < vs.size(); ++k) M.col(k) = vs[k];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    int r = 0;
    for (int k = 0; k < svd.singularValues().size(); ++k) r += svd.singularValues()[k] > 1e-8;
    return r;
}

}  // namespace

TEST(Junctions, TwoDiscsShareDiameter) {
    const Structure s = build_structure(two_discs(0.2));
    ASSERT_EQ(s.junctions.size(), 1u);
    const Junction& J = s.junctions[0];
    EXPECT_TRUE(J.is_segment);
    EXPECT_TRUE(J.coupled);
    EXPECT_NEAR((J.p0 - Vec3(0, -1, 0)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((J.p1 - Vec3(0, 1, 0)).norm(), 0.0, 1e-12);
}

TEST(Junctions, CrossedSegmentsMeetAtOrigin) {
    const Structure s = build_structure(crossed_segments(0.5));
    ASSERT_EQ(s.junctions.size(), 1u);
    EXPECT_FALSE(s.junctions[0].is_segment);
    EXPECT_TRUE(s.junctions[0].coupled);
    EXPECT_LT(s.junctions[0].p0.norm(), 1e-14);
}

TEST(Junctions, SegmentThroughPlateIsUncoupled) {
    const Structure s = build_structure(segment_plate(0.25));
    ASSERT_EQ(s.junctions.size(), 1u);
    EXPECT_FALSE(s.junctions[0].coupled);
    EXPECT_LT(s.junctions[0].p0.norm(), 1e-14);
}

TEST(Junctions, ParallelDisjointPlates) {
    std::vector<Component> cs{make_component(rectangle(1, Vec3::Zero(), ex, ey, {0, 0}, {1, 1}), 0.1),
                              make_component(rectangle(2, Vec3(0, 0, 1), ex, ey, {0, 0}, {1, 1}), 0.1)};
    EXPECT_TRUE(compute_junctions(cs).empty());
}

TEST(Junctions, CoincidentSegmentsRejected) {
    std::vector<Component> cs{make_component(segment(1, Vec3::Zero(), ex, -1, 1), 0.1),
                              make_component(segment(2, Vec3::Zero(), ex, -1, 1), 0.1)};
    EXPECT_EQ(kind_of([&] { compute_junctions(cs); }), ErrorKind::DegenerateOverlap);
}

TEST(Junctions, NestedContactRejected) {
    // Coplanar plates sharing an edge: tangent spaces coincide.
    StructureSpec a{{rectangle(1, Vec3::Zero(), ex, ey, {0, 0}, {1, 1}), rectangle(2, Vec3::Zero(), ex, ey, {1, 0}, {2, 1})}, 0.25};
    EXPECT_EQ(kind_of([&] { build_structure(a); }), ErrorKind::NonTransversal);
    // Overlapping coplanar plates.
    StructureSpec b{{rectangle(1, Vec3::Zero(), ex, ey, {0, 0}, {1, 1}), rectangle(2, Vec3::Zero(), ex, ey, {0.5, 0.5}, {2, 2})}, 0.25};
    EXPECT_EQ(kind_of([&] { build_structure(b); }), ErrorKind::DegenerateOverlap);
    // Segment lying in the plate.
    StructureSpec c{{segment(1, Vec3(0, 0.5, 0), ex, -1, 1), rectangle(2, Vec3::Zero(), ex, ey, {0, 0}, {1, 1})}, 0.25};
    EXPECT_EQ(kind_of([&] { build_structure(c); }), ErrorKind::DegenerateOverlap);
}

TEST(Validation, ThreePlatesThroughOnePoint) {
    StructureSpec s{{rectangle(1, Vec3::Zero(), ex, ey, {-1, -1}, {1, 1}), rectangle(2, Vec3::Zero(), ey, ez, {-1, -1}, {1, 1}),
                     rectangle(3, Vec3::Zero(), ex, ez, {-1, -1}, {1, 1})},
                    0.25};
    EXPECT_EQ(kind_of([&] { build_structure(s); }), ErrorKind::TripleIntersection);
}

TEST(Validation, Density) {
    StructureSpec s = crossed_segments(0.25);
    s.components[1].density_expr = "-1";
    EXPECT_EQ(kind_of([&] { build_structure(s); }), ErrorKind::NonPositiveDensity);
    s.components[1].density_expr = "x^2";  // vanishes at the origin node
    EXPECT_EQ(kind_of([&] { build_structure(s); }), ErrorKind::NonPositiveDensity);
    s.components[1].density_expr = "2 + z";
    EXPECT_NEAR(build_structure(s).components[1].min_density, 1.0, 1e-15);
}

TEST(Validation, MalformedShapes) {
    StructureSpec s = crossed_segments(0.25);
    s.components[0].tangents = {Vec3(1, 1e-5, 0)};
    EXPECT_EQ(kind_of([&] { build_structure(s); }), ErrorKind::MalformedShape);

    ComponentSpec bow = rectangle(1, Vec3::Zero(), ex, ey, {0, 0}, {1, 1});
    bow.shape.kind = ShapeKind::Polygon;
    bow.shape.vertices = {{0, 0}, {1, 1}, {1, 0}, {0, 1}};
    EXPECT_EQ(kind_of([&] { make_component(bow, 0.1); }), ErrorKind::MalformedShape);

    ComponentSpec badint = segment(1, Vec3::Zero(), ex, 1, 0);
    EXPECT_EQ(kind_of([&] { make_component(badint, 0.1); }), ErrorKind::MalformedShape);
}

TEST(Validation, JunctionOnDeclaredBoundary) {
    // L-shaped pair of segments meeting at their endpoints.
    StructureSpec s{{segment(1, Vec3::Zero(), ex, 0, 1), segment(2, Vec3::Zero(), ez, 0, 1)}, 0.25};
    EXPECT_EQ(kind_of([&] { build_structure(s); }), ErrorKind::BoundaryJunction);
    s.components[0].boundary.mode = BoundarySpec::Mode::Listed;
    s.components[0].boundary.vertices = {1};
    s.components[1].boundary.mode = BoundarySpec::Mode::Listed;
    s.components[1].boundary.vertices = {1};
    EXPECT_NO_THROW(build_structure(s));
}

TEST(TangentFrames, Examples) {
    const Structure s = build_structure(two_discs(0.2));
    const TangentFrame a = tangent_frame_at(s, {0.5, 0, 0});
    EXPECT_EQ(a.rank(), 2);
    EXPECT_LT((a.projector - Vec3(1, 1, 0).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff(), 1e-12);

    const TangentFrame b = tangent_frame_at(s, {0, 0.5, 0});
    EXPECT_EQ(b.rank(), 3);
    EXPECT_EQ(b.rank(), svd_rank({ex, ey, ey, ez}));
    EXPECT_LT((b.projector - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);

    const Structure c = build_structure(crossed_segments(0.5));
    const TangentFrame o = tangent_frame_at(c, Vec3::Zero());
    EXPECT_EQ(o.rank(), 2);
    EXPECT_EQ(o.rank(), svd_rank({ex, ez}));
    EXPECT_LT((o.projector - Vec3(1, 0, 1).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff(), 1e-12);

    EXPECT_EQ(kind_of([&] { tangent_frame_at(c, {0.5, 0.5, 0}); }), ErrorKind::PointNotOnStructure);
}

TEST(TangentFrames, ProjectorAlgebra) {
    const Structure s = build_structure(two_discs(0.2));
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    for (int k = 0; k < 200; ++k) {
        const bool on_first = k % 2 == 0;
        const double p = u(rng), q = u(rng);
        if (std::abs(on_first ? p : q) < 1e-3) continue;
        const Vec3 x = on_first ? Vec3(p, q, 0) : Vec3(0, p, q);
        const TangentFrame f = tangent_frame_at(s, x);
        const Mat3 expect = s.components[on_first ? 0 : 1].projector();
        EXPECT_LT((f.projector - expect).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((f.projector * f.projector - f.projector).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((f.projector + f.normal_projector - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_NEAR(f.projector.trace(), f.rank(), 1e-12);
    }
    for (double y : {-0.9, -0.3, 0.0, 0.4, 1.0}) EXPECT_EQ(tangent_frame_at(s, {0, y, 0}).rank(), 3);
}

TEST(Meshing, CrossedSegmentsHaveOriginVertex) {
    const Structure s = build_structure(crossed_segments(0.5));
    for (const Mesh& m : s.meshes) {
        EXPECT_EQ(m.nodes.size(), 5u);
        int at_origin = 0;
        for (const Vec3& x : m.nodes) at_origin += x.norm() == 0.0;
        EXPECT_EQ(at_origin, 1);
    }
}

TEST(Meshing, CrossedPlatesNodeCounts) {
    const Structure s = build_structure(crossed_plates(0.25));
    ASSERT_EQ(s.meshes.size(), 2u);
    EXPECT_EQ(s.meshes[0].nodes.size(), 81u);
    EXPECT_EQ(s.meshes[1].nodes.size(), 81u);
    EXPECT_EQ(s.junctions[0].nodes_i.size(), 9u);
    EXPECT_EQ(s.meshes[0].cells.size(), 2u * 64u);
}

TEST(Meshing, TwoDiscsShareJunctionVertices) {
    const Structure s = build_structure(two_discs(0.2));
    const Junction& J = s.junctions[0];
    ASSERT_EQ(J.nodes_i.size(), 11u);
    ASSERT_EQ(J.nodes_j.size(), 11u);
    for (std::size_t k = 0; k < J.nodes_i.size(); ++k) {
        const Vec3 a = s.meshes[J.ci].nodes[J.nodes_i[k]];
        const Vec3 b = s.meshes[J.cj].nodes[J.nodes_j[k]];
        EXPECT_LE((a - b).norm(), 1e-10);
        EXPECT_NEAR(a.y(), -1.0 + 0.2 * k, 1e-12);
    }
    // Bijective: no node used twice.
    auto ids = J.nodes_i;
    std::sort(ids.begin(), ids.end());
    EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());

    for (std::size_t ci = 0; ci < 2; ++ci) {
        const Mesh& m = s.meshes[ci];
        double area = 0.0;
        for (const auto& t : m.cells) {
            const Vec2 a = m.local[t[1]] - m.local[t[0]], b = m.local[t[2]] - m.local[t[0]];
            const double ar = 0.5 * (a.x() * b.y() - a.y() * b.x());
            EXPECT_GT(ar, 0.0);
            area += ar;
        }
        EXPECT_NEAR(area, s.components[ci].measure(), 1e-12);
        const double n = static_cast<double>(s.components[ci].polygon.size());
        EXPECT_NEAR(area, 0.5 * n * std::sin(2 * M_PI / n), 1e-12);  // inscribed regular n-gon
        double longest = 0.0;
        for (const auto& e : m.edges()) longest = std::max(longest, (m.local[e[0]] - m.local[e[1]]).norm());
        EXPECT_LT(longest, 1.75 * 0.2);
    }
}

TEST(Meshing, Deterministic) {
    for (const auto& spec : {two_discs(0.15), crossed_plates(0.2), segment_plate(0.3)}) {
        const Structure a = build_structure(spec);
        const Structure b = build_structure(spec);
        ASSERT_EQ(a.meshes.size(), b.meshes.size());
        for (std::size_t k = 0; k < a.meshes.size(); ++k) {
            EXPECT_EQ(a.meshes[k].cells, b.meshes[k].cells);
            ASSERT_EQ(a.meshes[k].nodes.size(), b.meshes[k].nodes.size());
            for (std::size_t n = 0; n < a.meshes[k].nodes.size(); ++n) EXPECT_EQ(a.meshes[k].nodes[n], b.meshes[k].nodes[n]);
        }
    }
}

TEST(Meshing, GeneralPolygonWithJunction) {
    // An L-shaped plate crossed by a rectangle along x = 0.5.
    ComponentSpec L = rectangle(1, Vec3::Zero(), ex, ey, {0, 0}, {1, 1});
    L.shape.kind = ShapeKind::Polygon;
    L.shape.vertices = {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
    StructureSpec spec{{L, rectangle(2, Vec3(0.5, 0, 0), ey, ez, {0.25, -1}, {1.75, 1})}, 0.1};
    const Structure s = build_structure(spec);
    ASSERT_EQ(s.junctions.size(), 1u);
    EXPECT_NEAR(s.junctions[0].length(), 1.5, 1e-12);
    EXPECT_FALSE(s.meshes[0].tensor);
    EXPECT_TRUE(s.meshes[1].tensor);
    EXPECT_EQ(s.junctions[0].nodes_i.size(), 16u);
}

TEST(Locator, RecoversAffineFunctions) {
    const Structure s = build_structure(two_discs(0.1));
    const Mesh& m = s.meshes[0];
    const PointLocator loc(s.components[0], m);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-0.95, 0.95);
    for (int k = 0; k < 500; ++k) {
        Vec2 p(u(rng), u(rng));
        if (p.norm() > 0.95) continue;
        const auto hit = loc.locate(p);
        ASSERT_TRUE(hit.has_value());
        Vec2 q = Vec2::Zero();
        for (int a = 0; a < 3; ++a) q += hit->bary[a] * m.local[m.cells[hit->cell][a]];
        EXPECT_LT((q - p).norm(), 1e-12);
    }
    EXPECT_FALSE(loc.locate({2.0, 0.0}).has_value());
}
