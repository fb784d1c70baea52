// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mustructure {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Geometric incidence tolerance (length units).
inline constexpr double kIncidenceTol = 1e-10;
/// Orthonormality tolerance for component tangent vectors.
inline constexpr double kOrthonormalTol = 1e-12;

enum class ErrorKind {
    // expression language
    SyntaxError,
    UnknownIdentifier,
    DomainError,
    SymbolicDepthExceeded,
    // geometry
    TripleIntersection,
    NonTransversal,
    NonPositiveDensity,
    MalformedShape,
    DegenerateOverlap,
    BoundaryJunction,
    PointNotOnStructure,
    MeshConformityFailure,
    // function space
    SideNotInJunction,
    // relaxation
    NotSymmetric,
    TangentNotInImage,
    NotElliptic,
    RankDeficiency,
    // solver
    IncompatibleRHS,
    NoConvergence,
    EigenFailure,
    // verification
    UncoupledJunction,
    MarginViolation,
    UnsupportedGeometry,
    ZeroStep,
    EmptyWindow,
    InconsistentManufactured,
    // ingestion
    ConfigError,
    IoError,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Parse failure carrying the byte offset into the source text.
class ParseError : public Error {
public:
    ParseError(ErrorKind kind, const std::string& what, std::size_t offset)
        : Error(kind, what + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace mustructure
