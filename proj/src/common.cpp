// SPDX-License-Identifier: Apache-2.0
#include "mustructure/common.hpp"

namespace mustructure {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::SyntaxError: return "SyntaxError";
        case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::SymbolicDepthExceeded: return "SymbolicDepthExceeded";
        case ErrorKind::TripleIntersection: return "TripleIntersection";
        case ErrorKind::NonTransversal: return "NonTransversal";
        case ErrorKind::NonPositiveDensity: return "NonPositiveDensity";
        case ErrorKind::MalformedShape: return "MalformedShape";
        case ErrorKind::DegenerateOverlap: return "DegenerateOverlap";
        case ErrorKind::BoundaryJunction: return "BoundaryJunction";
        case ErrorKind::PointNotOnStructure: return "PointNotOnStructure";
        case ErrorKind::MeshConformityFailure: return "MeshConformityFailure";
        case ErrorKind::SideNotInJunction: return "SideNotInJunction";
        case ErrorKind::NotSymmetric: return "NotSymmetric";
        case ErrorKind::TangentNotInImage: return "TangentNotInImage";
        case ErrorKind::NotElliptic: return "NotElliptic";
        case ErrorKind::RankDeficiency: return "RankDeficiency";
        case ErrorKind::IncompatibleRHS: return "IncompatibleRHS";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::EigenFailure: return "EigenFailure";
        case ErrorKind::UncoupledJunction: return "UncoupledJunction";
        case ErrorKind::MarginViolation: return "MarginViolation";
        case ErrorKind::UnsupportedGeometry: return "UnsupportedGeometry";
        case ErrorKind::ZeroStep: return "ZeroStep";
        case ErrorKind::EmptyWindow: return "EmptyWindow";
        case ErrorKind::InconsistentManufactured: return "InconsistentManufactured";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace mustructure
