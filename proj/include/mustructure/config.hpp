// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration read from JSON. The schema is documented in README.md;
// unknown keys are rejected at every level.

#include "mustructure/geometry.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace mustructure {

struct SolverConfig {
    double tol = 1e-10;
    int maxiter = 0;  // 0: 20 * DOF count
    double compat_tol = 1e-8;
};

struct VerifyConfig {
    std::string axis = "x";
    int junction = 0;
    std::vector<double> penalties{1e3, 1e4, 1e5};
    std::vector<double> dq_steps{0.2, 0.1, 0.05, 0.025};
    std::optional<double> dq_margin;           // default max(max step, 4 h)
    std::vector<double> h2_levels{0.1, 0.05, 0.025};
    std::optional<double> h2_margin;           // default 4 * coarsest level
    std::vector<double> continuity_levels{0.2, 0.1, 0.05, 0.025};
    int relax_cases = 100;
    int poincare_samples = 50;
    int second_order_fields = 20;
};

struct RunConfig {
    StructureSpec structure;           // structure.h is the finest mesh size
    std::vector<double> hs;            // mesh sizes, strictly decreasing
    std::array<std::string, 9> coefficients{"1", "0", "0", "0", "1", "0", "0", "0", "1"};
    std::vector<std::string> rhs;           // per component index, empty if absent
    std::vector<std::string> manufactured;  // per component index, empty if absent
    SolverConfig solver;
    VerifyConfig verify;
    unsigned seed = 12345;

    bool has_rhs() const { return !rhs.empty(); }
    bool has_manufactured() const { return !manufactured.empty(); }
};

/// Parses a configuration document. Syntax and schema problems raise
/// ConfigError.
RunConfig parse_config(const std::string& text);

/// Reads and parses a file; IoError if it cannot be read.
RunConfig load_config(const std::string& path);

}  // namespace mustructure
