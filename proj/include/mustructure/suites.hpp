// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeded randomized suites used by the command-line checks: random admissible
// coefficient matrices for the relaxation, sampled Poincare inequalities and
// random smooth scalar fields.

#include "mustructure/solver.hpp"

#include <random>
#include <string>
#include <vector>

namespace mustructure {

struct RelaxSuiteReport {
    int cases = 0;
    int failures = 0;
    double basis_independence = 0.0;  // max |B_mu(basis 1) - B_mu(basis 2)| / |B|
    double annihilation = 0.0;        // max |B_mu e_i| / |B|
    double variational = 0.0;         // max |(B_mu xi, xi) - min_eta (B eta, eta)| / (|B| max(1, |xi|^2))
    bool worked_examples = false;     // the three closed-form cases reproduced exactly
    bool pass = false;
};

/// Random admissible pairs (B, tangent frame) of tangent rank 1 to 3, with B
/// definite or singular along a normal direction. Tolerances: 1e-10 for
/// basis independence, 1e-9 for annihilation, 1e-8 for the variational
/// minimum (computed by a normal-space pseudo-inverse).
RelaxSuiteReport relaxation_suite(int cases, unsigned seed);

struct PoincareSuiteReport {
    int group = 0;
    double constant = 0.0;
    int samples = 0;
    double max_ratio = 0.0;  // max ||v - P_k v||^2 / (C ||grad v||^2)
    bool pass = false;       // max_ratio <= 1 + 1e-9
};

/// Samples alternate between random nodal vectors and interpolated random
/// smooth fields, each restricted to group k and shifted to zero mean.
PoincareSuiteReport poincare_suite(const LinearSystem& sys, int k, double constant, int samples, unsigned seed);

/// Sum of three random terms drawn from low-degree monomials, sines and
/// cosines of random linear phases, and exponential-cosine products.
/// Coefficients are multiples of 1/4 so the text is exact.
std::string random_smooth_field(std::mt19937& rng);

}  // namespace mustructure
