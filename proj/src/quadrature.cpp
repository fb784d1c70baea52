// SPDX-License-Identifier: Apache-2.0
#include "mustructure/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <stdexcept>

namespace mustructure::quad {

namespace {

// Nodes on [0, 1] and weights summing to 1.
template <unsigned N>
void gauss01(std::vector<double>& x, std::vector<double>& w) {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& abs = G::abscissa();
    const auto& wt = G::weights();
    x.clear();
    w.clear();
    // Boost stores the non-negative half; N is even here so there is no zero node.
    for (std::size_t i = abs.size(); i-- > 0;) {
        x.push_back(0.5 - 0.5 * abs[i]);
        w.push_back(0.5 * wt[i]);
    }
    for (std::size_t i = 0; i < abs.size(); ++i) {
        x.push_back(0.5 + 0.5 * abs[i]);
        w.push_back(0.5 * wt[i]);
    }
}

void gauss01(int n, std::vector<double>& x, std::vector<double>& w) {
    switch (n) {
        case 2: gauss01<2>(x, w); break;
        case 4: gauss01<4>(x, w); break;
        case 8: gauss01<8>(x, w); break;
        default: throw std::invalid_argument("unsupported Gauss order");
    }
}

std::vector<RefPoint> build_accurate(int dim, int n) {
    std::vector<double> x, w;
    gauss01(n, x, w);
    std::vector<RefPoint> out;
    if (dim == 1) {
        for (std::size_t i = 0; i < x.size(); ++i) out.push_back({{1.0 - x[i], x[i], 0.0}, w[i]});
        return out;
    }
    // (s, t) in [0,1]^2 -> (l1, l2) = (s, t (1 - s)), Jacobian (1 - s), reference area 1/2.
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double l1 = x[i];
            const double l2 = x[j] * (1.0 - x[i]);
            out.push_back({{1.0 - l1 - l2, l1, l2}, 2.0 * w[i] * w[j] * (1.0 - x[i])});
        }
    }
    return out;
}

}  // namespace

const std::vector<RefPoint>& assembly_rule(int dim) {
    static const std::vector<RefPoint> line = [] {
        const double d = 0.5 / std::sqrt(3.0);
        return std::vector<RefPoint>{{{0.5 + d, 0.5 - d, 0.0}, 0.5}, {{0.5 - d, 0.5 + d, 0.0}, 0.5}};
    }();
    static const std::vector<RefPoint> tri{
        {{0.5, 0.5, 0.0}, 1.0 / 3.0}, {{0.0, 0.5, 0.5}, 1.0 / 3.0}, {{0.5, 0.0, 0.5}, 1.0 / 3.0}};
    return dim == 1 ? line : tri;
}

const std::vector<RefPoint>& accurate_rule(int dim, int n) {
    static const std::array<std::vector<RefPoint>, 6> rules{build_accurate(1, 2), build_accurate(1, 4),
                                                            build_accurate(1, 8), build_accurate(2, 2),
                                                            build_accurate(2, 4), build_accurate(2, 8)};
    const int k = n == 2 ? 0 : n == 4 ? 1 : n == 8 ? 2 : -1;
    if (k < 0) throw std::invalid_argument("unsupported Gauss order");
    return rules[(dim == 1 ? 0 : 3) + k];
}

}  // namespace mustructure::quad
