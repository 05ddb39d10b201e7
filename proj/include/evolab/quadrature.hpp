#pragma once

#include <vector>

namespace evolab {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point rule (n >= 1), nodes ascending. Exact for polynomials of degree 2n-1.
GaussLegendreRule gauss_legendre(int n);

}  // namespace evolab
