#pragma once

#include <vector>

namespace osmee {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1], computed by Newton iteration on the
// Legendre recurrence. Deterministic and accurate to machine precision for
// the orders used here (n <= a few hundred).
QuadratureRule gauss_legendre(int n);

// Same rule mapped to [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

} // namespace osmee
