#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <vector>

namespace billspec::oracle {

// Steepest-descent contour integral of exp(i k phi(z)) u(z) through the
// nondegenerate critical point z = 0 of the polynomial phi (coefficients in
// increasing degree, phi(0) = phi'(0) = 0). Asymptotic to the local
// stationary-phase contribution at 0 to all orders.
std::complex<double> thimble_integral(const std::vector<double>& phi,
                                      const std::vector<std::complex<double>>& u, double k);

// Isomorphism classes of cubic multigraphs on 2j vertices by exhaustive
// half-edge pairing: canonical adjacency (minimised over all vertex
// permutations) -> number of pairings in the class.
std::map<std::vector<int>, std::int64_t> pairing_classes(int j);

}  // namespace billspec::oracle
