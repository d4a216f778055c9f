#pragma once

#include "eprk/hamiltonian.hpp"

#include <random>

namespace eprk::testing {

// Sum of (q_i^2 + p_i^2)/2 plus small random monomials of degree 3..deg, and
// at least one term of degree exactly deg.
inline HamiltonianSystem random_hamiltonian(std::mt19937& rng, unsigned d, unsigned deg) {
  const unsigned n = 2 * d;
  MultiPoly H(n);
  for (unsigned i = 0; i < n; ++i) {
    Exponents e(n, 0);
    e[i] = 2;
    H.add_term(e, Rational(1, 2));
  }
  std::uniform_int_distribution<int> coeff(-10, 10);
  std::uniform_int_distribution<unsigned> var(0, n - 1);
  std::uniform_int_distribution<unsigned> degree(3, deg);
  for (int t = 0; t < 6; ++t) {
    Exponents e(n, 0);
    const unsigned k = t == 0 ? deg : degree(rng);
    for (unsigned j = 0; j < k; ++j) ++e[var(rng)];
    int a = coeff(rng);
    if (t == 0 && a == 0) a = 3;
    H.add_term(e, Rational(a, 100));
  }
  return HamiltonianSystem(d, H);
}

inline MultiPoly mono(unsigned n, const Exponents& e, const Rational& a) {
  MultiPoly p(n);
  p.add_term(e, a);
  return p;
}

// p^2/2 + q^4/4 - q^2/2
inline HamiltonianSystem quartic_oscillator() {
  return HamiltonianSystem(1, mono(2, {0, 2}, Rational(1, 2)) + mono(2, {4, 0}, Rational(1, 4)) -
                                  mono(2, {2, 0}, Rational(1, 2)));
}

}  // namespace eprk::testing
