#pragma once

#include "eprk/numeric.hpp"
#include "eprk/unipoly.hpp"

#include <string>

namespace eprk {

// Shifted Legendre polynomial on [0,1], P_q(1) = 1.
UniPoly legendre(unsigned q);
// Leading coefficient of P_q: (2q)!/(q!)^2.
Integer legendre_gamma(unsigned q);
// G_q = integral from 0 to x of P_{q-1}; q >= 1.
UniPoly g_poly(unsigned q);
// R_l = P_l (l < s), P_s - zeta P_{s-1} (l = s), R_s P_{l-s} (l > s).
UniPoly r_poly(unsigned l, unsigned s, const Rational& zeta);
// F_q = integral from 0 to x of R_{q-1}; q >= 1.
UniPoly f_poly(unsigned q, unsigned s, const Rational& zeta);

enum class NodePlacement {
  unit_interval,  // every node must lie in [0,1]
  any_real,       // nodes only need to be real and simple
};

struct QuadRule {
  unsigned s = 0;
  Rational zeta;
  Real zeta_value;
  RealVec c;
  RealVec b;
  unsigned order = 0;
  unsigned precision_digits = kDefaultPrecisionDigits;
};

// Nodes are the roots of P_s - zeta P_{s-1}, isolated exactly with a Sturm
// chain and refined by bisection and Newton; weights solve the Vandermonde
// system sum_i b_i c_i^(k-1) = 1/k, k = 1..s.
QuadRule quad_rule(unsigned s, const Rational& zeta,
                   unsigned precision_digits = kDefaultPrecisionDigits,
                   NodePlacement placement = NodePlacement::unit_interval);

// Tolerance 10^(-digits+5) used for identities that hold in exact arithmetic.
Real rule_tolerance(const QuadRule& rule);

Real discrete_ip(const UniPoly& u, const UniPoly& v, const QuadRule& rule);
Rational continuous_ip(const UniPoly& u, const UniPoly& v);
// The discrete inner product evaluated exactly: the rule integrates uv mod R_s
// without error, so no node is needed.
Rational discrete_ip_exact(const UniPoly& u, const UniPoly& v, unsigned s,
                           const Rational& zeta);

// |<pi,1>_D - (<pi,1> - <rho_s, theta>)| with rho_s the monic node
// polynomial. pi must be monic of degree rule.order, theta monic of degree
// rule.order - s.
Real check_discip_lemma(const QuadRule& rule, const UniPoly& pi_m, const UniPoly& theta);

std::string quad_rule_to_json(const QuadRule& rule, unsigned digits);
QuadRule quad_rule_from_json(const std::string& text);

}  // namespace eprk
