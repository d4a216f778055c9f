#pragma once

#include "eprk/numeric.hpp"

#include <map>
#include <string>
#include <vector>

namespace eprk {

using Exponents = std::vector<unsigned>;

// Exact multivariate polynomial with rational coefficients. Exponent tuples
// are dense (one entry per variable); zero coefficients are never stored.
class MultiPoly {
 public:
  static constexpr int kZeroDegree = -1;

  MultiPoly() = default;
  explicit MultiPoly(unsigned num_vars) : n_(num_vars) {}

  static MultiPoly constant(unsigned num_vars, const Rational& a);
  static MultiPoly variable(unsigned num_vars, unsigned i);

  unsigned num_vars() const { return n_; }
  const std::map<Exponents, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;

  // Accumulates into an existing term; a resulting zero is erased.
  void add_term(const Exponents& e, const Rational& a);

  Rational eval(const RationalVec& x) const;
  double eval(const std::vector<double>& x) const;

  MultiPoly partial(unsigned i) const;
  std::vector<MultiPoly> gradient() const;

  MultiPoly& operator+=(const MultiPoly& o);
  MultiPoly& operator*=(const Rational& a);
  friend bool operator==(const MultiPoly&, const MultiPoly&) = default;

 private:
  unsigned n_ = 0;
  std::map<Exponents, Rational> terms_;
};

MultiPoly operator+(MultiPoly a, const MultiPoly& b);
MultiPoly operator-(MultiPoly a, const MultiPoly& b);
MultiPoly operator*(const MultiPoly& a, const MultiPoly& b);
MultiPoly operator*(const Rational& s, MultiPoly a);

// y' = J^{-1} grad H with variables ordered (q_1..q_d, p_1..p_d).
class HamiltonianSystem {
 public:
  HamiltonianSystem(unsigned half_dim, MultiPoly H);

  unsigned half_dim() const { return d_; }
  unsigned dim() const { return 2 * d_; }
  const MultiPoly& H() const { return h_; }
  // (dH/dp, -dH/dq).
  const std::vector<MultiPoly>& vector_field() const { return f_; }

 private:
  unsigned d_;
  MultiPoly h_;
  std::vector<MultiPoly> f_;
};

// Exact integral over xi in [0,1] of f((1-xi) y0 + xi y1), componentwise.
RationalVec line_average(const std::vector<MultiPoly>& f, const RationalVec& y0,
                         const RationalVec& y1);

// Same polynomial with coefficients rounded to double once, for the time
// steppers.
class CompiledPoly {
 public:
  CompiledPoly() = default;
  explicit CompiledPoly(const MultiPoly& p);

  double eval(const std::vector<double>& x) const;
  // Integral over [0,1] of xi^j p((1-xi) y0 + xi y1).
  double segment_moment(const std::vector<double>& y0, const std::vector<double>& y1,
                        unsigned j) const;

 private:
  unsigned n_ = 0;
  std::vector<std::pair<Exponents, double>> terms_;
};

// Hamiltonian document: {"half_dim": d, "terms": [{"exponents": [...],
// "coeff": "n/d"}]}. Throws InputError on schema violations.
HamiltonianSystem parse_hamiltonian_json(const std::string& text);
std::string hamiltonian_to_json(const HamiltonianSystem& sys);

}  // namespace eprk
