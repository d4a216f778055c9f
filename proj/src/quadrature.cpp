#include "eprk/quadrature.hpp"

#include "eprk/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

namespace eprk {

UniPoly legendre(unsigned q) {
  // (1/q!) d^q/dx^q [x^q (x-1)^q]
  UniPoly base = UniPoly::monomial(q);
  UniPoly xm1{Rational(-1), Rational(1)};
  for (unsigned k = 0; k < q; ++k) base = base * xm1;
  for (unsigned k = 0; k < q; ++k) base = base.derivative();
  return Rational(1) / Rational(factorial(q)) * base;
}

Integer legendre_gamma(unsigned q) {
  Integer f = factorial(q);
  return factorial(2 * q) / (f * f);
}

UniPoly g_poly(unsigned q) {
  if (q == 0) throw InputError("G_q needs q >= 1");
  return legendre(q - 1).antiderivative();
}

UniPoly r_poly(unsigned l, unsigned s, const Rational& zeta) {
  if (s == 0) throw InputError("stage count must be positive");
  if (l < s) return legendre(l);
  UniPoly rs = legendre(s) - zeta * legendre(s - 1);
  if (l == s) return rs;
  return rs * legendre(l - s);
}

UniPoly f_poly(unsigned q, unsigned s, const Rational& zeta) {
  if (q == 0) throw InputError("F_q needs q >= 1");
  return r_poly(q - 1, s, zeta).antiderivative();
}

namespace {

int sign_of(const Rational& x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

class SturmChain {
 public:
  explicit SturmChain(const UniPoly& p) {
    chain_.push_back(p);
    chain_.push_back(p.derivative());
    while (!chain_.back().is_zero() && chain_.back().degree() > 0) {
      auto r = divmod(chain_[chain_.size() - 2], chain_.back()).second;
      if (r.is_zero()) break;
      chain_.push_back(-r);
    }
  }

  int variations(const Rational& x) const {
    int v = 0, last = 0;
    for (const auto& p : chain_) {
      int sg = sign_of(p.eval(x));
      if (sg == 0) continue;
      if (last != 0 && sg != last) ++v;
      last = sg;
    }
    return v;
  }

  // Distinct roots in (a, b].
  int count(const Rational& a, const Rational& b) const {
    return variations(a) - variations(b);
  }

 private:
  std::vector<UniPoly> chain_;
};

struct Bracket {
  Rational lo, hi;
  bool exact = false;  // root equals hi
};

void isolate(const UniPoly& p, const SturmChain& st, Rational a, Rational b, int n,
             std::vector<Bracket>& out) {
  if (n == 0) return;
  if (n == 1) {
    if (p.eval(b) == 0) {
      out.push_back({a, b, true});
      return;
    }
    // Move a off any root sitting on the left end so the bracket has a
    // strict sign change.
    while (p.eval(a) == 0) {
      Rational mid = (a + b) / 2;
      if (st.count(mid, b) == 1)
        a = mid;
      else
        b = mid;
      if (p.eval(b) == 0) {
        out.push_back({a, b, true});
        return;
      }
    }
    out.push_back({a, b, false});
    return;
  }
  Rational mid = (a + b) / 2;
  int left = st.count(a, mid);
  isolate(p, st, a, mid, left, out);
  isolate(p, st, mid, b, n - left, out);
}

Real refine(const UniPoly& p, const UniPoly& dp, const Bracket& br) {
  if (br.exact) return to_real(br.hi);
  Real lo = to_real(br.lo), hi = to_real(br.hi);
  const bool rising = p.eval(br.lo) < 0;
  const Real coarse = pow10_neg(12);
  while (hi - lo > coarse * (1 + abs(lo))) {
    Real mid = (lo + hi) / 2;
    Real v = p.eval(mid);
    if (v == 0) return mid;
    if ((v < 0) == rising)
      lo = mid;
    else
      hi = mid;
  }
  Real x = (lo + hi) / 2;
  const Real fine = pow10_neg(static_cast<int>(current_precision_digits()) + 2);
  for (int it = 0; it < 100; ++it) {
    Real d = dp.eval(x);
    if (d == 0) break;
    Real step = p.eval(x) / d;
    Real next = x - step;
    if (next < lo || next > hi) next = (lo + hi) / 2;
    if (abs(next - x) <= fine * (1 + abs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

}  // namespace

Real rule_tolerance(const QuadRule& rule) {
  PrecisionScope ps(rule.precision_digits);
  return pow10_neg(static_cast<int>(rule.precision_digits) - 5);
}

QuadRule quad_rule(unsigned s, const Rational& zeta, unsigned precision_digits,
                   NodePlacement placement) {
  if (s == 0) throw InputError("stage count must be positive");
  if (precision_digits < 10) throw InputError("precision below 10 digits");
  PrecisionScope ps(precision_digits);

  const UniPoly p = r_poly(s, s, zeta);
  if (p.degree() != static_cast<int>(s))
    throw QuadratureError("node polynomial degenerates below degree s");
  const UniPoly dp = p.derivative();
  if (gcd(p, dp).degree() > 0)
    throw QuadratureError("node polynomial has a repeated root for zeta = " +
                          to_string(zeta));

  // Cauchy bound, padded so that no root sits on an endpoint.
  Rational bound = 2;
  for (int k = 0; k < p.degree(); ++k) {
    Rational r = abs(p.coeff(k) / p.leading());
    if (r + 2 > bound) bound = r + 2;
  }
  SturmChain st(p);
  const int real_roots = st.count(-bound, bound);
  if (real_roots != static_cast<int>(s))
    throw QuadratureError("node polynomial has " + std::to_string(s - real_roots) +
                          " non-real roots for zeta = " + to_string(zeta));
  if (placement == NodePlacement::unit_interval) {
    int inside = st.count(0, 1) + (p.eval(Rational(0)) == 0 ? 1 : 0);
    if (inside != static_cast<int>(s))
      throw QuadratureError(std::to_string(s - inside) +
                            " node(s) outside [0,1] for zeta = " + to_string(zeta));
  }

  // 0 and 1 are always bracket ends, so Radau nodes come out exact.
  std::vector<Bracket> brackets;
  const Rational cuts[] = {-bound, Rational(0), Rational(1), bound};
  for (int k = 0; k < 3; ++k)
    isolate(p, st, cuts[k], cuts[k + 1], st.count(cuts[k], cuts[k + 1]), brackets);

  QuadRule rule;
  rule.s = s;
  rule.zeta = zeta;
  rule.zeta_value = to_real(zeta);
  rule.order = zeta == 0 ? 2 * s : 2 * s - 1;
  rule.precision_digits = precision_digits;
  for (const auto& br : brackets) rule.c.push_back(refine(p, dp, br));
  std::sort(rule.c.begin(), rule.c.end());

  RealMatrix v(s, s);
  RealVec rhs(s);
  for (unsigned k = 0; k < s; ++k) {
    for (unsigned i = 0; i < s; ++i) v(k, i) = pow(rule.c[i], k);
    rhs[k] = Real(1) / (k + 1);
  }
  rule.b = lu_solve(v, rhs);

  const Real tol = rule_tolerance(rule);
  for (unsigned k = 1; k <= rule.order; ++k) {
    Real sum = 0;
    for (unsigned i = 0; i < s; ++i) sum += rule.b[i] * pow(rule.c[i], k - 1);
    if (abs(sum - Real(1) / k) > tol)
      throw PrecisionError("quadrature condition k=" + std::to_string(k) +
                           " misses by " + to_decimal(abs(sum - Real(1) / k), 5) +
                           " at " + std::to_string(precision_digits) + " digits");
  }
  return rule;
}

Real discrete_ip(const UniPoly& u, const UniPoly& v, const QuadRule& rule) {
  PrecisionScope ps(rule.precision_digits);
  Real sum = 0;
  for (unsigned i = 0; i < rule.s; ++i) sum += rule.b[i] * u.eval(rule.c[i]) * v.eval(rule.c[i]);
  return sum;
}

Rational continuous_ip(const UniPoly& u, const UniPoly& v) { return (u * v).integral01(); }

Rational discrete_ip_exact(const UniPoly& u, const UniPoly& v, unsigned s,
                           const Rational& zeta) {
  return divmod(u * v, r_poly(s, s, zeta)).second.integral01();
}

Real check_discip_lemma(const QuadRule& rule, const UniPoly& pi_m, const UniPoly& theta) {
  if (!pi_m.is_monic() || !theta.is_monic())
    throw InputError("pi_m and theta must be monic");
  if (pi_m.degree() != static_cast<int>(rule.order) ||
      theta.degree() != static_cast<int>(rule.order - rule.s))
    throw InputError("pi_m must have degree m and theta degree m - s");
  PrecisionScope ps(rule.precision_digits);
  const UniPoly rho = make_monic(r_poly(rule.s, rule.s, rule.zeta));
  Real lhs = discrete_ip(pi_m, UniPoly::constant(1), rule);
  Rational rhs = pi_m.integral01() - continuous_ip(rho, theta);
  return abs(lhs - to_real(rhs));
}

std::string quad_rule_to_json(const QuadRule& rule, unsigned digits) {
  PrecisionScope ps(rule.precision_digits);
  nlohmann::json doc;
  doc["s"] = rule.s;
  doc["zeta"] = to_decimal(rule.zeta_value, digits);
  doc["zeta_exact"] = to_string(rule.zeta);
  doc["order"] = rule.order;
  doc["precision_digits"] = rule.precision_digits;
  doc["c"] = nlohmann::json::array();
  doc["b"] = nlohmann::json::array();
  for (const auto& x : rule.c) doc["c"].push_back(to_decimal(x, digits));
  for (const auto& x : rule.b) doc["b"].push_back(to_decimal(x, digits));
  return doc.dump(2);
}

QuadRule quad_rule_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("quadrature JSON: ") + e.what());
  }
  try {
    QuadRule rule;
    rule.s = doc.at("s").get<unsigned>();
    rule.order = doc.at("order").get<unsigned>();
    rule.precision_digits = doc.value("precision_digits", kDefaultPrecisionDigits);
    rule.zeta = parse_rational(doc.contains("zeta_exact") ? doc["zeta_exact"].get<std::string>()
                                                          : doc.at("zeta").get<std::string>());
    PrecisionScope ps(rule.precision_digits);
    rule.zeta_value = to_real(rule.zeta);
    for (const auto& x : doc.at("c")) rule.c.emplace_back(x.get<std::string>());
    for (const auto& x : doc.at("b")) rule.b.emplace_back(x.get<std::string>());
    if (rule.c.size() != rule.s || rule.b.size() != rule.s)
      throw InputError("quadrature JSON: c and b must have s entries");
    return rule;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("quadrature JSON: ") + e.what());
  }
}

}  // namespace eprk
