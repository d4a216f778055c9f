#include "eprk/hamiltonian.hpp"

#include "eprk/unipoly.hpp"

#include <json.hpp>

#include <cmath>

namespace eprk {

MultiPoly MultiPoly::constant(unsigned num_vars, const Rational& a) {
  MultiPoly p(num_vars);
  p.add_term(Exponents(num_vars, 0), a);
  return p;
}

MultiPoly MultiPoly::variable(unsigned num_vars, unsigned i) {
  if (i >= num_vars) throw InputError("variable index out of range");
  MultiPoly p(num_vars);
  Exponents e(num_vars, 0);
  e[i] = 1;
  p.add_term(e, 1);
  return p;
}

int MultiPoly::degree() const {
  if (terms_.empty()) return kZeroDegree;
  int d = 0;
  for (const auto& [e, a] : terms_) {
    int t = 0;
    for (unsigned k : e) t += static_cast<int>(k);
    d = std::max(d, t);
  }
  return d;
}

void MultiPoly::add_term(const Exponents& e, const Rational& a) {
  if (e.size() != n_) throw InputError("exponent tuple has wrong length");
  if (a == 0) return;
  auto [it, inserted] = terms_.try_emplace(e, a);
  if (!inserted) {
    it->second += a;
    if (it->second == 0) terms_.erase(it);
  }
}

Rational MultiPoly::eval(const RationalVec& x) const {
  if (x.size() != n_) throw InputError("point dimension does not match polynomial");
  Rational s = 0;
  for (const auto& [e, a] : terms_) {
    Rational t = a;
    for (unsigned i = 0; i < n_; ++i)
      for (unsigned k = 0; k < e[i]; ++k) t *= x[i];
    s += t;
  }
  return s;
}

double MultiPoly::eval(const std::vector<double>& x) const {
  return CompiledPoly(*this).eval(x);
}

MultiPoly MultiPoly::partial(unsigned i) const {
  if (i >= n_) throw InputError("variable index out of range");
  MultiPoly d(n_);
  for (const auto& [e, a] : terms_) {
    if (e[i] == 0) continue;
    Exponents f = e;
    --f[i];
    d.add_term(f, a * e[i]);
  }
  return d;
}

std::vector<MultiPoly> MultiPoly::gradient() const {
  std::vector<MultiPoly> g;
  for (unsigned i = 0; i < n_; ++i) g.push_back(partial(i));
  return g;
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& o) {
  if (o.n_ != n_) throw InputError("polynomials live in different variable sets");
  for (const auto& [e, a] : o.terms_) add_term(e, a);
  return *this;
}

MultiPoly& MultiPoly::operator*=(const Rational& a) {
  if (a == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, c] : terms_) c *= a;
  return *this;
}

MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a += Rational(-1) * b; }
MultiPoly operator*(const Rational& s, MultiPoly a) { return a *= s; }

MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
  if (a.num_vars() != b.num_vars())
    throw InputError("polynomials live in different variable sets");
  MultiPoly c(a.num_vars());
  for (const auto& [ea, ca] : a.terms())
    for (const auto& [eb, cb] : b.terms()) {
      Exponents e = ea;
      for (std::size_t i = 0; i < e.size(); ++i) e[i] += eb[i];
      c.add_term(e, ca * cb);
    }
  return c;
}

HamiltonianSystem::HamiltonianSystem(unsigned half_dim, MultiPoly H)
    : d_(half_dim), h_(std::move(H)) {
  if (d_ == 0) throw InputError("half_dim must be positive");
  if (h_.num_vars() != 2 * d_)
    throw InputError("Hamiltonian must have 2*half_dim variables");
  auto g = h_.gradient();
  for (unsigned i = 0; i < d_; ++i) f_.push_back(g[d_ + i]);
  for (unsigned i = 0; i < d_; ++i) f_.push_back(Rational(-1) * g[i]);
}

RationalVec line_average(const std::vector<MultiPoly>& f, const RationalVec& y0,
                         const RationalVec& y1) {
  if (y0.size() != y1.size()) throw InputError("segment endpoints differ in dimension");
  const std::size_t n = y0.size();
  std::vector<UniPoly> segment;
  for (std::size_t i = 0; i < n; ++i) segment.push_back(UniPoly{y0[i], y1[i] - y0[i]});
  RationalVec out;
  for (const auto& comp : f) {
    if (comp.num_vars() != n) throw InputError("vector field dimension mismatch");
    UniPoly acc;
    for (const auto& [e, a] : comp.terms()) {
      UniPoly t = UniPoly::constant(a);
      for (std::size_t i = 0; i < n; ++i)
        for (unsigned k = 0; k < e[i]; ++k) t = t * segment[i];
      acc += t;
    }
    out.push_back(acc.integral01());
  }
  return out;
}

CompiledPoly::CompiledPoly(const MultiPoly& p) : n_(p.num_vars()) {
  for (const auto& [e, a] : p.terms()) terms_.emplace_back(e, a.convert_to<double>());
}

double CompiledPoly::eval(const std::vector<double>& x) const {
  if (x.size() != n_) throw InputError("point dimension does not match polynomial");
  double s = 0;
  for (const auto& [e, a] : terms_) {
    double t = a;
    for (unsigned i = 0; i < n_; ++i)
      for (unsigned k = 0; k < e[i]; ++k) t *= x[i];
    s += t;
  }
  return s;
}

double CompiledPoly::segment_moment(const std::vector<double>& y0,
                                    const std::vector<double>& y1, unsigned j) const {
  if (y0.size() != n_ || y1.size() != n_)
    throw InputError("point dimension does not match polynomial");
  double s = 0;
  std::vector<double> t;
  for (const auto& [e, a] : terms_) {
    t.assign(1, a);
    for (unsigned i = 0; i < n_; ++i) {
      const double d = y1[i] - y0[i];
      for (unsigned k = 0; k < e[i]; ++k) {
        t.push_back(0.0);
        for (std::size_t r = t.size() - 1; r > 0; --r) t[r] = t[r] * y0[i] + t[r - 1] * d;
        t[0] *= y0[i];
      }
    }
    for (std::size_t k = 0; k < t.size(); ++k) s += t[k] / static_cast<double>(k + 1 + j);
  }
  return s;
}

namespace {

Rational coeff_from_json(const nlohmann::json& v) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long long>());
  throw InputError("coefficient must be an integer or a \"num/den\" string");
}

}  // namespace

HamiltonianSystem parse_hamiltonian_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("Hamiltonian JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("half_dim") || !doc.contains("terms"))
    throw InputError("Hamiltonian JSON needs \"half_dim\" and \"terms\"");
  if (!doc["half_dim"].is_number_integer() || doc["half_dim"].get<long long>() <= 0)
    throw InputError("half_dim must be a positive integer");
  const unsigned d = doc["half_dim"].get<unsigned>();
  if (!doc["terms"].is_array()) throw InputError("terms must be an array");
  MultiPoly H(2 * d);
  for (const auto& term : doc["terms"]) {
    if (!term.is_object() || !term.contains("exponents") || !term.contains("coeff"))
      throw InputError("each term needs \"exponents\" and \"coeff\"");
    const auto& ex = term["exponents"];
    if (!ex.is_array() || ex.size() != 2 * d)
      throw InputError("exponents must list 2*half_dim entries");
    Exponents e;
    for (const auto& k : ex) {
      if (!k.is_number_integer() || k.get<long long>() < 0)
        throw InputError("exponents must be non-negative integers");
      e.push_back(k.get<unsigned>());
    }
    H.add_term(e, coeff_from_json(term["coeff"]));
  }
  return HamiltonianSystem(d, std::move(H));
}

std::string hamiltonian_to_json(const HamiltonianSystem& sys) {
  nlohmann::json doc;
  doc["half_dim"] = sys.half_dim();
  doc["terms"] = nlohmann::json::array();
  for (const auto& [e, a] : sys.H().terms())
    doc["terms"].push_back({{"exponents", e}, {"coeff", to_string(a)}});
  return doc.dump(2);
}

}  // namespace eprk
