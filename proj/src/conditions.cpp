#include "eprk/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace eprk {

namespace {

RealVec at_nodes(const QuadRule& rule, const UniPoly& p) {
  RealVec v;
  for (const auto& x : rule.c) v.push_back(p.eval(x));
  return v;
}

RealVec hadamard(const RealVec& a, const RealVec& b) {
  RealVec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
  return r;
}

// b^T diag(d) y
Real bdot(const QuadRule& rule, const RealVec& d, const RealVec& y) {
  Real s = 0;
  for (unsigned i = 0; i < rule.s; ++i) s += rule.b[i] * d[i] * y[i];
  return s;
}

unsigned resolve_m(const QuadRule& rule, std::optional<unsigned> m) {
  return m ? *m : rule.order;
}

void require_vanishing_at_zero(const UniPoly& P, const UniPoly& Q) {
  if (P.coeff(0) != 0 || Q.coeff(0) != 0)
    throw InputError("P and Q must vanish at 0");
}

void require_degree(const UniPoly& p, int bound, const char* what) {
  if (p.degree() > bound)
    throw InputError(std::string(what) + " has degree " + std::to_string(p.degree()) +
                     " above the bound " + std::to_string(bound));
}

Real homogeneous_double_bush(const RealMatrix& A, const QuadRule& rule, const UniPoly& P,
                             const UniPoly& Q) {
  RealVec AQ = A * at_nodes(rule, Q);
  RealVec AP = A * at_nodes(rule, P);
  return bdot(rule, at_nodes(rule, P.derivative()), AQ) -
         bdot(rule, at_nodes(rule, Q.derivative()), AP);
}

Rational double_bush_constant(const UniPoly& P, const UniPoly& Q) {
  return P.eval(Rational(1)) * Q.integral01() - Q.eval(Rational(1)) * P.integral01();
}

void check_shape(const RealMatrix& A, const QuadRule& rule) {
  if (A.rows() != rule.s || A.cols() != rule.s)
    throw InputError("tableau matrix must be s x s");
}

}  // namespace

RealMatrix avf_matrix(const QuadRule& rule) {
  PrecisionScope ps(rule.precision_digits);
  return outer(rule.c, rule.b);
}

RealMatrix factored_matrix(const QuadRule& rule, const UniPoly& U, const UniPoly& V) {
  PrecisionScope ps(rule.precision_digits);
  return outer(at_nodes(rule, U), hadamard(rule.b, at_nodes(rule, V)));
}

Real double_bush_poly_residual(const RealMatrix& A, const QuadRule& rule, const UniPoly& P,
                               const UniPoly& Q, std::optional<unsigned> m) {
  PrecisionScope ps(rule.precision_digits);
  check_shape(A, rule);
  require_vanishing_at_zero(P, Q);
  const int bound = static_cast<int>(resolve_m(rule, m)) - 1;
  require_degree(P, bound, "P");
  require_degree(Q, bound, "Q");
  return homogeneous_double_bush(A, rule, P, Q) - to_real(double_bush_constant(P, Q));
}

Real double_bush_residual(const RealMatrix& A, const QuadRule& rule, unsigned p, unsigned q,
                          std::optional<unsigned> m) {
  const unsigned mm = resolve_m(rule, m);
  if (!(1 <= p && p < q && q + 1 <= mm))
    throw InputError("double bush needs 1 <= p < q <= m-1");
  return double_bush_poly_residual(A, rule, UniPoly::monomial(p), UniPoly::monomial(q), mm);
}

Real triple_bush_residual(const RealMatrix& A, const QuadRule& rule, const UniPoly& P,
                          const UniPoly& Q, const UniPoly& R, std::optional<unsigned> m) {
  PrecisionScope ps(rule.precision_digits);
  check_shape(A, rule);
  require_vanishing_at_zero(P, Q);
  const int mm = static_cast<int>(resolve_m(rule, m));
  require_degree(P, mm - 1, "P");
  require_degree(Q, mm - 1, "Q");
  require_degree(R, mm - 2, "R");
  RealVec AQ = A * at_nodes(rule, Q);
  RealVec AP = A * at_nodes(rule, P);
  RealVec Rc = at_nodes(rule, R);
  RealVec ARAQ = A * hadamard(Rc, AQ);
  RealVec ARAP = A * hadamard(Rc, AP);
  Real t1 = bdot(rule, at_nodes(rule, P.derivative()), ARAQ);
  Real t2 = bdot(rule, at_nodes(rule, Q.derivative()), ARAP);
  Real t3 = to_real(P.eval(Rational(1))) * bdot(rule, Rc, AQ);
  Real t4 = to_real(Q.eval(Rational(1))) * bdot(rule, Rc, AP);
  Real t5 = bdot(rule, at_nodes(rule, R.derivative()), hadamard(AQ, AP));
  Real t6 = to_real(R.eval(Rational(1)) * P.integral01() * Q.integral01());
  return t1 + t2 - t3 - t4 - t5 + t6;
}

Real asym_bush_residual(const RealMatrix& A, const QuadRule& rule, unsigned q,
                        std::optional<unsigned> m) {
  PrecisionScope ps(rule.precision_digits);
  check_shape(A, rule);
  const unsigned mm = resolve_m(rule, m);
  if (q < 1 || q + 1 > mm) throw InputError("asymmetric bush needs 1 <= q <= m-1");
  RealVec Ac = A * rule.c;
  RealVec pow_q(rule.s), pow_q1(rule.s);
  for (unsigned i = 0; i < rule.s; ++i) {
    pow_q[i] = pow(Ac[i], q);
    pow_q1[i] = pow(Ac[i], q - 1);
  }
  RealVec ones(rule.s, Real(1));
  Real t1 = bdot(rule, ones, pow_q);
  Real t2 = bdot(rule, ones, A * hadamard(rule.c, pow_q1));
  Real t3 = bdot(rule, rule.c, pow_q1);
  return t1 - q * t2 + q * t3 - pow(Real(1) / 2, q);
}

RealVec MOperator::apply(const RealMatrix& A) const {
  PrecisionScope ps(rule.precision_digits);
  RealVec out;
  for (const auto& [P, Q] : row_polys) out.push_back(homogeneous_double_bush(A, rule, P, Q));
  return out;
}

RealMatrix MOperator::combine(const std::vector<Real>& coords) const {
  PrecisionScope ps(rule.precision_digits);
  RealMatrix A(s(), s());
  for (std::size_t j = 0; j < basis.size(); ++j)
    if (coords[j] != 0) A += coords[j] * basis[j];
  return A;
}

UniPoly build_p_tilde(unsigned s, const Rational& zeta) {
  if (s < 2) throw InputError("P~_s needs s >= 2");
  if (zeta == -1) return legendre(s) - legendre(s - 1);
  Matrix<Rational> gamma(s - 1, s);
  for (unsigned i = 1; i + 2 <= s; ++i)
    for (unsigned j = 1; j <= s; ++j)
      gamma(i - 1, j - 1) =
          discrete_ip_exact(f_poly(s + i, s, zeta), legendre(j).derivative(), s, zeta);
  for (unsigned j = 1; j <= s; ++j) gamma(s - 2, j - 1) = 1;

  Matrix<Rational> bar(s - 1, s - 1);
  std::vector<Rational> rhs(s - 1);
  for (unsigned i = 0; i + 1 < s; ++i) {
    rhs[i] = -gamma(i, 0);
    for (unsigned j = 1; j < s; ++j) bar(i, j - 1) = gamma(i, j);
  }
  std::vector<Rational> vbar;
  try {
    vbar = lu_solve(bar, rhs);
  } catch (const InputError&) {
    throw InternalError("reduced Gamma matrix is singular for s = " + std::to_string(s) +
                        ", zeta = " + to_string(zeta));
  }
  UniPoly pt = legendre(1);
  for (unsigned l = 2; l <= s; ++l) pt += vbar[l - 2] * legendre(l);

  const UniPoly d = pt.derivative();
  for (unsigned r = 1; r + 2 <= s; ++r)
    if (discrete_ip_exact(d, f_poly(s + r, s, zeta), s, zeta) != 0)
      throw InternalError("P~_s fails an orthogonality condition");
  if (continuous_ip(d, g_poly(1)) != 0 || continuous_ip(d, g_poly(2)) == 0)
    throw InternalError("P~_s fails the G_1 / G_2 conditions");
  return pt;
}

MOperator build_M(const QuadRule& rule, unsigned m) {
  const unsigned s = rule.s;
  MOperator M;
  M.rule = rule;
  M.m = m;
  if (m == 2 * s) {
    if (rule.zeta != 0) throw InputError("even mode (m = 2s) needs zeta = 0");
    M.kind = BasisKind::even;
  } else if (m + 1 == 2 * s) {
    M.kind = BasisKind::odd;
  } else {
    throw InputError("m must be 2s or 2s-1");
  }
  if (s < 2) throw InputError("the double bush operator needs s >= 2");
  PrecisionScope ps(rule.precision_digits);

  std::vector<UniPoly> tilde;
  for (unsigned l = 1; l <= s; ++l) tilde.push_back(legendre(l));
  if (M.kind == BasisKind::odd) {
    if (rule.zeta == 0) {
      if (s >= 3) {
        tilde[1] = legendre(s);
        tilde[s - 1] = build_p_tilde(s, rule.zeta);
      }
    } else {
      tilde[s - 1] = build_p_tilde(s, rule.zeta);
    }
  }
  for (const auto& t : tilde) M.v_polys.push_back(t.derivative());

  for (unsigned k = 1; k <= s; ++k)
    for (unsigned l = 1; l <= s; ++l)
      M.basis.push_back(factored_matrix(rule, legendre(k - 1), M.v_polys[l - 1]));

  for (unsigned p = 1; p + 1 <= m - 1; ++p)
    for (unsigned q = p + 1; q <= m - 1; ++q) {
      M.rows.emplace_back(p, q);
      if (M.kind == BasisKind::even)
        M.row_polys.emplace_back(g_poly(p), g_poly(q));
      else
        M.row_polys.emplace_back(f_poly(p, s, rule.zeta), f_poly(q, s, rule.zeta));
    }

  M.matrix = RealMatrix(M.rows.size(), M.basis.size());
  for (std::size_t r = 0; r < M.rows.size(); ++r) {
    const auto& [P, Q] = M.row_polys[r];
    for (std::size_t j = 0; j < M.basis.size(); ++j)
      M.matrix(r, j) = homogeneous_double_bush(M.basis[j], rule, P, Q);
    M.w.push_back(to_real(double_bush_constant(P, Q)));
  }
  return M;
}

Real default_rank_tolerance(const QuadRule& rule) {
  PrecisionScope ps(rule.precision_digits);
  return pow10_neg(static_cast<int>(rule.precision_digits / 2));
}

std::optional<std::size_t> expected_rank(unsigned s, const Rational& zeta, unsigned m) {
  if (s < 2) return std::nullopt;
  if (m == 2 * s && zeta == 0) return s * s - 1;
  if (m + 1 == 2 * s) return zeta == -1 ? s * s - s - 1 : s * s - 3;
  return std::nullopt;
}

bool KernelReport::all_checks_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.ok; });
}

namespace {

// Transforms between s x s matrices N = U(c) b^T V(C) and coefficient
// matrices Cf with N = T_U Cf T_V^T diag(b), T_U(i,k) = P_{k-1}(c_i),
// T_V(j,l) = P_l'(c_j).
struct CoefficientMap {
  const QuadRule& rule;
  RealMatrix tu, tv;

  explicit CoefficientMap(const QuadRule& r) : rule(r), tu(r.s, r.s), tv(r.s, r.s) {
    for (unsigned k = 0; k < r.s; ++k) {
      auto pk = legendre(k);
      auto dl = legendre(k + 1).derivative();
      for (unsigned i = 0; i < r.s; ++i) {
        tu(i, k) = pk.eval(r.c[i]);
        tv(i, k) = dl.eval(r.c[i]);
      }
    }
  }

  RealMatrix to_coeffs(const RealMatrix& N) const {
    const unsigned s = rule.s;
    RealMatrix x(s, s);
    for (unsigned i = 0; i < s; ++i)
      for (unsigned j = 0; j < s; ++j) x(i, j) = N(i, j) / rule.b[j];
    RealMatrix y(s, s);
    for (unsigned j = 0; j < s; ++j) y.set_column(j, lu_solve(tu, x.column(j)));
    RealMatrix yt = y.transpose();
    RealMatrix cft(s, s);
    for (unsigned i = 0; i < s; ++i) cft.set_column(i, lu_solve(tv, yt.column(i)));
    return cft.transpose();
  }

  RealMatrix from_factors(const RealVec& u, const RealVec& v) const {
    RealVec uc = tu * u;
    RealVec vc = tv * v;
    return outer(uc, hadamard(rule.b, vc));
  }
};

Real relative_m_residual(const MOperator& M, const RealMatrix& N) {
  Real scale = max_abs(M.matrix) * max_abs(N);
  if (scale == 0) return Real(0);
  return max_abs(M.apply(N)) / scale;
}

RealVec flat(const RealMatrix& A) { return A.flat(); }

// Coordinates of A in the operator basis.
RealVec coordinates(const MOperator& M, const RealMatrix& A) {
  const std::size_t n = M.basis.size();
  RealMatrix B(n, n);
  for (std::size_t j = 0; j < n; ++j) B.set_column(j, flat(M.basis[j]));
  return lu_solve(B, flat(A));
}

// Kernel elements satisfying linear constraints on their coefficient matrix.
// Returns nullopt unless exactly one direction survives.
std::optional<RealMatrix> constrained_element(
    const MOperator& M, const KernelReport& K, const CoefficientMap& cmap,
    const std::function<RealVec(const RealMatrix&)>& constraints) {
  const std::size_t d = K.raw.size();
  std::vector<RealVec> cols;
  for (const auto& N : K.raw) cols.push_back(constraints(cmap.to_coeffs(N)));
  RealMatrix C(cols[0].size(), d);
  for (std::size_t j = 0; j < d; ++j) C.set_column(j, cols[j]);
  auto ns = null_space(C, K.tolerance);
  if (ns.basis.cols() != 1) return std::nullopt;
  RealMatrix N(M.s(), M.s());
  for (std::size_t j = 0; j < d; ++j) N += ns.basis(j, 0) * K.raw[j];
  return N;
}

Real rank_one_defect(const RealMatrix& cf) {
  auto sv = svd(cf).s;
  if (sv.size() < 2 || sv[0] == 0) return Real(0);
  return sv[1] / sv[0];
}

Real sv_ratio(const RealMatrix& A, std::size_t k) {
  auto sv = svd(A).s;
  if (sv.size() <= k || sv[0] == 0) return Real(0);
  return sv[k] / sv[0];
}

Real span_distance(const std::vector<RealVec>& spanning, const RealMatrix& raw_coords) {
  if (spanning.empty()) return Real(1);
  RealMatrix S(spanning[0].size(), spanning.size());
  for (std::size_t j = 0; j < spanning.size(); ++j) S.set_column(j, spanning[j]);
  RealMatrix Q = orthonormal_columns(S);
  Real worst = 0;
  for (std::size_t j = 0; j < raw_coords.cols(); ++j)
    worst = std::max(worst, relative_distance_from_span(Q, raw_coords.column(j)));
  return worst;
}

RealVec unit(unsigned s, std::initializer_list<int> head) {
  RealVec v(s, Real(0));
  unsigned i = 0;
  for (int h : head) {
    if (i < s) v[i] = h;
    ++i;
  }
  return v;
}

Real vec_diff(const RealVec& a, const RealVec& b) {
  Real d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, Real(abs(a[i] - b[i])));
  return d;
}

}  // namespace

std::pair<RealVec, RealVec> rank_one_factors(const QuadRule& rule, const RealMatrix& N) {
  PrecisionScope ps(rule.precision_digits);
  CoefficientMap cmap(rule);
  RealMatrix cf = cmap.to_coeffs(N);
  std::size_t bi = 0, bj = 0;
  for (std::size_t i = 0; i < cf.rows(); ++i)
    for (std::size_t j = 0; j < cf.cols(); ++j)
      if (abs(cf(i, j)) > abs(cf(bi, bj))) {
        bi = i;
        bj = j;
      }
  RealVec u = cf.column(bj);
  RealVec v(cf.cols());
  for (std::size_t j = 0; j < cf.cols(); ++j) v[j] = cf(bi, j) / cf(bi, bj);
  return {u, v};
}

KernelReport rank_kernel(const MOperator& M, std::optional<Real> tol) {
  const QuadRule& rule = M.rule;
  const unsigned s = rule.s;
  PrecisionScope ps(rule.precision_digits);
  KernelReport K;
  K.tolerance = tol ? *tol : default_rank_tolerance(rule);
  if (K.tolerance <= 0) throw InputError("rank tolerance must be positive");
  const Real tiny = pow10_neg(static_cast<int>(rule.precision_digits) - 15);

  auto ns = null_space(M.matrix, K.tolerance);
  K.rank = ns.rank;
  K.ambiguous = ns.ambiguous;
  K.pivot_ratios = ns.pivot_ratios;
  K.raw_coords = ns.basis;
  K.kernel_dim = ns.basis.cols();
  for (std::size_t j = 0; j < K.kernel_dim; ++j) K.raw.push_back(M.combine(ns.basis.column(j)));

  if (auto want = expected_rank(s, rule.zeta, M.m))
    K.checks.push_back({"rank", K.rank == *want, Real(K.rank)});

  Real worst = 0;
  for (const auto& N : K.raw) worst = std::max(worst, relative_m_residual(M, N));
  K.checks.push_back({"raw kernel annihilated", worst <= tiny, worst});

  CoefficientMap cmap(rule);
  const UniPoly one = UniPoly{1};
  KernelElement n1{"N1", factored_matrix(rule, one - legendre(1), legendre(1).derivative()),
                   unit(s, {1, -1}), unit(s, {1})};

  auto add_element_checks = [&](const KernelElement& e) {
    Real r = relative_m_residual(M, e.matrix);
    K.checks.push_back({e.label + " in kernel", r <= tiny, r});
  };

  // For s = 2 and zeta outside {-1, 0} there is no rank-one kernel element
  // with u_2 = 0, v_1 = 0; the kernel is described by the explicit
  // two-stage basis instead.
  const bool two_stage = M.kind == BasisKind::odd && s == 2 && rule.zeta != 0 &&
                         rule.zeta != -1;
  if (M.kind == BasisKind::even || rule.zeta == -1 || two_stage) {
    K.structured.push_back(n1);
    if (two_stage) {
      const RealMatrix ones_b = factored_matrix(rule, one, one);
      const RealMatrix ones_bc = factored_matrix(rule, one, UniPoly{0, 1});
      const RealMatrix c_bc = factored_matrix(rule, UniPoly{0, 1}, UniPoly{0, 1});
      const Real z = to_real(rule.zeta);
      K.structured.push_back({"N2", Real(2) * ones_b + Real(3) * (ones_bc - Real(2) * c_bc), {}, {}});
      K.structured.push_back({"N3", Real(2 * z) * ones_b + Real(3) * (Real(7) * ones_bc - Real(6) * c_bc), {}, {}});
    } else if (M.kind == BasisKind::odd) {
      UniPoly dv = legendre(s).derivative() - legendre(s - 1).derivative();
      for (unsigned i = 1; i <= s; ++i)
        K.structured.push_back({"N" + std::to_string(i + 1),
                                factored_matrix(rule, legendre(i - 1), dv), unit(s, {}),
                                unit(s, {})});
      for (unsigned i = 1; i <= s; ++i) {
        auto& e = K.structured[i];
        e.u[i - 1] = 1;
        e.v[s - 1] = 1;
        if (s >= 2) e.v[s - 2] = -1;
      }
    }
    for (const auto& e : K.structured) add_element_checks(e);
    std::vector<RealVec> coords;
    RealMatrix V(s * s, K.structured.size());
    for (std::size_t j = 0; j < K.structured.size(); ++j) {
      coords.push_back(coordinates(M, K.structured[j].matrix));
      V.set_column(j, flat(K.structured[j].matrix));
    }
    const std::size_t indep = numerical_rank(V, K.tolerance);
    K.checks.push_back({"closed-form elements independent", indep == K.structured.size(),
                        Real(indep)});
    Real dist = span_distance(coords, K.raw_coords);
    K.checks.push_back({"kernel spanned by closed-form elements",
                        K.kernel_dim == K.structured.size() && dist <= tiny, dist});
    return K;
  }

  // Odd case, zeta != -1: two further rank-one elements fixed by the
  // coefficient patterns u_1 = 1, u_2 = 0, v_1 = 0 and u_1 = 0, u_2 = 1,
  // sum v = 0.
  const bool gauss = rule.zeta == 0;
  auto n2 = constrained_element(M, K, cmap, [s](const RealMatrix& cf) {
    RealVec c;
    for (unsigned j = 0; j < s; ++j) c.push_back(cf(1, j));
    for (unsigned i = 0; i < s; ++i) c.push_back(cf(i, 0));
    return c;
  });
  auto n3 = constrained_element(M, K, cmap, [s](const RealMatrix& cf) {
    RealVec c;
    for (unsigned j = 0; j < s; ++j) c.push_back(cf(0, j));
    for (unsigned i = 0; i < s; ++i) {
      Real r = 0;
      for (unsigned j = 0; j < s; ++j) r += cf(i, j);
      c.push_back(r);
    }
    return c;
  });
  K.checks.push_back({"N2 pattern determines a unique direction", n2.has_value(), Real(0)});
  K.checks.push_back({"N3 pattern determines a unique direction", n3.has_value(), Real(0)});
  K.structured.push_back(n1);
  if (!n2 || !n3) return K;

  auto factor = [&](const RealMatrix& N, unsigned urow, unsigned vnorm,
                    const std::string& label) {
    RealMatrix cf = cmap.to_coeffs(N);
    Real defect = rank_one_defect(cf);
    K.checks.push_back({label + " rank one", defect <= K.tolerance, defect});
    std::size_t bj = 0;
    for (std::size_t j = 0; j < s; ++j)
      if (abs(cf(urow, j)) > abs(cf(urow, bj))) bj = j;
    RealVec u = cf.column(bj);
    for (auto& x : u) x /= cf(urow, bj);
    RealVec v(s);
    for (unsigned j = 0; j < s; ++j) v[j] = cf(urow, j);
    const Real lam = v[vnorm];
    for (auto& x : v) x /= lam;
    KernelElement e{label, cmap.from_factors(u, v), u, v};
    add_element_checks(e);
    return e;
  };
  // v_s = 1 generally; the Gauss normalization fixes v_2 = 1 and v_1 = 1.
  KernelElement e2 = factor(*n2, 0, gauss ? 1 : s - 1, "N2");
  KernelElement e3 = factor(*n3, 1, gauss ? 0 : s - 1, "N3");
  add_element_checks(n1);
  K.structured.push_back(e2);
  K.structured.push_back(e3);

  Real v0_3 = 0;
  for (const auto& x : e3.v) v0_3 += x;
  Real pattern = std::max({Real(abs(e2.u[0] - 1)), Real(abs(e2.u[1])), Real(abs(e2.v[0])),
                           Real(abs(e3.u[0])), Real(abs(e3.u[1] - 1)), Real(abs(v0_3))});
  K.checks.push_back({"coefficient pattern", pattern <= tiny * 1e5, pattern});

  std::vector<RealVec> coords;
  RealMatrix V(s * s, 3);
  for (std::size_t j = 0; j < 3; ++j) {
    coords.push_back(coordinates(M, K.structured[j].matrix));
    V.set_column(j, flat(K.structured[j].matrix));
  }
  const std::size_t indep = numerical_rank(V, K.tolerance);
  K.checks.push_back({"N1, N2, N3 independent", indep == 3, Real(indep)});
  Real dist = span_distance(coords, K.raw_coords);
  K.checks.push_back({"kernel spanned by N1, N2, N3", K.kernel_dim == 3 && dist <= tiny, dist});

  Real worst_rank = 0;
  if (s >= 3)
    for (const auto& N : K.raw) worst_rank = std::max(worst_rank, sv_ratio(N, 2));
  K.checks.push_back({"kernel elements have rank <= 2", worst_rank <= K.tolerance, worst_rank});

  RealVec u_rel(s), v_rel(s);
  for (unsigned i = 0; i < s; ++i) {
    u_rel[i] = e2.u[i] - n1.u[i];
    v_rel[i] = gauss ? Real(n1.v[i] - e2.v[i]) : Real(e2.v[i] + e3.v[0] * n1.v[i]);
  }
  Real rel = std::max(vec_diff(e3.u, u_rel), vec_diff(e3.v, v_rel));
  K.checks.push_back({"U3 = U2 - U1 and V3 relation", rel <= tiny * 1e5, rel});

  if (gauss) {
    Real gl = std::max({vec_diff(e2.u, unit(s, {1, 0, -1})), vec_diff(e2.v, unit(s, {0, 1})),
                        vec_diff(e3.u, unit(s, {0, 1, -1})), vec_diff(e3.v, unit(s, {1, -1}))});
    K.checks.push_back({"Gauss closed-form u, v", gl <= tiny * 1e5, gl});
  }
  return K;
}

std::optional<RealMatrix> kernel_rowsum(const MOperator& M, const KernelReport& kernel) {
  const unsigned s = M.s();
  PrecisionScope ps(M.rule.precision_digits);
  const std::size_t d = kernel.raw.size();
  if (d == 0) return std::nullopt;
  RealMatrix rs(s, d);
  for (std::size_t j = 0; j < d; ++j)
    for (unsigned i = 0; i < s; ++i) {
      Real r = 0;
      for (unsigned l = 0; l < s; ++l) r += kernel.raw[j](i, l);
      rs(i, j) = r;
    }
  auto ns = null_space(rs, kernel.tolerance);
  if (ns.basis.cols() == 0) return std::nullopt;
  if (ns.basis.cols() > 1)
    throw InternalError("zero-row-sum kernel has dimension " +
                        std::to_string(ns.basis.cols()));
  RealMatrix N(s, s);
  for (std::size_t j = 0; j < d; ++j) N += ns.basis(j, 0) * kernel.raw[j];
  Real big = 0;
  for (const auto& x : N.flat())
    if (abs(x) > abs(big)) big = x;
  N *= Real(1) / big;
  return N;
}

RealVec default_betas() {
  return {Real("1e-3"), Real("1e-2"), Real("1e-1"), Real(1)};
}

namespace {

void fit(Probe& pr) {
  const std::size_t n = pr.points.size();
  Real sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& pt : pr.points) {
    Real x = log(abs(pt.beta)), y = log(abs(pt.residual));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  pr.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  Real intercept = (sy - pr.slope * sx) / n;
  const auto& last = pr.points.back();
  Real sign = last.residual / pow(last.beta, pr.expected_exponent) < 0 ? Real(-1) : Real(1);
  pr.coeff = sign * exp(intercept);
  pr.coeff_rel_error = pr.expected_coeff == 0 ? Real(abs(pr.coeff))
                                             : Real(abs(pr.coeff - pr.expected_coeff) /
                                                    abs(pr.expected_coeff));
  pr.ok = abs(pr.slope - pr.expected_exponent) <= Real("1e-6") &&
          pr.coeff_rel_error <= Real("1e-12");
}

}  // namespace

SweepReport uniqueness_sweep(const QuadRule& rule, unsigned m, const RealVec& betas) {
  PrecisionScope ps(rule.precision_digits);
  if (betas.size() < 2) throw InputError("the sweep needs at least two beta values");
  for (const auto& b : betas)
    if (b == 0) throw InputError("beta values must be nonzero");

  const unsigned s = rule.s;
  const Rational& z = rule.zeta;
  SweepReport rep;
  rep.s = s;
  rep.zeta = z;
  rep.m = m;
  rep.perturbation_alignment = 0;

  MOperator M = build_M(rule, m);
  KernelReport K = rank_kernel(M, {});
  if (K.ambiguous) throw PrecisionError("rank decision is ambiguous at this precision");
  rep.N = kernel_rowsum(M, K);
  if (!rep.N) {
    rep.linear_uniqueness = true;
    rep.perturbation = "none: only N = 0 has zero row sums";
    rep.ok = true;
    return rep;
  }

  const Real zr = to_real(z);
  RealMatrix N;
  struct Spec {
    std::string name;
    unsigned exponent;
    Real coeff;
    std::function<Real(const RealMatrix&)> eval;
  };
  std::vector<Spec> specs;
  const UniPoly one{1};
  const UniPoly x = UniPoly::monomial(1);
  const UniPoly g2 = g_poly(2);

  if (s == 2) {
    N = factored_matrix(rule, UniPoly{z - 1, -2 * z}, UniPoly{1, -2});
    rep.perturbation = "((zeta-1) 1 - 2 zeta c) b^T (I - 2C)";
    if (z != 0)
      specs.push_back({"triple bush P=Q=G_2, R=1", 2, zr * zr * zr / 81,
                       [&](const RealMatrix& A) { return triple_bush_residual(A, rule, g2, g2, one, m); }});
    if (z != -1)
      specs.push_back({"asymmetric bush q=2", 2, -(1 + zr) * (1 + zr) / 36,
                       [&](const RealMatrix& A) { return asym_bush_residual(A, rule, 2, m); }});
  } else if (z == 0) {
    N = factored_matrix(rule, one - legendre(2), legendre(2).derivative());
    rep.perturbation = "(P_0 - P_2)(c) b^T P_2'(C)";
    Real g = Real(legendre_gamma(s));
    Real expect = pow(Real(6), s) / (g * g);
    if (s % 2 == 0) expect = -expect;
    specs.push_back({"asymmetric bush q=s", s, expect,
                     [&](const RealMatrix& A) { return asym_bush_residual(A, rule, s, m); }});
  } else if (z == -1) {
    UniPoly V = legendre(s).derivative() - legendre(s - 1).derivative() +
                Rational(s % 2 ? -1 : 1) * legendre(1).derivative();
    N = factored_matrix(rule, one - legendre(1), V);
    rep.perturbation = "(P_0 - P_1)(c) b^T ((-1)^s P_1' - P_{s-1}' + P_s')(C)";
    specs.push_back({"triple bush P=Q=G_2, R=1", 2, Real(-4) / 9,
                     [&](const RealMatrix& A) { return triple_bush_residual(A, rule, g2, g2, one, m); }});
    const UniPoly xg2 = x * g2;
    specs.push_back({"triple bush P=Q=x G_2, R=1", 2, Real(-1) / 9,
                     [&, xg2](const RealMatrix& A) {
                       return triple_bush_residual(A, rule, xg2, xg2, one, m);
                     }});
  } else {
    auto [u, v] = rank_one_factors(rule, *rep.N);
    const Real lam = v[s - 1];
    for (auto& a : u) a *= lam;
    for (auto& a : v) a /= lam;
    N = CoefficientMap(rule).from_factors(u, v);
    rep.perturbation = "rank-one zero-row-sum kernel element, v_s = 1";
    for (unsigned p = 1; p <= 2; ++p) {
      if (abs(u[p - 1]) < Real("1e-10")) continue;
      Real expect = u[p - 1] * u[p - 1] * (1 + zr) * (1 + zr) / ((2 * p - 1) * (2 * p - 1));
      const UniPoly gp = g_poly(p);
      specs.push_back({"triple bush P=Q=G_" + std::to_string(p) + ", R=x", 2, expect,
                       [&, gp](const RealMatrix& A) {
                         return triple_bush_residual(A, rule, gp, gp, x, m);
                       }});
    }
  }

  {
    // Sign-invariant distance of N from the line through the computed element.
    const RealVec a = N.flat(), b = rep.N->flat();
    const Real t = dot(a, b) / dot(b, b);
    RealVec d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - t * b[i];
    rep.perturbation_alignment = norm2(d) / norm2(a);
  }

  const RealMatrix avf = avf_matrix(rule);
  for (const auto& sp : specs) {
    Probe pr;
    pr.name = sp.name;
    pr.expected_exponent = sp.exponent;
    pr.expected_coeff = sp.coeff;
    for (const auto& beta : betas) pr.points.push_back({beta, sp.eval(avf + beta * N)});
    fit(pr);
    rep.probes.push_back(std::move(pr));
  }
  const Real tiny = pow10_neg(static_cast<int>(rule.precision_digits) - 15);
  rep.ok = !rep.probes.empty() && rep.perturbation_alignment <= tiny;
  for (const auto& pr : rep.probes) rep.ok = rep.ok && pr.ok;
  return rep;
}

}  // namespace eprk
