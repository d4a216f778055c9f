#pragma once

#include "eprk/linalg.hpp"
#include "eprk/numeric.hpp"
#include "eprk/quadrature.hpp"
#include "eprk/unipoly.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace eprk {

// A = c b^T.
RealMatrix avf_matrix(const QuadRule& rule);
// U(c) b^T V(C) for polynomials U, V.
RealMatrix factored_matrix(const QuadRule& rule, const UniPoly& U, const UniPoly& V);

// p b^T C^(p-1) A c^q - q b^T C^(q-1) A c^p - (1/(q+1) - 1/(p+1)),
// 1 <= p < q <= m-1; m defaults to the rule order.
Real double_bush_residual(const RealMatrix& A, const QuadRule& rule, unsigned p, unsigned q,
                          std::optional<unsigned> m = {});

// b^T P'(C) A Q(c) - b^T Q'(C) A P(c) - (P(1) int Q - Q(1) int P).
Real double_bush_poly_residual(const RealMatrix& A, const QuadRule& rule, const UniPoly& P,
                               const UniPoly& Q, std::optional<unsigned> m = {});

Real triple_bush_residual(const RealMatrix& A, const QuadRule& rule, const UniPoly& P,
                          const UniPoly& Q, const UniPoly& R, std::optional<unsigned> m = {});

// b^T (Ac)^q - q b^T A C (Ac)^(q-1) + q b^T C (Ac)^(q-1) - (1/2)^q.
Real asym_bush_residual(const RealMatrix& A, const QuadRule& rule, unsigned q,
                        std::optional<unsigned> m = {});

enum class BasisKind { even, odd };

// The double bush conditions as a linear map on s x s matrices, written in a
// Legendre tableau basis P_{k-1}(c) b^T V_l(C).
struct MOperator {
  QuadRule rule;
  unsigned m = 0;
  BasisKind kind = BasisKind::even;
  std::vector<std::pair<unsigned, unsigned>> rows;       // (p, q)
  std::vector<std::pair<UniPoly, UniPoly>> row_polys;    // (P, Q) per row
  std::vector<UniPoly> v_polys;                          // V_l, l = 1..s
  std::vector<RealMatrix> basis;                         // column j = (k-1) s + (l-1)
  RealMatrix matrix;                                     // rows x s^2, homogeneous part
  RealVec w;                                             // right-hand side per row

  unsigned s() const { return rule.s; }
  // Homogeneous condition values for an arbitrary A.
  RealVec apply(const RealMatrix& A) const;
  // Matrix with the given coordinates in the basis.
  RealMatrix combine(const std::vector<Real>& coords) const;
};

// m = 2s needs zeta = 0 (even kind); m = 2s-1 gives the odd kind.
MOperator build_M(const QuadRule& rule, unsigned m);

// Exact rational construction of the polynomial P~_s; for zeta = -1 the
// fallback P_s - P_{s-1}.
UniPoly build_p_tilde(unsigned s, const Rational& zeta);

struct Check {
  std::string name;
  bool ok = false;
  Real value;  // residual or measure the verdict was based on
};

struct KernelElement {
  std::string label;
  RealMatrix matrix;
  // Coefficients of U over P_{k-1} and of V over P_l'; empty when the
  // element is not treated as rank one.
  RealVec u;
  RealVec v;
};

struct KernelReport {
  std::size_t rank = 0;
  std::size_t kernel_dim = 0;
  bool ambiguous = false;
  Real tolerance;
  std::vector<Real> pivot_ratios;
  // Orthonormal kernel in basis coordinates, and the matching matrices.
  RealMatrix raw_coords;
  std::vector<RealMatrix> raw;
  // Kernel elements in closed form, when recognised.
  std::vector<KernelElement> structured;
  std::vector<Check> checks;

  bool all_checks_pass() const;
};

// Default relative pivot threshold 10^(-digits/2).
Real default_rank_tolerance(const QuadRule& rule);

KernelReport rank_kernel(const MOperator& M, std::optional<Real> tol = {});

// Expected rank from the known closed forms, when one applies.
std::optional<std::size_t> expected_rank(unsigned s, const Rational& zeta, unsigned m);

// The kernel element with zero row sums, scaled so its largest entry is +1;
// nullopt when only the zero matrix qualifies. Throws InternalError if the
// intersection has dimension above one.
std::optional<RealMatrix> kernel_rowsum(const MOperator& M, const KernelReport& kernel);

// Coefficients (u over P_{k-1}, v over P_l') of a rank-one N = U(c) b^T V(C).
std::pair<RealVec, RealVec> rank_one_factors(const QuadRule& rule, const RealMatrix& N);

struct ProbePoint {
  Real beta;
  Real residual;
};

struct Probe {
  std::string name;
  unsigned expected_exponent = 2;
  Real expected_coeff;
  std::vector<ProbePoint> points;
  Real slope;
  Real coeff;
  Real coeff_rel_error;
  bool ok = false;
};

struct SweepReport {
  unsigned s = 0;
  Rational zeta;
  unsigned m = 0;
  // True when no nonzero kernel element has zero row sums: the linear
  // conditions alone force A = c b^T.
  bool linear_uniqueness = false;
  std::string perturbation;      // description of N
  Real perturbation_alignment;   // distance of the closed-form N from the computed one
  std::optional<RealMatrix> N;
  std::vector<Probe> probes;
  bool ok = false;
};

RealVec default_betas();

SweepReport uniqueness_sweep(const QuadRule& rule, unsigned m,
                             const RealVec& betas = default_betas());

}  // namespace eprk
