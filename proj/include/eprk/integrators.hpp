#pragma once

#include "eprk/hamiltonian.hpp"
#include "eprk/quadrature.hpp"
#include "eprk/trees.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace eprk {

using State = std::vector<double>;

// Fixed-point iteration, switching to Newton with the exact polynomial
// Jacobian once a sweep fails to shrink the increment by stall_ratio.
// Converged when ||increment||_inf <= tolerance * max(1, ||y||_inf).
struct SolverConfig {
  double tolerance = 1e-14;
  unsigned max_iterations = 100;
  double stall_ratio = 0.5;

  void validate() const;
};

struct StepStats {
  unsigned iterations = 0;         // total sweeps
  unsigned newton_iterations = 0;  // sweeps done by Newton
  double increment = 0;            // last accepted increment, max norm
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, State last_iterate, double residual)
      : std::runtime_error(what), last_iterate(std::move(last_iterate)), residual(residual) {}

  State last_iterate;
  double residual;
  long step_index = -1;  // filled in by integrate
};

// A = c b^T.
ButcherTableau avf_tableau(const QuadRule& rule);

enum class MethodKind { avf, rk };

// avf uses the exact line average of f; rk runs the given tableau.
struct Method {
  MethodKind kind = MethodKind::avf;
  ButcherTableau tableau;
  std::string name = "avf";

  static Method avf();
  static Method rk(ButcherTableau tab, std::string name = "rk");
  static Method midpoint();
  static Method explicit_euler();
};

// Compiles f and its Jacobian once; step() may be called repeatedly.
class Stepper {
 public:
  Stepper(const HamiltonianSystem& sys, Method method, SolverConfig cfg = {});

  // h may be negative (time reversal); h = 0 is rejected.
  State step(const State& y, double h, StepStats* stats = nullptr) const;
  double energy(const State& y) const { return h_.eval(y); }
  const Method& method() const { return method_; }
  unsigned dim() const { return n_; }

 private:
  State f(const State& y) const;
  State step_avf(const State& y, double h, StepStats& st) const;
  State step_rk(const State& y, double h, StepStats& st) const;

  unsigned n_;
  Method method_;
  SolverConfig cfg_;
  CompiledPoly h_;
  std::vector<CompiledPoly> f_;
  std::vector<std::vector<CompiledPoly>> jac_;  // jac_[k][l] = d f_k / d y_l
  Matrix<double> a_;
  std::vector<double> b_;
};

State avf_step(const HamiltonianSystem& sys, const State& y, double h,
               const SolverConfig& cfg = {});
State rk_step(const HamiltonianSystem& sys, const ButcherTableau& tab, const State& y, double h,
              const SolverConfig& cfg = {});

struct IntegrationRun {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<double> energies;        // H(states[k])
  std::vector<unsigned> iterations;    // per step; iterations[0] = 0 for the initial state
  std::vector<unsigned> newton_iterations;

  double max_drift() const;
  // Least-squares slope of H(y_n) - H(y_0) against n.
  double drift_slope() const;
};

IntegrationRun integrate(const HamiltonianSystem& sys, const Method& method, const State& y0,
                         double h, unsigned n_steps, const SolverConfig& cfg = {});

struct OrderFit {
  std::vector<double> step_sizes;
  std::vector<double> errors;  // max norm at t_end against the reference
  double slope = 0;
};

// Reference solution from the same method at min(h) / 32. Every h must
// divide t_end.
OrderFit convergence_order(const HamiltonianSystem& sys, const Method& method, const State& y0,
                           double t_end, const std::vector<double>& step_sizes,
                           const SolverConfig& cfg = {});

}  // namespace eprk
