#include "eprk/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eprk {

namespace {

double inf_norm(const State& x) {
  double m = 0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double scale_of(const State& y) { return std::max(1.0, inf_norm(y)); }

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tolerance > 0)) throw InputError("solver tolerance must be positive");
  if (max_iterations < 1) throw InputError("solver needs at least one iteration");
  if (!(stall_ratio > 0 && stall_ratio < 1)) throw InputError("stall ratio must lie in (0, 1)");
}

ButcherTableau avf_tableau(const QuadRule& rule) {
  PrecisionScope ps(rule.precision_digits);
  return ButcherTableau{outer(rule.c, rule.b), rule.b, rule.c, rule.precision_digits};
}

Method Method::avf() { return Method{}; }

Method Method::rk(ButcherTableau tab, std::string name) {
  Method m;
  m.kind = MethodKind::rk;
  m.tableau = std::move(tab);
  m.name = std::move(name);
  return m;
}

Method Method::midpoint() { return rk(avf_tableau(quad_rule(1, 0)), "midpoint"); }

Method Method::explicit_euler() {
  ButcherTableau tab;
  tab.A = RealMatrix(1, 1);
  tab.b = {Real(1)};
  tab.c = {Real(0)};
  return rk(std::move(tab), "euler");
}

Stepper::Stepper(const HamiltonianSystem& sys, Method method, SolverConfig cfg)
    : n_(sys.dim()), method_(std::move(method)), cfg_(cfg), h_(sys.H()) {
  cfg_.validate();
  for (const auto& fk : sys.vector_field()) {
    f_.emplace_back(fk);
    std::vector<CompiledPoly> row;
    for (unsigned l = 0; l < n_; ++l) row.emplace_back(fk.partial(l));
    jac_.push_back(std::move(row));
  }
  if (method_.kind == MethodKind::rk) {
    const auto& tab = method_.tableau;
    const unsigned s = tab.stages();
    if (s == 0 || tab.A.rows() != s || tab.A.cols() != s || tab.c.size() != s)
      throw InputError("inconsistent Butcher tableau");
    a_ = Matrix<double>(s, s);
    for (unsigned i = 0; i < s; ++i) {
      b_.push_back(tab.b[i].convert_to<double>());
      for (unsigned j = 0; j < s; ++j) a_(i, j) = tab.A(i, j).convert_to<double>();
    }
  }
}

State Stepper::f(const State& y) const {
  State out(n_);
  for (unsigned k = 0; k < n_; ++k) out[k] = f_[k].eval(y);
  return out;
}

State Stepper::step(const State& y, double h, StepStats* stats) const {
  if (y.size() != n_) throw InputError("state dimension does not match the system");
  if (h == 0 || !std::isfinite(h)) throw InputError("step size must be finite and nonzero");
  StepStats st;
  State out = method_.kind == MethodKind::avf ? step_avf(y, h, st) : step_rk(y, h, st);
  if (stats) *stats = st;
  return out;
}

// y1 = y0 + h * int_0^1 f((1-xi) y0 + xi y1) dxi
State Stepper::step_avf(const State& y0, double h, StepStats& st) const {
  auto residual_map = [&](const State& y1) {
    State g(n_);
    for (unsigned k = 0; k < n_; ++k) g[k] = y0[k] + h * f_[k].segment_moment(y0, y1, 0);
    return g;
  };
  State y1 = y0;
  const State f0 = f(y0);
  for (unsigned k = 0; k < n_; ++k) y1[k] += h * f0[k];

  bool newton = false;
  double prev = std::numeric_limits<double>::infinity();
  unsigned polish = 0;
  for (unsigned it = 1; it <= cfg_.max_iterations; ++it) {
    State next;
    if (!newton) {
      next = residual_map(y1);
    } else {
      // (I - h J) delta = g(y1) - y1, J_kl = int xi d f_k/d y_l
      State g = residual_map(y1);
      Matrix<double> m(n_, n_);
      State rhs(n_);
      for (unsigned k = 0; k < n_; ++k) {
        rhs[k] = g[k] - y1[k];
        for (unsigned l = 0; l < n_; ++l)
          m(k, l) = (k == l ? 1.0 : 0.0) - h * jac_[k][l].segment_moment(y0, y1, 1);
      }
      State delta = lu_solve(m, rhs);
      next = y1;
      for (unsigned k = 0; k < n_; ++k) next[k] += delta[k];
      ++st.newton_iterations;
    }
    double inc = 0;
    for (unsigned k = 0; k < n_; ++k) inc = std::max(inc, std::abs(next[k] - y1[k]));
    y1 = std::move(next);
    st.iterations = it;
    st.increment = inc;
    const double tol = cfg_.tolerance * scale_of(y1);
    if (!std::isfinite(inc)) break;
    if (inc <= tol) {
      // One extra sweep pushes the error well below the tolerance so that
      // the energy error does not accumulate a systematic bias.
      if (polish++ >= 1 || inc <= 4 * std::numeric_limits<double>::epsilon() * scale_of(y1))
        return y1;
      continue;
    }
    if (!newton && inc > cfg_.stall_ratio * prev) newton = true;
    prev = inc;
  }
  throw SolverError("AVF step did not converge", y1, st.increment);
}

// Stages Y_i = y + h sum_j a_ij f(Y_j), solved simultaneously.
State Stepper::step_rk(const State& y, double h, StepStats& st) const {
  const unsigned s = static_cast<unsigned>(b_.size());
  std::vector<State> Y(s, y);
  std::vector<State> F(s, f(y));
  bool newton = false;
  double prev = std::numeric_limits<double>::infinity();
  unsigned polish = 0;
  bool converged = false;
  for (unsigned it = 1; it <= cfg_.max_iterations; ++it) {
    std::vector<State> next(s, y);
    if (!newton) {
      for (unsigned i = 0; i < s; ++i)
        for (unsigned j = 0; j < s; ++j) {
          if (a_(i, j) == 0) continue;
          for (unsigned k = 0; k < n_; ++k) next[i][k] += h * a_(i, j) * F[j][k];
        }
    } else {
      const unsigned N = s * n_;
      Matrix<double> m(N, N);
      State rhs(N);
      for (unsigned i = 0; i < s; ++i) {
        for (unsigned k = 0; k < n_; ++k) {
          double g = y[k] - Y[i][k];
          for (unsigned j = 0; j < s; ++j) g += h * a_(i, j) * F[j][k];
          rhs[i * n_ + k] = g;
        }
        for (unsigned j = 0; j < s; ++j) {
          if (a_(i, j) == 0 && i != j) continue;
          for (unsigned k = 0; k < n_; ++k)
            for (unsigned l = 0; l < n_; ++l) {
              double v = -h * a_(i, j) * jac_[k][l].eval(Y[j]);
              if (i == j && k == l) v += 1;
              m(i * n_ + k, j * n_ + l) = v;
            }
        }
      }
      State delta = lu_solve(m, rhs);
      for (unsigned i = 0; i < s; ++i)
        for (unsigned k = 0; k < n_; ++k) next[i][k] = Y[i][k] + delta[i * n_ + k];
      ++st.newton_iterations;
    }
    double inc = 0, scale = 1;
    for (unsigned i = 0; i < s; ++i) {
      for (unsigned k = 0; k < n_; ++k) inc = std::max(inc, std::abs(next[i][k] - Y[i][k]));
      scale = std::max(scale, inf_norm(next[i]));
    }
    Y = std::move(next);
    for (unsigned i = 0; i < s; ++i) F[i] = f(Y[i]);
    st.iterations = it;
    st.increment = inc;
    if (!std::isfinite(inc)) break;
    if (inc <= cfg_.tolerance * scale) {
      if (polish++ >= 1 || inc <= 4 * std::numeric_limits<double>::epsilon() * scale) {
        converged = true;
        break;
      }
      continue;
    }
    if (!newton && inc > cfg_.stall_ratio * prev) newton = true;
    prev = inc;
  }
  if (!converged) throw SolverError("Runge-Kutta stage iteration did not converge", Y.back(), st.increment);
  State out = y;
  for (unsigned i = 0; i < s; ++i)
    for (unsigned k = 0; k < n_; ++k) out[k] += h * b_[i] * F[i][k];
  return out;
}

State avf_step(const HamiltonianSystem& sys, const State& y, double h, const SolverConfig& cfg) {
  return Stepper(sys, Method::avf(), cfg).step(y, h);
}

State rk_step(const HamiltonianSystem& sys, const ButcherTableau& tab, const State& y, double h,
              const SolverConfig& cfg) {
  return Stepper(sys, Method::rk(tab), cfg).step(y, h);
}

double IntegrationRun::max_drift() const {
  double m = 0;
  for (double e : energies) m = std::max(m, std::abs(e - energies.front()));
  return m;
}

double IntegrationRun::drift_slope() const {
  if (energies.size() < 2) return 0;
  std::vector<double> n, d;
  for (std::size_t k = 0; k < energies.size(); ++k) {
    n.push_back(static_cast<double>(k));
    d.push_back(energies[k] - energies.front());
  }
  return least_squares_slope(n, d);
}

IntegrationRun integrate(const HamiltonianSystem& sys, const Method& method, const State& y0,
                         double h, unsigned n_steps, const SolverConfig& cfg) {
  if (n_steps < 1) throw InputError("integrate needs at least one step");
  Stepper stepper(sys, method, cfg);
  IntegrationRun run;
  run.times.push_back(0);
  run.states.push_back(y0);
  run.energies.push_back(stepper.energy(y0));
  run.iterations.push_back(0);
  run.newton_iterations.push_back(0);
  State y = y0;
  for (unsigned n = 1; n <= n_steps; ++n) {
    StepStats st;
    try {
      y = stepper.step(y, h, &st);
    } catch (SolverError& e) {
      e.step_index = n;
      throw;
    }
    run.times.push_back(n * h);
    run.states.push_back(y);
    run.energies.push_back(stepper.energy(y));
    run.iterations.push_back(st.iterations);
    run.newton_iterations.push_back(st.newton_iterations);
  }
  return run;
}

OrderFit convergence_order(const HamiltonianSystem& sys, const Method& method, const State& y0,
                           double t_end, const std::vector<double>& step_sizes,
                           const SolverConfig& cfg) {
  if (step_sizes.size() < 3) throw InputError("order fit needs at least three step sizes");
  if (!(t_end > 0)) throw InputError("t_end must be positive");
  auto steps_for = [&](double h) {
    if (!(h > 0)) throw InputError("step sizes must be positive");
    const double n = std::round(t_end / h);
    if (n < 1 || std::abs(n * h - t_end) > 1e-9 * t_end)
      throw InputError("step size does not divide t_end");
    return static_cast<unsigned>(n);
  };
  const double h_min = *std::min_element(step_sizes.begin(), step_sizes.end());
  const double h_ref = h_min / 32;
  const State ref = integrate(sys, method, y0, h_ref, steps_for(h_min) * 32, cfg).states.back();
  OrderFit fit;
  std::vector<double> lx, ly;
  for (double h : step_sizes) {
    const State yn = integrate(sys, method, y0, h, steps_for(h), cfg).states.back();
    double err = 0;
    for (std::size_t k = 0; k < yn.size(); ++k) err = std::max(err, std::abs(yn[k] - ref[k]));
    fit.step_sizes.push_back(h);
    fit.errors.push_back(err);
    lx.push_back(std::log(h));
    ly.push_back(std::log(err));
  }
  fit.slope = least_squares_slope(lx, ly);
  return fit;
}

}  // namespace eprk
