#include "eprk/integrators.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace eprk;
using eprk::testing::mono;

namespace {

double max_diff(const State& a, const State& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

HamiltonianSystem harmonic() {
  return HamiltonianSystem(1, mono(2, {2, 0}, Rational(1, 2)) + mono(2, {0, 2}, Rational(1, 2)));
}

// p^2/2 + q^3
HamiltonianSystem cubic() {
  return HamiltonianSystem(1, mono(2, {0, 2}, Rational(1, 2)) + mono(2, {3, 0}, Rational(1)));
}

State f_at(const HamiltonianSystem& sys, const State& y) {
  State out;
  for (const auto& fk : sys.vector_field()) out.push_back(fk.eval(y));
  return out;
}

}  // namespace

TEST_CASE("AVF tableau") {
  auto t1 = avf_tableau(quad_rule(1, 0));
  CHECK(t1.A(0, 0) == Real(1) / 2);
  CHECK(t1.b[0] == 1);
  CHECK(t1.c[0] == Real(1) / 2);
  for (unsigned s = 1; s <= 5; ++s) CHECK(avf_tableau(quad_rule(s, 0)).rowsum_defect() < pow10_neg(45));
  auto t2 = avf_tableau(quad_rule(2, -1));
  CHECK(t2.c[0] == 0);
  CHECK(abs(t2.c[1] - Real(2) / 3) < pow10_neg(45));
  for (unsigned i = 0; i < 2; ++i)
    for (unsigned j = 0; j < 2; ++j) CHECK(abs(t2.A(i, j) - t2.c[i] * t2.b[j]) < pow10_neg(45));
}

TEST_CASE("solver configuration") {
  SolverConfig bad;
  bad.tolerance = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = SolverConfig{};
  bad.max_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  CHECK_THROWS_AS(avf_step(harmonic(), {1, 0}, 0.0), InputError);
  CHECK_THROWS_AS(avf_step(harmonic(), {1, 0, 0}, 0.1), InputError);
  CHECK_THROWS_AS(integrate(harmonic(), Method::avf(), {1, 0}, 0.1, 0), InputError);
}

TEST_CASE("AVF on quadratic H is the implicit midpoint rule") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  // H = (q1^2 + p1^2 + q2^2 + p2^2)/2 + q1 p2 / 3 - q2 p1 / 5
  const unsigned n = 4;
  MultiPoly H(n);
  for (unsigned i = 0; i < n; ++i) {
    Exponents e(n, 0);
    e[i] = 2;
    H.add_term(e, Rational(1, 2));
  }
  H.add_term({1, 0, 0, 1}, Rational(1, 3));
  H.add_term({0, 1, 1, 0}, Rational(-1, 5));
  HamiltonianSystem sys(2, H);
  SolverConfig cfg;
  for (int k = 0; k < 20; ++k) {
    State y{u(rng), u(rng), u(rng), u(rng)};
    const double h = 0.1 + 0.2 * std::abs(u(rng));
    State a = avf_step(sys, y, h, cfg);
    State m = rk_step(sys, Method::midpoint().tableau, y, h, cfg);
    CHECK(max_diff(a, m) <= 10 * cfg.tolerance);
    // Midpoint relation checked directly.
    State mid(4);
    for (unsigned i = 0; i < 4; ++i) mid[i] = (y[i] + a[i]) / 2;
    State fm = f_at(sys, mid);
    for (unsigned i = 0; i < 4; ++i) CHECK(std::abs(a[i] - y[i] - h * fm[i]) <= 1e-13);
  }
}

TEST_CASE("AVF conserves energy on a cubic Hamiltonian") {
  auto sys = cubic();
  SolverConfig cfg;
  cfg.tolerance = 1e-14;
  State y{1, 0};
  State y1 = avf_step(sys, y, 0.01, cfg);
  CHECK(std::abs(sys.H().eval(y1) - sys.H().eval(y)) <= 1e-12);
  CHECK(max_diff(y, y1) > 1e-4);
}

TEST_CASE("AVF step is consistent") {
  auto sys = cubic();
  State y{0.3, 0.4};
  State fy = f_at(sys, y);
  std::vector<double> errs;
  for (double h : {0.04, 0.02, 0.01, 0.005}) {
    State y1 = avf_step(sys, y, h);
    State euler{y[0] + h * fy[0], y[1] + h * fy[1]};
    errs.push_back(max_diff(y1, euler));
  }
  for (std::size_t k = 1; k < errs.size(); ++k) CHECK(errs[k - 1] / errs[k] == doctest::Approx(4).epsilon(0.05));
}

TEST_CASE("AVF and its Runge-Kutta discretization") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  SolverConfig cfg;
  for (unsigned deg = 3; deg <= 6; ++deg) {
    const unsigned s = (deg + 1) / 2;
    auto tab = avf_tableau(quad_rule(s, 0));
    for (unsigned d : {1u, 2u}) {
      auto sys = eprk::testing::random_hamiltonian(rng, d, deg);
      Stepper avf(sys, Method::avf(), cfg), rk(sys, Method::rk(tab), cfg);
      for (int k = 0; k < 5; ++k) {
        State y(2 * d);
        for (auto& v : y) v = u(rng);
        CHECK(max_diff(avf.step(y, 0.1), rk.step(y, 0.1)) <= 10 * cfg.tolerance);
      }
    }
  }
  // Degree 6 is beyond the reach of the order-4 two-stage rule.
  auto sys6 = HamiltonianSystem(
      1, mono(2, {0, 2}, Rational(1, 2)) + mono(2, {2, 0}, Rational(1, 2)) + mono(2, {6, 0}, Rational(1)) +
             mono(2, {3, 3}, Rational(1, 2)));
  State y{0.7, 0.5};
  double gap = max_diff(avf_step(sys6, y, 0.1), rk_step(sys6, avf_tableau(quad_rule(2, 0)), y, 0.1));
  CHECK(gap > 1e-8);
  CHECK(max_diff(avf_step(sys6, y, 0.1), rk_step(sys6, avf_tableau(quad_rule(3, 0)), y, 0.1)) <= 1e-13);
}

TEST_CASE("explicit Euler tableau") {
  auto sys = cubic();
  State y{0.25, -0.5};
  State got = rk_step(sys, Method::explicit_euler().tableau, y, 0.1);
  State fy = f_at(sys, y);
  CHECK(got[0] == y[0] + 0.1 * fy[0]);
  CHECK(got[1] == y[1] + 0.1 * fy[1]);
}

TEST_CASE("harmonic oscillator energy and time reversal") {
  SolverConfig cfg;
  auto run = integrate(harmonic(), Method::avf(), {1, 0}, 0.1, 1000, cfg);
  CHECK(run.states.size() == 1001);
  CHECK(run.times.size() == 1001);
  CHECK(run.energies.size() == 1001);
  CHECK(run.times.back() == doctest::Approx(100.0));
  CHECK(run.max_drift() <= 1e-12);
  for (std::size_t k = 0; k < run.states.size(); k += 97)
    CHECK(run.energies[k] == harmonic().H().eval(run.states[k]));

  auto sys = eprk::testing::quartic_oscillator();
  auto fwd = integrate(sys, Method::avf(), {0.5, 0.3}, 0.05, 200, cfg);
  auto back = integrate(sys, Method::avf(), fwd.states.back(), -0.05, 200, cfg);
  CHECK(max_diff(back.states.back(), {0.5, 0.3}) <= 1e-11);
}

TEST_CASE("Newton fallback on a stiff step") {
  // q'' = -100 q at h = 0.5: plain fixed-point iteration diverges.
  auto sys = HamiltonianSystem(1, mono(2, {0, 2}, Rational(1, 2)) + mono(2, {2, 0}, Rational(50)));
  Stepper st(sys, Method::avf());
  StepStats stats;
  State y{0.1, 0};
  State y1 = st.step(y, 0.5, &stats);
  CHECK(stats.newton_iterations > 0);
  CHECK(std::abs(st.energy(y1) - st.energy(y)) <= 1e-12);
  Stepper rk(sys, Method::rk(avf_tableau(quad_rule(2, 0))));
  State y2 = rk.step(y, 0.5, &stats);
  CHECK(stats.newton_iterations > 0);
  CHECK(max_diff(y1, y2) <= 1e-12);
}

TEST_CASE("solver failure carries diagnostics") {
  SolverConfig cfg;
  cfg.max_iterations = 2;
  auto sys = cubic();
  try {
    avf_step(sys, {0.3, 0.4}, 0.2, cfg);
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(e.last_iterate.size() == 2);
    CHECK(e.residual > 0);
  }
  try {
    integrate(sys, Method::avf(), {0.3, 0.4}, 0.2, 3, cfg);
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(e.step_index == 1);
  }
}

TEST_CASE("convergence order") {
  auto sys = eprk::testing::quartic_oscillator();
  const std::vector<double> hs{0.1, 0.05, 0.025, 0.0125};
  auto avf = convergence_order(sys, Method::avf(), {0.5, 0.3}, 2.0, hs);
  CHECK(avf.slope == doctest::Approx(2.0).epsilon(0.05));
  for (std::size_t k = 1; k < hs.size(); ++k)
    CHECK(avf.errors[k - 1] / avf.errors[k] == doctest::Approx(4).epsilon(0.1));
  auto mid = convergence_order(sys, Method::midpoint(), {0.5, 0.3}, 2.0, hs);
  CHECK(mid.slope == doctest::Approx(2.0).epsilon(0.05));
  CHECK_THROWS_AS(convergence_order(sys, Method::avf(), {0.5, 0.3}, 2.0, {0.1, 0.05}), InputError);
  CHECK_THROWS_AS(convergence_order(sys, Method::avf(), {0.5, 0.3}, 2.0, {0.1, 0.05, 0.03}), InputError);
}

TEST_CASE("long run drift on random Hamiltonians") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-0.25, 0.25);
  for (unsigned deg = 3; deg <= 6; ++deg) {
    auto sys = eprk::testing::random_hamiltonian(rng, 1 + deg % 2, deg);
    State y(sys.dim());
    for (auto& v : y) v = u(rng);
    auto run = integrate(sys, Method::avf(), y, 0.05, 2000);
    CAPTURE(deg);
    CHECK(run.max_drift() <= 1e-11);
    CHECK(std::abs(run.drift_slope()) <= 1e-15);
  }
}
