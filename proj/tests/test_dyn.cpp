#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "vid2ode/systems.hpp"
#include "vid2ode/trajectory.hpp"
#include "test_support.hpp"

using namespace vid2ode;
using dyn::StateVec;

namespace {

// Damped rotation dx/dt = A x with A = [[-0.1, 1], [-1, -0.1]]; the exact
// solution is e^{-0.1 t} times a rotation by angle t.
StateVec damped_rotation(const StateVec& x) {
  StateVec y(2);
  y[0] = -0.1 * x[0] + x[1];
  y[1] = -x[0] - 0.1 * x[1];
  return y;
}

StateVec damped_rotation_exact(const StateVec& x0, double t) {
  double decay = std::exp(-0.1 * t);
  StateVec y(2);
  y[0] = decay * (std::cos(t) * x0[0] + std::sin(t) * x0[1]);
  y[1] = decay * (-std::sin(t) * x0[0] + std::cos(t) * x0[1]);
  return y;
}

template <typename Rhs>
StateVec integrate(const Rhs& f, StateVec x, double T, double h) {
  int n = static_cast<int>(std::llround(T / h));
  for (int i = 0; i < n; ++i) x = dyn::rk4_step(f, x, h);
  return x;
}

// Mean log2 error ratio between successive halvings of h.
template <typename Rhs>
double convergence_slope(const Rhs& f, const StateVec& x0, double T,
                         const StateVec& ref) {
  std::vector<double> errs;
  for (double h : {0.1, 0.05, 0.025, 0.0125})
    errs.push_back((integrate(f, x0, T, h) - ref).norm());
  double slope = 0.0;
  for (std::size_t i = 0; i + 1 < errs.size(); ++i)
    slope += std::log2(errs[i] / errs[i + 1]);
  return slope / (errs.size() - 1);
}

}  // namespace

TEST_CASE("rk4 matches the exact linear-system solution") {
  StateVec x0(2);
  x0 << 1.0, 0.25;
  const double T = 2.0, h = 0.0125;
  StateVec got = integrate(damped_rotation, x0, T, h);
  StateVec want = damped_rotation_exact(x0, T);
  CHECK((got - want).norm() < 1e-8);
}

TEST_CASE("rk4 convergence order is 4 on the linear system") {
  StateVec x0(2);
  x0 << 0.8, -0.3;
  double slope = convergence_slope(damped_rotation, x0, 2.0,
                                   damped_rotation_exact(x0, 2.0));
  CHECK(slope == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("rk4 convergence order is 4 on duffing and lifted osc2d") {
  for (const char* name : {"duffing", "osc2d"}) {
    const auto& sys = dyn::system_by_name(name);
    StateVec x0(sys.state_dim);
    for (int i = 0; i < sys.state_dim; ++i) x0[i] = 0.4 + 0.1 * i;
    auto f = [&](const StateVec& x) { return sys.rhs(x); };
    StateVec ref = integrate(f, x0, 2.0, 0.0003125);
    double slope = convergence_slope(f, x0, 2.0, ref);
    INFO("system ", name, " slope ", slope);
    CHECK(slope > 3.8);
    CHECK(slope < 4.2);
  }
}

TEST_CASE("backward step inverts a forward step to O(h^5)") {
  const auto& sys = dyn::system_by_name("vanderpol");
  auto f = [&](const StateVec& x) { return sys.rhs(x); };
  StateVec x0(2);
  x0 << 0.3, -0.2;
  for (double h : {0.05, 0.025}) {
    StateVec fwd = dyn::rk4_step(f, x0, h);
    StateVec back = dyn::rk4_step(f, fwd, -h);
    CHECK((back - x0).norm() < 10.0 * std::pow(h, 5));
  }
}

TEST_CASE("system rhs equals library contraction with true coefficients") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& name : dyn::system_names()) {
    const auto& sys = dyn::system_by_name(name);
    for (int trial = 0; trial < 100; ++trial) {
      StateVec x(sys.state_dim);
      for (int i = 0; i < sys.state_dim; ++i) x[i] = u(rng);
      Eigen::VectorXd eq = features::rhs(sys.library, sys.true_coefficients, x);
      StateVec full = sys.rhs(x);
      if (sys.order == 1) {
        CHECK((full - eq).norm() < 1e-12);
      } else {
        CHECK(full[0] == x[2]);
        CHECK(full[1] == x[3]);
        CHECK(std::abs(full[2] - eq[0]) < 1e-12);
        CHECK(std::abs(full[3] - eq[1]) < 1e-12);
      }
    }
  }
}

TEST_CASE("duffing rhs spot value") {
  const auto& sys = dyn::system_by_name("duffing");
  StateVec x(2);
  x << 0.5, 0.2;
  StateVec y = sys.rhs(x);
  CHECK(y[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(-0.77).epsilon(1e-12));
}

TEST_CASE("simulate is bitwise deterministic and records the exact rhs") {
  const auto& sys = dyn::system_by_name("cubic");
  StateVec x0(2);
  x0 << 0.9, -1.15;
  dyn::Trajectory a = dyn::simulate(sys, x0, 50, 0.05);
  dyn::Trajectory b = dyn::simulate(sys, x0, 50, 0.05);
  REQUIRE(a.states.rows() == b.states.rows());
  CHECK((a.states.array() == b.states.array()).all());
  REQUIRE(a.derivative.has_value());
  for (int k = 0; k < a.samples(); ++k) {
    StateVec want = sys.rhs(a.states.row(k).transpose());
    CHECK((a.derivative->row(k).transpose() - want).norm() < 1e-14);
  }
}

TEST_CASE("central differences are exact on a quadratic in t") {
  const double dt = 0.05;
  Eigen::MatrixXd states(10, 2);
  for (int k = 0; k < 10; ++k) {
    double t = k * dt;
    states(k, 0) = 1.0 + 2.0 * t + 3.0 * t * t;
    states(k, 1) = -0.5 * t * t;
  }
  Eigen::MatrixXd d = dyn::central_difference(states, dt);
  REQUIRE(d.rows() == 8);
  for (int k = 1; k <= 8; ++k) {
    double t = k * dt;
    CHECK(d(k - 1, 0) == doctest::Approx(2.0 + 6.0 * t).epsilon(1e-12));
    CHECK(d(k - 1, 1) == doctest::Approx(-t).epsilon(1e-12));
  }
}

TEST_CASE("initial-condition sampling is deterministic and respects rules") {
  const auto& sys = dyn::system_by_name("duffing");
  auto a = dyn::sample_initial_conditions(sys, 64, 9);
  auto b = dyn::sample_initial_conditions(sys, 64, 9);
  auto c = dyn::sample_initial_conditions(sys, 64, 10);
  REQUIRE(a.size() == 64);
  bool all_equal = true, any_diff_seed = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    all_equal = all_equal && (a[i] - b[i]).norm() == 0.0;
    any_diff_seed = any_diff_seed || (a[i] - c[i]).norm() > 0.0;
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
  for (const auto& x : a) {
    for (int i = 0; i < sys.state_dim; ++i) {
      CHECK(x[i] >= sys.ic_range[i].lo);
      CHECK(x[i] <= sys.ic_range[i].hi);
    }
    CHECK_FALSE(sys.ic_rejection(x));
  }
}

TEST_CASE("trajectory csv round trip") {
  TempDir tmp("traj");
  const auto& sys = dyn::system_by_name("vanderpol");
  StateVec x0(2);
  x0 << 0.2, 0.4;
  dyn::Trajectory t = dyn::simulate(sys, x0, 25, 0.05);
  std::string path = tmp.str("t.csv");
  dyn::write_trajectory_csv(path, t);
  dyn::Trajectory r = dyn::read_trajectory_csv(path);
  REQUIRE(r.samples() == t.samples());
  CHECK(r.dt == doctest::Approx(t.dt).epsilon(1e-15));
  CHECK((r.states - t.states).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("unknown system name raises a config error") {
  CHECK_THROWS_AS(dyn::system_by_name("lorenz"), ConfigError);
}
