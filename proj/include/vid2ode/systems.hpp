#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vid2ode/library.hpp"
#include "vid2ode/rk4.hpp"

namespace vid2ode::dyn {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// One of the six benchmark ODE systems. Second-order systems are stored in
// lifted form: state (x, y, u, v) with u = dx/dt, v = dy/dt; the video shows
// only (x, y). true_coefficients holds the unknown equation rows (both rows
// for first-order systems; the acceleration rows f, g for second-order ones)
// over `library`.
struct SystemSpec {
  std::string name;
  int order = 1;            // 1 or 2
  int state_dim = 2;        // 2 (first order) or 4 (lifted second order)
  int library_degree = 3;   // candidate polynomial order used in the paper
  features::LibrarySpec library;
  features::CoefficientMatrix true_coefficients;
  std::vector<Interval> ic_range;  // one per state variable
  // Returns true when an initial condition must be rejected.
  std::function<bool(const StateVec&)> ic_rejection;

  StateVec rhs(const StateVec& x) const;
};

const SystemSpec& system_by_name(const std::string& name);
std::vector<std::string> system_names();

std::vector<StateVec> sample_initial_conditions(const SystemSpec& system,
                                                int count, std::uint64_t seed);

}  // namespace vid2ode::dyn
