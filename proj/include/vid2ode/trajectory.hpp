#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "vid2ode/systems.hpp"

namespace vid2ode::dyn {

// Uniformly sampled state time series. `derivative`, when present, holds the
// exact right-hand side evaluated at each sample (same shape as states).
struct Trajectory {
  Eigen::MatrixXd states;  // m x d
  double dt = 0.0;
  std::optional<Eigen::MatrixXd> derivative;

  int samples() const { return static_cast<int>(states.rows()); }
  int dim() const { return static_cast<int>(states.cols()); }
};

// Fixed-step RK4 simulation on the frame grid, with a 10x internal substep
// refinement so the generator error stays below the frame-grid truncation.
// Records the exact rhs as the derivative series.
Trajectory simulate(const SystemSpec& system, const StateVec& x0, int n_steps,
                    double dt);

// Interior central differences (x_{k+1} - x_{k-1}) / (2 dt); returns an
// (m-2) x d matrix covering samples 1..m-2. Endpoints carry no estimate and
// are dropped from derivative-dependent losses.
Eigen::MatrixXd central_difference(const Eigen::MatrixXd& states, double dt);
Eigen::MatrixXd central_difference(const Trajectory& traj);

// CSV with header t,x1,...,xd and full double precision.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace vid2ode::dyn
