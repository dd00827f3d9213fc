#include "vid2ode/trajectory.hpp"

#include <fstream>
#include <sstream>

#include "vid2ode/rk4.hpp"
#include "vid2ode/util.hpp"

namespace vid2ode::dyn {

Trajectory simulate(const SystemSpec& system, const StateVec& x0, int n_steps,
                    double dt) {
  if (n_steps < 3) throw Error("simulate: n_steps must be >= 3");
  if (dt <= 0) throw Error("simulate: dt must be positive");
  if (!x0.allFinite()) throw Error("simulate: non-finite initial condition");
  const int substeps = 10;
  const double h = dt / substeps;
  auto f = [&](const StateVec& x) { return system.rhs(x); };

  Trajectory traj;
  traj.dt = dt;
  traj.states.resize(n_steps, system.state_dim);
  Eigen::MatrixXd deriv(n_steps, system.state_dim);
  StateVec x = x0;
  for (int k = 0; k < n_steps; ++k) {
    traj.states.row(k) = x.transpose();
    deriv.row(k) = system.rhs(x).transpose();
    if (k + 1 == n_steps) break;
    for (int s = 0; s < substeps; ++s) {
      try {
        x = rk4_step(f, x, h);
      } catch (const Error&) {
        throw Error("integration diverged at sample " + std::to_string(k + 1) +
                    " of system " + system.name);
      }
    }
  }
  traj.derivative = std::move(deriv);
  return traj;
}

Eigen::MatrixXd central_difference(const Eigen::MatrixXd& states, double dt) {
  if (states.rows() < 3)
    throw Error("central_difference: need at least 3 samples");
  if (dt <= 0) throw Error("central_difference: dt must be positive");
  Eigen::MatrixXd d(states.rows() - 2, states.cols());
  for (Eigen::Index k = 1; k + 1 < states.rows(); ++k)
    d.row(k - 1) = (states.row(k + 1) - states.row(k - 1)) / (2.0 * dt);
  return d;
}

Eigen::MatrixXd central_difference(const Trajectory& traj) {
  return central_difference(traj.states, traj.dt);
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "t";
  for (int i = 0; i < traj.dim(); ++i) out << ",x" << i + 1;
  out << "\n";
  for (int k = 0; k < traj.samples(); ++k) {
    out << format_double(k * traj.dt);
    for (int i = 0; i < traj.dim(); ++i)
      out << "," << format_double(traj.states(k, i));
    out << "\n";
  }
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty trajectory CSV: " + path);
  int dim = -1;  // header t,x1,...,xd
  for (char ch : line)
    if (ch == ',') ++dim;
  ++dim;
  if (dim < 1) throw Error("bad trajectory CSV header: " + path);
  std::vector<double> times;
  std::vector<double> flat;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    times.push_back(std::stod(cell));
    for (int i = 0; i < dim; ++i) {
      if (!std::getline(ss, cell, ','))
        throw Error("short row in trajectory CSV: " + path);
      flat.push_back(std::stod(cell));
    }
  }
  if (times.size() < 2) throw Error("trajectory CSV needs >= 2 rows: " + path);
  Trajectory traj;
  traj.dt = times[1] - times[0];
  traj.states.resize(static_cast<Eigen::Index>(times.size()), dim);
  for (std::size_t k = 0; k < times.size(); ++k)
    for (int i = 0; i < dim; ++i)
      traj.states(static_cast<Eigen::Index>(k), i) = flat[k * dim + i];
  return traj;
}

}  // namespace vid2ode::dyn
