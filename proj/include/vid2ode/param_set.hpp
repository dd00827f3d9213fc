#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vid2ode::grad {

// Named flat views over every trainable array, with per-name learning-rate
// multipliers and freeze flags. The views alias the owning structures, so an
// optimizer update is visible to the model immediately.
struct ParamGroup {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
  double lr_mult = 1.0;
  bool frozen = false;
};

class ParamSet {
 public:
  void add(std::string name, double* data, std::size_t size, double lr_mult = 1.0);
  void set_frozen(const std::string& name, bool frozen);
  void freeze_all();
  bool is_frozen(const std::string& name) const;
  ParamGroup& group(const std::string& name);
  const ParamGroup& group(const std::string& name) const;
  const std::vector<ParamGroup>& groups() const { return groups_; }
  std::vector<ParamGroup>& groups() { return groups_; }

  std::size_t total_size() const { return total_; }
  std::size_t offset_of(const std::string& name) const;

  Eigen::VectorXd gather() const;
  void scatter(const Eigen::VectorXd& flat);

 private:
  std::vector<ParamGroup> groups_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

// Reverse-mode vs central finite differences on randomly probed coordinates.
struct GradCheckEntry {
  std::string group;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  int probes = 0;
};

// loss_fn: evaluates the scalar loss at the ParamSet's current values.
// analytic: full gradient in ParamSet flat order. Probes per group are drawn
// deterministically from `seed`; denominator floors at `abs_floor` so
// near-zero gradient entries are compared absolutely.
std::vector<GradCheckEntry> grad_check(ParamSet& params,
                                       const std::function<double()>& loss_fn,
                                       const Eigen::VectorXd& analytic,
                                       int probes_per_group, double fd_step,
                                       std::uint64_t seed,
                                       double abs_floor = 1e-8);

}  // namespace vid2ode::grad
