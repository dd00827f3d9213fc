#include "vid2ode/param_set.hpp"

#include <cmath>
#include <random>

#include "vid2ode/util.hpp"

namespace vid2ode::grad {

void ParamSet::add(std::string name, double* data, std::size_t size,
                   double lr_mult) {
  for (const auto& g : groups_)
    if (g.name == name) throw Error("duplicate parameter group: " + name);
  offsets_.push_back(total_);
  groups_.push_back({std::move(name), data, size, lr_mult, false});
  total_ += size;
}

void ParamSet::set_frozen(const std::string& name, bool frozen) {
  group(name).frozen = frozen;
}

void ParamSet::freeze_all() {
  for (auto& g : groups_) g.frozen = true;
}

bool ParamSet::is_frozen(const std::string& name) const {
  return group(name).frozen;
}

ParamGroup& ParamSet::group(const std::string& name) {
  for (auto& g : groups_)
    if (g.name == name) return g;
  throw Error("unknown parameter group: " + name);
}

const ParamGroup& ParamSet::group(const std::string& name) const {
  for (const auto& g : groups_)
    if (g.name == name) return g;
  throw Error("unknown parameter group: " + name);
}

std::size_t ParamSet::offset_of(const std::string& name) const {
  for (std::size_t i = 0; i < groups_.size(); ++i)
    if (groups_[i].name == name) return offsets_[i];
  throw Error("unknown parameter group: " + name);
}

Eigen::VectorXd ParamSet::gather() const {
  Eigen::VectorXd flat(total_);
  std::size_t off = 0;
  for (const auto& g : groups_) {
    for (std::size_t i = 0; i < g.size; ++i) flat[off + i] = g.data[i];
    off += g.size;
  }
  return flat;
}

void ParamSet::scatter(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != total_)
    throw Error("ParamSet::scatter: size mismatch");
  std::size_t off = 0;
  for (auto& g : groups_) {
    for (std::size_t i = 0; i < g.size; ++i) g.data[i] = flat[off + i];
    off += g.size;
  }
}

std::vector<GradCheckEntry> grad_check(ParamSet& params,
                                       const std::function<double()>& loss_fn,
                                       const Eigen::VectorXd& analytic,
                                       int probes_per_group, double fd_step,
                                       std::uint64_t seed, double abs_floor) {
  std::mt19937_64 rng(seed);
  std::vector<GradCheckEntry> report;
  std::size_t off = 0;
  for (const auto& g : params.groups()) {
    GradCheckEntry entry;
    entry.group = g.name;
    if (g.size > 0) {
      std::uniform_int_distribution<std::size_t> pick(0, g.size - 1);
      int probes = std::min<int>(probes_per_group, static_cast<int>(g.size));
      for (int p = 0; p < probes; ++p) {
        std::size_t i = g.size <= static_cast<std::size_t>(probes_per_group)
                            ? static_cast<std::size_t>(p)
                            : pick(rng);
        double saved = g.data[i];
        g.data[i] = saved + fd_step;
        double up = loss_fn();
        g.data[i] = saved - fd_step;
        double dn = loss_fn();
        g.data[i] = saved;
        double fd = (up - dn) / (2.0 * fd_step);
        double an = analytic[off + i];
        double abs_err = std::abs(fd - an);
        double rel = abs_err / std::max({std::abs(fd), std::abs(an), abs_floor});
        entry.max_rel_err = std::max(entry.max_rel_err, rel);
        entry.max_abs_err = std::max(entry.max_abs_err, abs_err);
        ++entry.probes;
      }
    }
    report.push_back(entry);
    off += g.size;
  }
  return report;
}

}  // namespace vid2ode::grad
