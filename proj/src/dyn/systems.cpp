#include "vid2ode/systems.hpp"

#include <cmath>
#include <map>
#include <random>

#include "vid2ode/util.hpp"

namespace vid2ode::dyn {

StateVec SystemSpec::rhs(const StateVec& x) const {
  StateVec eq(true_coefficients.n_eqs());
  features::rhs(library, true_coefficients, x.data(), eq.data());
  if (order == 1) return eq;
  StateVec out(4);
  out[0] = x[2];  // dx/dt = u
  out[1] = x[3];  // dy/dt = v
  out[2] = eq[0];
  out[3] = eq[1];
  return out;
}

namespace {

int term_index(const features::LibrarySpec& lib, std::vector<int> exps) {
  for (int j = 0; j < lib.n_terms(); ++j)
    if (lib.term_list[j] == exps) return j;
  throw Error("term not in library");
}

features::CoefficientMatrix coeffs_from_terms(
    const features::LibrarySpec& lib,
    const std::vector<std::vector<std::pair<std::vector<int>, double>>>& eqs) {
  features::CoefficientMatrix xi(lib.n_terms(), static_cast<int>(eqs.size()));
  xi.active.setConstant(lib.n_terms(), static_cast<int>(eqs.size()), false);
  for (std::size_t c = 0; c < eqs.size(); ++c) {
    for (const auto& [exps, v] : eqs[c]) {
      int r = term_index(lib, exps);
      xi.values(r, static_cast<int>(c)) = v;
      xi.active(r, static_cast<int>(c)) = true;
    }
  }
  return xi;
}

std::map<std::string, SystemSpec> make_systems() {
  std::map<std::string, SystemSpec> out;

  {  // dx/dt = y ; dy/dt = -0.1 y - x - 2 x^3
    SystemSpec s;
    s.name = "duffing";
    s.order = 1;
    s.state_dim = 2;
    s.library_degree = 3;
    s.library = features::build_library(2, 3);
    s.true_coefficients = coeffs_from_terms(
        s.library, {{{{0, 1}, 1.0}},
                    {{{0, 1}, -0.1}, {{1, 0}, -1.0}, {{3, 0}, -2.0}}});
    s.ic_range = {{-0.8, 0.8}, {-0.8, 0.8}};
    s.ic_rejection = [](const StateVec& x) {
      return std::abs(x[0]) < 0.75 && std::abs(x[1]) < 0.5;
    };
    out[s.name] = std::move(s);
  }
  {  // dx/dt = -0.1 x^3 + 2 y^3 ; dy/dt = -2 x^3 - 0.1 y^3
    SystemSpec s;
    s.name = "cubic";
    s.order = 1;
    s.state_dim = 2;
    s.library_degree = 3;
    s.library = features::build_library(2, 3);
    s.true_coefficients = coeffs_from_terms(
        s.library, {{{{3, 0}, -0.1}, {{0, 3}, 2.0}},
                    {{{3, 0}, -2.0}, {{0, 3}, -0.1}}});
    s.ic_range = {{-1.2, 1.2}, {-1.2, 1.2}};
    s.ic_rejection = [](const StateVec& x) {
      return std::max(std::abs(x[0]), std::abs(x[1])) < 1.1;
    };
    out[s.name] = std::move(s);
  }
  {  // dx/dt = y ; dy/dt = -x + 0.2 y - 0.2 x^2 y
    SystemSpec s;
    s.name = "vanderpol";
    s.order = 1;
    s.state_dim = 2;
    s.library_degree = 3;
    s.library = features::build_library(2, 3);
    s.true_coefficients = coeffs_from_terms(
        s.library, {{{{0, 1}, 1.0}},
                    {{{1, 0}, -1.0}, {{0, 1}, 0.2}, {{2, 1}, -0.2}}});
    s.ic_range = {{-0.5, 0.5}, {-0.5, 0.5}};
    out[s.name] = std::move(s);
  }
  {  // d2x/dt2 = -(4/9) x ; d2y/dt2 = -(1/9) y
    SystemSpec s;
    s.name = "osc2d";
    s.order = 2;
    s.state_dim = 4;
    s.library_degree = 2;
    s.library = features::build_library(4, 2);
    s.true_coefficients = coeffs_from_terms(
        s.library, {{{{1, 0, 0, 0}, -4.0 / 9.0}}, {{{0, 1, 0, 0}, -1.0 / 9.0}}});
    s.ic_range = {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}};
    out[s.name] = std::move(s);
  }
  {  // d2x/dt2 = dy/dt ; d2y/dt2 = -dx/dt
    SystemSpec s;
    s.name = "magnetic";
    s.order = 2;
    s.state_dim = 4;
    s.library_degree = 2;
    s.library = features::build_library(4, 2);
    s.true_coefficients = coeffs_from_terms(
        s.library, {{{{0, 0, 0, 1}, 1.0}}, {{{0, 0, 1, 0}, -1.0}}});
    s.ic_range = {{-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}};
    out[s.name] = std::move(s);
  }
  {  // d2x/dt2 = -(x^3 + x y^2) ; d2y/dt2 = -(x^2 y + y^3)
    SystemSpec s;
    s.name = "quartic";
    s.order = 2;
    s.state_dim = 4;
    s.library_degree = 3;  // needs cubic position terms in the lifted library
    s.library = features::build_library(4, 3);
    s.true_coefficients = coeffs_from_terms(
        s.library, {{{{3, 0, 0, 0}, -1.0}, {{1, 2, 0, 0}, -1.0}},
                    {{{2, 1, 0, 0}, -1.0}, {{0, 3, 0, 0}, -1.0}}});
    s.ic_range = {{-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}};
    out[s.name] = std::move(s);
  }
  return out;
}

const std::map<std::string, SystemSpec>& systems() {
  static const std::map<std::string, SystemSpec> s = make_systems();
  return s;
}

}  // namespace

const SystemSpec& system_by_name(const std::string& name) {
  auto it = systems().find(name);
  if (it == systems().end()) throw ConfigError("unknown system: " + name);
  return it->second;
}

std::vector<std::string> system_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : systems()) names.push_back(k);
  return names;
}

std::vector<StateVec> sample_initial_conditions(const SystemSpec& system,
                                                int count, std::uint64_t seed) {
  if (count < 1) throw Error("sample_initial_conditions: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<StateVec> out;
  out.reserve(count);
  int consecutive_rejections = 0;
  while (static_cast<int>(out.size()) < count) {
    StateVec x(system.state_dim);
    for (int i = 0; i < system.state_dim; ++i) {
      const auto& r = system.ic_range[i];
      x[i] = r.lo + (r.hi - r.lo) * unit(rng);
    }
    if (system.ic_rejection && system.ic_rejection(x)) {
      if (++consecutive_rejections > 10000)
        throw ConfigError("initial-condition rejection rate is ~1 for system " +
                          system.name);
      continue;
    }
    consecutive_rejections = 0;
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace vid2ode::dyn
