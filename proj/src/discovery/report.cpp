#include "vid2ode/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "vid2ode/util.hpp"

namespace vid2ode::discovery {

using nlohmann::json;

Eigen::MatrixXd learned_positions(const DiscoveryModel& m) {
  Eigen::Index rows = 0;
  for (const auto& c : m.coords) rows += c.rows();
  Eigen::MatrixXd out(rows, 2);
  Eigen::Index r = 0;
  for (const auto& c : m.coords)
    for (Eigen::Index k = 0; k < c.rows(); ++k)
      out.row(r++) = m.xf.to_physical(c.row(k)).transpose();
  return out;
}

namespace {

std::string coeff_str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

Eigen::MatrixXd gt_positions(const synth::VideoDataset& gt) {
  Eigen::Index rows = 0;
  for (const auto& g : gt.ground_truth) rows += g.physical.rows();
  Eigen::MatrixXd out(rows, 2);
  Eigen::Index r = 0;
  for (const auto& g : gt.ground_truth)
    for (Eigen::Index k = 0; k < g.physical.rows(); ++k)
      out.row(r++) = g.physical.row(k).head<2>();
  return out;
}

json loss_terms_json(const LossTerms& t) {
  return {{"recon", t.recon},       {"xdot", t.xdot},
          {"int", t.integral},      {"reg", t.reg},
          {"total", t.total},       {"clamped_rollouts", t.clamped_rollouts}};
}

}  // namespace

// Magnetic-style: accelerations depend only on velocities, so translation of
// the position frame leaves the unknown rows unchanged.
bool unknown_rows_translation_invariant(const dyn::SystemSpec& sys) {
  if (sys.order != 2) return false;
  const auto& xi = sys.true_coefficients;
  for (int t = 0; t < xi.n_terms(); ++t)
    for (int c = 0; c < xi.n_eqs(); ++c)
      if (xi.active(t, c) && xi.values(t, c) != 0.0 &&
          (sys.library.term_list[static_cast<std::size_t>(t)][0] != 0 ||
           sys.library.term_list[static_cast<std::size_t>(t)][1] != 0))
        return false;
  return true;
}

std::vector<std::string> equation_text(const features::LibrarySpec& lib,
                                       const features::CoefficientMatrix& xi,
                                       int order) {
  std::vector<std::string> out;
  std::vector<std::string> lhs;
  if (order == 2) {
    out.push_back("dx/dt = u");
    out.push_back("dy/dt = v");
    lhs = {"du/dt", "dv/dt"};
  } else {
    lhs = {"dx/dt", "dy/dt"};
  }
  for (int c = 0; c < xi.n_eqs(); ++c) {
    std::string eq = lhs[static_cast<std::size_t>(c)] + " =";
    bool first = true;
    for (int t = 0; t < xi.n_terms(); ++t) {
      if (!xi.active(t, c) || xi.values(t, c) == 0.0) continue;
      double v = xi.values(t, c);
      if (first) {
        eq += " " + coeff_str(v) + "*" + lib.term_name(t);
        first = false;
      } else {
        eq += (v < 0 ? " - " : " + ") + coeff_str(std::fabs(v)) + "*" +
              lib.term_name(t);
      }
    }
    if (first) eq += " 0";
    out.push_back(eq);
  }
  return out;
}

DiscoveryReport make_report(const DiscoveryOutcome& outcome,
                            const synth::VideoDataset* gt) {
  const DiscoveryModel& m = outcome.model;
  DiscoveryReport rep;
  rep.lib = m.lib;
  rep.xi_final = m.xi;
  rep.transform = m.xf;
  rep.traces = outcome.traces;
  rep.final_eval = outcome.final_eval;
  rep.clamped_rollouts = outcome.clamped_rollouts;
  rep.wall_seconds = outcome.wall_seconds;
  rep.warnings = outcome.warnings;

  Eigen::MatrixXd learned = learned_positions(m);
  const dyn::SystemSpec* sys = nullptr;
  Eigen::MatrixXd ref;
  bool est_translation = false;
  if (gt) {
    rep.system_name = gt->system_name;
    sys = &dyn::system_by_name(gt->system_name);
    ref = gt_positions(*gt);
    est_translation = unknown_rows_translation_invariant(*sys);
  }
  RescaleResult rs = rescale(m.xi, m.lib, learned, gt ? &ref : nullptr,
                             est_translation);
  rep.alpha = rs.alpha;
  rep.signs = rs.signs;
  rep.translation = rs.translation;
  rep.xi_rescaled = rs.xi;
  rep.equations = equation_text(m.lib, rep.xi_rescaled, m.order);
  if (sys) rep.scores = score(rep.xi_rescaled, m.lib, *sys);
  return rep;
}

void write_report_json(const std::string& path, const DiscoveryReport& rep) {
  json j;
  j["system"] = rep.system_name;
  j["alpha"] = rep.alpha;
  j["signs"] = {rep.signs[0], rep.signs[1]};
  if (rep.translation)
    j["translation"] = {(*rep.translation)[0], (*rep.translation)[1]};
  else
    j["translation"] = nullptr;
  j["transform"] = {{"log_s", rep.transform.log_s},
                    {"s", rep.transform.s()},
                    {"t", {rep.transform.t[0], rep.transform.t[1]}},
                    {"theta", rep.transform.theta}};
  j["terms"] = json::array();
  for (int t = 0; t < rep.lib.n_terms(); ++t)
    j["terms"].push_back(rep.lib.term_name(t));
  auto coeff_json = [](const features::CoefficientMatrix& xi) {
    json out = json::array();
    for (int c = 0; c < xi.n_eqs(); ++c) {
      json col = json::array();
      for (int t = 0; t < xi.n_terms(); ++t)
        col.push_back(
            {{"value", xi.values(t, c)}, {"active", bool(xi.active(t, c))}});
      out.push_back(col);
    }
    return out;
  };
  j["xi"] = coeff_json(rep.xi_final);
  j["xi_rescaled"] = coeff_json(rep.xi_rescaled);
  j["equations"] = rep.equations;
  j["scores"] = json::array();
  for (const auto& s : rep.scores)
    j["scores"].push_back({{"tpt", s.tpt}, {"fpt", s.fpt}});
  j["traces"] = json::array();
  for (const auto& tr : rep.traces) {
    json epochs = json::array();
    for (const auto& e : tr.epochs) epochs.push_back(loss_terms_json(e));
    j["traces"].push_back({{"stage", tr.stage}, {"epochs", epochs}});
  }
  j["final_eval"] = loss_terms_json(rep.final_eval);
  j["clamped_rollouts"] = rep.clamped_rollouts;
  j["wall_seconds"] = rep.wall_seconds;
  j["warnings"] = rep.warnings;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace vid2ode::discovery
