#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vid2ode/rescale.hpp"
#include "vid2ode/trainer.hpp"

namespace vid2ode::discovery {

struct DiscoveryReport {
  std::string system_name;  // empty when no ground truth was supplied
  features::LibrarySpec lib;
  features::CoefficientMatrix xi_final;
  features::CoefficientMatrix xi_rescaled;
  xform::TransformParams transform;
  double alpha = 1.0;
  Eigen::Vector2d signs = Eigen::Vector2d::Ones();
  std::optional<Eigen::Vector2d> translation;
  std::vector<std::string> equations;  // rescaled, human-readable
  std::vector<EquationScore> scores;   // empty without ground truth
  std::vector<StageTrace> traces;
  LossTerms final_eval;
  int clamped_rollouts = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

// Physical-coordinate trajectories implied by the final model, stacked over
// all videos (rows) — the input to rescale.
Eigen::MatrixXd learned_positions(const DiscoveryModel& m);

// Assemble the report; `gt` (when given) supplies the reference trajectory
// for rescaling and the true structure for TPT/FPT. Translation is estimated
// for systems whose unknown equations are translation invariant (Magnetic).
DiscoveryReport make_report(const DiscoveryOutcome& outcome,
                            const synth::VideoDataset* gt);

// True when no active true term involves the position variables, so the
// unknown equations are invariant to translation (Magnetic-type systems) and
// a translation should be estimated during rescaling.
bool unknown_rows_translation_invariant(const dyn::SystemSpec& sys);

std::vector<std::string> equation_text(const features::LibrarySpec& lib,
                                       const features::CoefficientMatrix& xi,
                                       int order);

void write_report_json(const std::string& path, const DiscoveryReport& report);

}  // namespace vid2ode::discovery
