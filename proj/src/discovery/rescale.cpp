#include "vid2ode/rescale.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "vid2ode/util.hpp"

namespace vid2ode::discovery {

namespace {

double rms(const Eigen::MatrixXd& x) {
  return std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
}

int term_degree(const std::vector<int>& exponents) {
  return std::accumulate(exponents.begin(), exponents.end(), 0);
}

}  // namespace

double rescale_coefficient(double xi, int degree, double alpha) {
  return xi / std::pow(alpha, degree - 1);
}

RescaleResult rescale(const features::CoefficientMatrix& xi,
                      const features::LibrarySpec& lib,
                      const Eigen::MatrixXd& learned_positions,
                      const Eigen::MatrixXd* reference_positions,
                      bool estimate_translation) {
  if (xi.n_terms() != lib.n_terms())
    throw Error("rescale: coefficient/library size mismatch");
  if (learned_positions.rows() == 0 || learned_positions.cols() != 2)
    throw Error("rescale: learned trajectory must be m x 2");
  if (reference_positions &&
      (reference_positions->cols() != 2 ||
       reference_positions->rows() != learned_positions.rows()))
    throw Error("rescale: reference trajectory must align with the learned one");

  RescaleResult out;
  Eigen::MatrixXd learned = learned_positions;
  Eigen::RowVector2d lmean = learned.colwise().mean();
  Eigen::MatrixXd reference;
  Eigen::RowVector2d rmean = Eigen::RowVector2d::Zero();
  if (reference_positions) {
    reference = *reference_positions;
    rmean = reference.colwise().mean();
  }

  if (estimate_translation) {
    learned.rowwise() -= lmean;
    if (reference.size() > 0) reference.rowwise() -= rmean;
  }

  const double lrms = rms(learned);
  if (!(lrms > 0)) throw Error("rescale: degenerate (zero-RMS) trajectory");
  if (reference.size() > 0) {
    const double rrms = rms(reference);
    if (!(rrms > 0)) throw Error("rescale: degenerate reference trajectory");
    out.alpha = rrms / lrms;
    // Per-axis reflection from the sign of the frame-aligned covariance.
    Eigen::MatrixXd lc = learned.rowwise() - learned.colwise().mean();
    Eigen::MatrixXd rc = reference.rowwise() - reference.colwise().mean();
    for (int a = 0; a < 2; ++a) {
      double cov = lc.col(a).dot(rc.col(a));
      out.signs[a] = cov < 0 ? -1.0 : 1.0;
    }
  } else {
    out.alpha = 1.0 / lrms;
  }

  if (estimate_translation)
    out.translation =
        (rmean - out.signs.transpose().cwiseProduct(lmean * out.alpha))
            .transpose();

  out.xi = xi;
  const int nv = lib.n_vars;
  for (int t = 0; t < xi.n_terms(); ++t) {
    const auto& ex = lib.term_list[static_cast<std::size_t>(t)];
    const int d = term_degree(ex);
    // Variables 0,2 are x-axis-like (x, u); 1,3 are y-axis-like (y, v).
    double sgn = 1.0;
    for (int v = 0; v < nv; ++v)
      if (ex[static_cast<std::size_t>(v)] % 2 != 0)
        sgn *= out.signs[v % 2];
    for (int c = 0; c < xi.n_eqs(); ++c) {
      if (xi.is_pinned(t, c)) continue;
      const double s_eq = out.signs[c % 2];
      out.xi.values(t, c) =
          s_eq * sgn * rescale_coefficient(xi.values(t, c), d, out.alpha);
    }
  }
  out.xi.enforce_mask();
  return out;
}

std::vector<EquationScore> score(const features::CoefficientMatrix& xi,
                                 const features::LibrarySpec& lib,
                                 const dyn::SystemSpec& system) {
  const features::LibrarySpec& tlib = system.library;
  if (lib.n_vars != tlib.n_vars)
    throw Error("score: library variable-count mismatch");
  if (xi.n_eqs() != system.true_coefficients.n_eqs())
    throw Error("score: equation-count mismatch");

  // Match terms by exponent tuple so differing library degrees still compare.
  std::map<std::vector<int>, int> true_index;
  for (int t = 0; t < tlib.n_terms(); ++t)
    true_index[tlib.term_list[static_cast<std::size_t>(t)]] = t;

  std::vector<EquationScore> out(static_cast<std::size_t>(xi.n_eqs()));
  for (int c = 0; c < xi.n_eqs(); ++c) {
    for (int t = 0; t < xi.n_terms(); ++t) {
      if (!xi.active(t, c) || xi.is_pinned(t, c)) continue;
      if (xi.values(t, c) == 0.0) continue;
      auto it = true_index.find(lib.term_list[static_cast<std::size_t>(t)]);
      bool in_truth = false;
      if (it != true_index.end()) {
        int tt = it->second;
        in_truth = system.true_coefficients.active(tt, c) &&
                   system.true_coefficients.values(tt, c) != 0.0 &&
                   !system.true_coefficients.is_pinned(tt, c);
      }
      if (in_truth)
        ++out[static_cast<std::size_t>(c)].tpt;
      else
        ++out[static_cast<std::size_t>(c)].fpt;
    }
  }
  return out;
}

}  // namespace vid2ode::discovery
