#include "vid2ode/baselines.hpp"

#include <cmath>

#include "vid2ode/util.hpp"

namespace vid2ode::baselines {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// L_p column norm; p = 0 disables normalization (scale 1).
double col_scale(const VectorXd& col, double p) {
  if (p <= 0) return 1.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < col.size(); ++i)
    s += std::pow(std::fabs(col[i]), p);
  s = std::pow(s, 1.0 / p);
  return s > 0 ? s : 1.0;
}

// Ridge solve on the selected columns; minimum-norm fallback flagged.
VectorXd ridge_solve(const MatrixXd& A, const VectorXd& b, double lambda,
                     bool* rank_deficient) {
  if (lambda > 0) {
    MatrixXd G = A.transpose() * A;
    G.diagonal().array() += lambda;
    Eigen::LDLT<MatrixXd> ldlt(G);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive())
      return ldlt.solve(A.transpose() * b);
  }
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
  if (cod.rank() < A.cols() && rank_deficient) *rank_deficient = true;
  return cod.solve(b);
}

}  // namespace

StridgeResult stridge_design(const MatrixXd& theta, const MatrixXd& Xdot,
                             double tol, double ridge_lambda, double normalize,
                             int max_iter) {
  if (theta.rows() != Xdot.rows())
    throw Error("stridge: design/derivative row mismatch");
  const int n_terms = static_cast<int>(theta.cols());
  const int n_eqs = static_cast<int>(Xdot.cols());

  VectorXd scale(n_terms);
  MatrixXd thetan = theta;
  for (int j = 0; j < n_terms; ++j) {
    scale[j] = col_scale(theta.col(j), normalize);
    thetan.col(j) /= scale[j];
  }

  StridgeResult out;
  out.xi = features::CoefficientMatrix(n_terms, n_eqs);
  out.xi.active.setConstant(true);

  for (int c = 0; c < n_eqs; ++c) {
    std::vector<int> support(static_cast<std::size_t>(n_terms));
    for (int j = 0; j < n_terms; ++j) support[static_cast<std::size_t>(j)] = j;
    VectorXd w = VectorXd::Zero(n_terms);  // normalized-design coefficients
    for (int it = 0; it < max_iter; ++it) {
      out.iterations = std::max(out.iterations, it + 1);
      MatrixXd sub(theta.rows(), static_cast<Eigen::Index>(support.size()));
      for (std::size_t j = 0; j < support.size(); ++j)
        sub.col(static_cast<Eigen::Index>(j)) =
            thetan.col(support[j]);
      VectorXd ws =
          ridge_solve(sub, Xdot.col(c), ridge_lambda, &out.rank_deficient);
      w.setZero();
      for (std::size_t j = 0; j < support.size(); ++j)
        w[support[j]] = ws[static_cast<Eigen::Index>(j)];
      // Threshold in original coefficient units; the normalization only
      // conditions the solve.
      std::vector<int> keep;
      for (int j : support)
        if (std::fabs(w[j]) / scale[j] >= tol) keep.push_back(j);
      if (keep.size() == support.size()) break;
      for (int j : support)
        if (std::fabs(w[j]) / scale[j] < tol) w[j] = 0.0;
      support = std::move(keep);
      if (support.empty()) break;
    }
    // Final unregularized least squares on the survivors.
    if (!support.empty()) {
      MatrixXd sub(theta.rows(), static_cast<Eigen::Index>(support.size()));
      for (std::size_t j = 0; j < support.size(); ++j)
        sub.col(static_cast<Eigen::Index>(j)) = thetan.col(support[j]);
      VectorXd ws = ridge_solve(sub, Xdot.col(c), 0.0, &out.rank_deficient);
      w.setZero();
      for (std::size_t j = 0; j < support.size(); ++j)
        w[support[j]] = ws[static_cast<Eigen::Index>(j)];
    } else {
      w.setZero();
    }
    for (int j = 0; j < n_terms; ++j) {
      out.xi.values(j, c) = w[j] / scale[j];
      out.xi.active(j, c) = w[j] != 0.0;
    }
  }
  return out;
}

StridgeResult stridge(const MatrixXd& X, const MatrixXd& Xdot,
                      const features::LibrarySpec& lib, double tol,
                      double ridge_lambda, double normalize, int max_iter) {
  if (X.rows() < lib.n_terms())
    throw Error("stridge: need at least as many samples as library terms");
  return stridge_design(features::evaluate(lib, X), Xdot, tol, ridge_lambda,
                        normalize, max_iter);
}

}  // namespace vid2ode::baselines
