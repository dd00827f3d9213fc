#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vid2ode::features {

// Polynomial candidate library: all monomials of total degree 1..max_degree
// over n_vars variables, in graded-lexicographic order. The constant term is
// deliberately excluded: the learnable translation of the spatial-physical
// transformation absorbs any constant, making it unidentifiable from video.
struct LibrarySpec {
  int n_vars = 0;
  int max_degree = 0;
  // term_list[j] is the exponent tuple of monomial j (size n_vars).
  std::vector<std::vector<int>> term_list;

  int n_terms() const { return static_cast<int>(term_list.size()); }
  // "x", "y", "x^2*y", ... Variable names: x,y for 2 vars; x,y,u,v for 4
  // (u,v are the appended velocity states of the second-order lift).
  std::string term_name(int j) const;
  static std::string var_name(int i, int n_vars);
};

LibrarySpec build_library(int n_vars, int max_degree);

// Theta(X): row k, column j = monomial j evaluated at state row k.
Eigen::MatrixXd evaluate(const LibrarySpec& lib, const Eigen::MatrixXd& X);

// Single-row evaluation into a caller buffer of size n_terms.
void evaluate_row(const LibrarySpec& lib, const double* x, double* theta);

// d theta_j / d x_i for one state; out is n_terms x n_vars.
void evaluate_row_grad(const LibrarySpec& lib, const double* x,
                       Eigen::MatrixXd& out);

struct PinnedEntry {
  int row = 0;  // term index
  int col = 0;  // equation index
  double value = 0.0;
};

// Sparse coefficient matrix Xi with an active-term mask. Masked-out entries
// are exactly zero; pinned entries are never touched by optimization or
// thresholding.
struct CoefficientMatrix {
  Eigen::MatrixXd values;                       // n_terms x n_eqs
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> active;
  std::vector<PinnedEntry> pinned;

  CoefficientMatrix() = default;
  CoefficientMatrix(int n_terms, int n_eqs);

  int n_terms() const { return static_cast<int>(values.rows()); }
  int n_eqs() const { return static_cast<int>(values.cols()); }
  bool is_pinned(int row, int col) const;
  void apply_pins();
  // Re-zeroes masked entries and re-applies pins (call after raw updates).
  void enforce_mask();
};

// Theta(x^T) * Xi for a single state; y must have size n_eqs.
void rhs(const LibrarySpec& lib, const CoefficientMatrix& xi, const double* x,
         double* y);
Eigen::VectorXd rhs(const LibrarySpec& lib, const CoefficientMatrix& xi,
                    const Eigen::VectorXd& x);

// l_{1/2} quasinorm regularizer: value = (1/2n) * sum |xi|^{1/2} over active
// unpinned entries (n = number of library terms). The subgradient is clamped
// at eps_reg = 1e-4 near the origin; entries at exactly 0 get subgradient 0.
struct LHalfResult {
  double value = 0.0;
  Eigen::MatrixXd subgradient;
};
LHalfResult l_half(const CoefficientMatrix& xi);

inline constexpr double kLHalfEps = 1e-4;

// Sequential magnitude threshold: |xi| < tau -> masked off and zeroed,
// permanently. Pinned entries untouched. Returns the list of equation columns
// left with no active terms (degenerate equations), if any.
std::vector<int> threshold(CoefficientMatrix& xi, double tau);

struct StlsqResult {
  CoefficientMatrix xi;
  bool rank_deficient = false;
  std::vector<int> degenerate_columns;
  int iterations = 0;
};

// Sequential thresholded least squares: alternate a least-squares fit on the
// active columns with thresholding at tau until a fixed point (or max_iter).
StlsqResult stlsq(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xdot,
                  const LibrarySpec& lib, double tau, int max_iter = 20);

// As above but regressing an already-built design matrix (used when the
// caller pins known rows or lifts states).
StlsqResult stlsq_design(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& Xdot,
                         double tau, int max_iter = 20);

// Coefficient CSV: rows are term names, one column per target equation,
// with an active-mask sidecar written next to it as <path>.mask.csv.
void write_coefficients_csv(const std::string& path, const LibrarySpec& lib,
                            const CoefficientMatrix& xi);

}  // namespace vid2ode::features
