#include "vid2ode/library.hpp"

#include <cmath>
#include <fstream>

#include "vid2ode/util.hpp"

namespace vid2ode::features {

std::string LibrarySpec::var_name(int i, int n_vars) {
  static const char* two[] = {"x", "y"};
  static const char* four[] = {"x", "y", "u", "v"};
  if (n_vars <= 2) return two[i];
  if (n_vars <= 4) return four[i];
  return "x" + std::to_string(i + 1);
}

std::string LibrarySpec::term_name(int j) const {
  const auto& e = term_list[j];
  std::string name;
  for (int i = 0; i < n_vars; ++i) {
    if (e[i] == 0) continue;
    if (!name.empty()) name += "*";
    name += var_name(i, n_vars);
    if (e[i] > 1) name += "^" + std::to_string(e[i]);
  }
  return name;
}

namespace {
// Exponent tuples of total degree exactly d, lexicographic with earlier
// variables taking higher exponents first.
void emit_degree(int n_vars, int var, int remaining, std::vector<int>& cur,
                 std::vector<std::vector<int>>& out) {
  if (var == n_vars - 1) {
    cur[var] = remaining;
    out.push_back(cur);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[var] = e;
    emit_degree(n_vars, var + 1, remaining - e, cur, out);
  }
}
}  // namespace

LibrarySpec build_library(int n_vars, int max_degree) {
  if (n_vars < 1 || max_degree < 1)
    throw Error("build_library: n_vars and max_degree must be >= 1");
  LibrarySpec lib;
  lib.n_vars = n_vars;
  lib.max_degree = max_degree;
  std::vector<int> cur(n_vars, 0);
  for (int d = 1; d <= max_degree; ++d)
    emit_degree(n_vars, 0, d, cur, lib.term_list);
  return lib;
}

Eigen::MatrixXd evaluate(const LibrarySpec& lib, const Eigen::MatrixXd& X) {
  if (X.cols() != lib.n_vars)
    throw Error("library evaluate: X has " + std::to_string(X.cols()) +
                " columns, expected " + std::to_string(lib.n_vars));
  Eigen::MatrixXd theta(X.rows(), lib.n_terms());
  std::vector<double> row(lib.n_terms());
  std::vector<double> x(lib.n_vars);
  for (Eigen::Index k = 0; k < X.rows(); ++k) {
    for (int i = 0; i < lib.n_vars; ++i) x[i] = X(k, i);
    evaluate_row(lib, x.data(), row.data());
    for (int j = 0; j < lib.n_terms(); ++j) theta(k, j) = row[j];
  }
  return theta;
}

void evaluate_row(const LibrarySpec& lib, const double* x, double* theta) {
  for (int j = 0; j < lib.n_terms(); ++j) {
    double v = 1.0;
    const auto& e = lib.term_list[j];
    for (int i = 0; i < lib.n_vars; ++i) {
      for (int p = 0; p < e[i]; ++p) v *= x[i];
    }
    theta[j] = v;
  }
}

void evaluate_row_grad(const LibrarySpec& lib, const double* x,
                       Eigen::MatrixXd& out) {
  out.setZero(lib.n_terms(), lib.n_vars);
  for (int j = 0; j < lib.n_terms(); ++j) {
    const auto& e = lib.term_list[j];
    for (int i = 0; i < lib.n_vars; ++i) {
      if (e[i] == 0) continue;
      double v = static_cast<double>(e[i]);
      for (int k = 0; k < lib.n_vars; ++k) {
        int p = e[k] - (k == i ? 1 : 0);
        for (int q = 0; q < p; ++q) v *= x[k];
      }
      out(j, i) = v;
    }
  }
}

CoefficientMatrix::CoefficientMatrix(int n_terms, int n_eqs) {
  values = Eigen::MatrixXd::Zero(n_terms, n_eqs);
  active.setConstant(n_terms, n_eqs, true);
}

bool CoefficientMatrix::is_pinned(int row, int col) const {
  for (const auto& p : pinned)
    if (p.row == row && p.col == col) return true;
  return false;
}

void CoefficientMatrix::apply_pins() {
  for (const auto& p : pinned) {
    values(p.row, p.col) = p.value;
    active(p.row, p.col) = true;
  }
}

void CoefficientMatrix::enforce_mask() {
  for (int r = 0; r < n_terms(); ++r)
    for (int c = 0; c < n_eqs(); ++c)
      if (!active(r, c)) values(r, c) = 0.0;
  apply_pins();
}

void rhs(const LibrarySpec& lib, const CoefficientMatrix& xi, const double* x,
         double* y) {
  std::vector<double> theta(lib.n_terms());
  evaluate_row(lib, x, theta.data());
  for (int c = 0; c < xi.n_eqs(); ++c) {
    double acc = 0.0;
    for (int j = 0; j < xi.n_terms(); ++j) {
      if (!xi.active(j, c)) continue;
      acc += theta[j] * xi.values(j, c);
    }
    y[c] = acc;
  }
}

Eigen::VectorXd rhs(const LibrarySpec& lib, const CoefficientMatrix& xi,
                    const Eigen::VectorXd& x) {
  if (x.size() != lib.n_vars) throw Error("rhs: state dimension mismatch");
  Eigen::VectorXd y(xi.n_eqs());
  rhs(lib, xi, x.data(), y.data());
  return y;
}

LHalfResult l_half(const CoefficientMatrix& xi) {
  LHalfResult res;
  res.subgradient = Eigen::MatrixXd::Zero(xi.n_terms(), xi.n_eqs());
  const double n = static_cast<double>(xi.n_terms());
  for (int r = 0; r < xi.n_terms(); ++r) {
    for (int c = 0; c < xi.n_eqs(); ++c) {
      if (!xi.active(r, c) || xi.is_pinned(r, c)) continue;
      double v = xi.values(r, c);
      if (v == 0.0) continue;
      double a = std::abs(v);
      res.value += std::sqrt(a) / (2.0 * n);
      res.subgradient(r, c) =
          (v > 0 ? 1.0 : -1.0) / (4.0 * n * std::sqrt(std::max(a, kLHalfEps)));
    }
  }
  return res;
}

std::vector<int> threshold(CoefficientMatrix& xi, double tau) {
  if (tau <= 0) throw Error("threshold: tau must be positive");
  for (int r = 0; r < xi.n_terms(); ++r) {
    for (int c = 0; c < xi.n_eqs(); ++c) {
      if (xi.is_pinned(r, c)) continue;
      if (!xi.active(r, c)) continue;
      if (std::abs(xi.values(r, c)) < tau) {
        xi.active(r, c) = false;
        xi.values(r, c) = 0.0;
      }
    }
  }
  std::vector<int> degenerate;
  for (int c = 0; c < xi.n_eqs(); ++c) {
    bool any = false;
    for (int r = 0; r < xi.n_terms(); ++r) any = any || xi.active(r, c);
    if (!any) degenerate.push_back(c);
  }
  return degenerate;
}

StlsqResult stlsq_design(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& Xdot,
                         double tau, int max_iter) {
  const int n_terms = static_cast<int>(theta.cols());
  const int n_eqs = static_cast<int>(Xdot.cols());
  if (theta.rows() < n_terms)
    throw Error("stlsq: fewer samples than library terms");
  StlsqResult res;
  res.xi = CoefficientMatrix(n_terms, n_eqs);

  for (int c = 0; c < n_eqs; ++c) {
    std::vector<int> support(n_terms);
    for (int j = 0; j < n_terms; ++j) support[j] = j;
    Eigen::VectorXd coef;
    for (int it = 0; it < max_iter; ++it) {
      ++res.iterations;
      Eigen::MatrixXd sub(theta.rows(), support.size());
      for (std::size_t j = 0; j < support.size(); ++j)
        sub.col(j) = theta.col(support[j]);
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sub);
      if (cod.rank() < static_cast<Eigen::Index>(support.size()))
        res.rank_deficient = true;
      coef = cod.solve(Xdot.col(c));
      std::vector<int> kept;
      for (std::size_t j = 0; j < support.size(); ++j)
        if (std::abs(coef[j]) >= tau) kept.push_back(static_cast<int>(j));
      if (kept.size() == support.size() || kept.empty()) {
        if (kept.empty()) {
          support.clear();
          coef.resize(0);
        }
        break;
      }
      std::vector<int> next;
      Eigen::VectorXd next_coef(kept.size());
      for (std::size_t j = 0; j < kept.size(); ++j) {
        next.push_back(support[kept[j]]);
        next_coef[j] = coef[kept[j]];
      }
      support = std::move(next);
      coef = std::move(next_coef);
    }
    for (int r = 0; r < n_terms; ++r) res.xi.active(r, c) = false;
    for (std::size_t j = 0; j < support.size(); ++j) {
      res.xi.active(support[j], c) = true;
      res.xi.values(support[j], c) = coef[j];
    }
    if (support.empty()) res.degenerate_columns.push_back(c);
  }
  return res;
}

StlsqResult stlsq(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xdot,
                  const LibrarySpec& lib, double tau, int max_iter) {
  if (X.rows() != Xdot.rows()) throw Error("stlsq: X and Xdot row mismatch");
  return stlsq_design(evaluate(lib, X), Xdot, tau, max_iter);
}

void write_coefficients_csv(const std::string& path, const LibrarySpec& lib,
                            const CoefficientMatrix& xi) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  std::ofstream mask(path + ".mask.csv");
  out << "term";
  mask << "term";
  for (int c = 0; c < xi.n_eqs(); ++c) {
    out << ",eq" << c + 1;
    mask << ",eq" << c + 1;
  }
  out << "\n";
  mask << "\n";
  for (int r = 0; r < xi.n_terms(); ++r) {
    out << lib.term_name(r);
    mask << lib.term_name(r);
    for (int c = 0; c < xi.n_eqs(); ++c) {
      out << "," << format_double(xi.values(r, c));
      mask << "," << (xi.active(r, c) ? 1 : 0);
    }
    out << "\n";
    mask << "\n";
  }
}

}  // namespace vid2ode::features
