#include "mlc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mlc/errors.hpp"

namespace mlc::numerics {

bool cholesky_in_place(std::span<double> a, int n) {
  for (int j = 0; j < n; ++j) {
    double diag = a[j + j * n];
    for (int k = 0; k < j; ++k) diag -= a[j + k * n] * a[j + k * n];
    if (!(diag > 0.0)) return false;
    const double ljj = std::sqrt(diag);
    a[j + j * n] = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = a[i + j * n];
      for (int k = 0; k < j; ++k) s -= a[i + k * n] * a[j + k * n];
      a[i + j * n] = s / ljj;
    }
  }
  return true;
}

namespace {

DenseMatrix factor(const DenseMatrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("SPD routine needs a square matrix, got " + std::to_string(m.rows()) +
                            "x" + std::to_string(m.cols()));
  }
  DenseMatrix l = 0.5 * (m + m.transpose());
  if (!l.allFinite()) throw NotSpd("non-finite entries");
  const int n = static_cast<int>(l.rows());
  if (!cholesky_in_place(std::span<double>(l.data(), l.size()), n)) {
    throw NotSpd("non-positive pivot in Cholesky factorization");
  }
  l.triangularView<Eigen::StrictlyUpper>().setZero();
  return l;
}

}  // namespace

double logdet_spd(const DenseMatrix& m) {
  const DenseMatrix l = factor(m);
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

DenseMatrix spd_solve(const DenseMatrix& m, const DenseMatrix& b) {
  if (b.rows() != m.rows()) {
    throw DimensionMismatch("spd_solve: right-hand side has " + std::to_string(b.rows()) +
                            " rows, matrix has " + std::to_string(m.rows()));
  }
  const DenseMatrix l = factor(m);
  DenseMatrix x = l.triangularView<Eigen::Lower>().solve(b);
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

DenseMatrix spd_inverse(const DenseMatrix& m) {
  return spd_solve(m, DenseMatrix::Identity(m.rows(), m.rows()));
}

std::vector<double> singular_values(const DenseMatrix& w, int max_sweeps) {
  // Rotate the shorter side so the column count is min(rows, cols).
  DenseMatrix a = w.rows() >= w.cols() ? DenseMatrix(w) : DenseMatrix(w.transpose());
  const Eigen::Index n = a.cols();
  if (!a.allFinite()) throw ConvergenceFailure("singular_values: non-finite input");

  constexpr double kTol = 4.0 * std::numeric_limits<double>::epsilon();
  bool converged = n < 2;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = a.col(p).squaredNorm();
        const double beta = a.col(q).squaredNorm();
        const double gamma = a.col(p).dot(a.col(q));
        if (std::abs(gamma) <= kTol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
          const double ap = a(i, p);
          const double aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
      }
    }
  }
  if (!converged) {
    throw ConvergenceFailure("singular_values: no convergence after " + std::to_string(max_sweeps) +
                             " Jacobi sweeps");
  }
  std::vector<double> sigma(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) sigma[static_cast<std::size_t>(j)] = a.col(j).norm();
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  return sigma;
}

DenseVector column_norms(const DenseMatrix& m) { return m.colwise().norm().transpose(); }

DenseMatrix sphere_project_columns(const DenseMatrix& m, double floor) {
  DenseMatrix out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    out.col(j) = m.col(j) / std::max(m.col(j).norm(), floor);
  }
  return out;
}

DenseMatrix sphere_project_backward(const DenseMatrix& v, const DenseMatrix& grad_out,
                                    double floor) {
  if (v.rows() != grad_out.rows() || v.cols() != grad_out.cols()) {
    throw DimensionMismatch("sphere_project_backward: gradient shape differs from input");
  }
  DenseMatrix g(v.rows(), v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    const double r = v.col(j).norm();
    if (r > floor) {
      const DenseVector z = v.col(j) / r;
      g.col(j) = (grad_out.col(j) - z * z.dot(grad_out.col(j))) / r;
    } else {
      g.col(j) = grad_out.col(j) / floor;
    }
  }
  return g;
}

}  // namespace mlc::numerics
