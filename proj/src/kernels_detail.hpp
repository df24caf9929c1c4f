#pragma once

// Per-index loop bodies shared by the serial and OpenMP kernels.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "mlc/kernels.hpp"
#include "mlc/numerics.hpp"

namespace mlc::kernels::detail {

/// Scratch for one column of the membership rate: M_j, its factor and inverse.
struct ColumnTerm {
  double logdet = 0.0;
  bool ok = true;
};

/// Builds M_j = I + alpha Z Diag(Gamma_j) Z^T, factors it and writes its
/// inverse (column-major d x d) to `inv` when non-empty.
inline ColumnTerm membership_column(const FeatureMatrix& z, const MembershipMatrix& gamma,
                                    double alpha, Eigen::Index j, std::span<double> work,
                                    std::span<double> inv) {
  const int d = static_cast<int>(z.rows());
  const Eigen::Index n = z.cols();
  std::fill(work.begin(), work.end(), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = gamma(i, j);
    if (w == 0.0) continue;
    const double aw = alpha * w;
    const double* zi = z.col(i).data();
    for (int c = 0; c < d; ++c) {
      const double s = aw * zi[c];
      for (int r = c; r < d; ++r) work[r + c * d] += s * zi[r];
    }
  }
  for (int c = 0; c < d; ++c) {
    work[c + c * d] += 1.0;
    for (int r = c + 1; r < d; ++r) work[c + r * d] = work[r + c * d];
  }
  ColumnTerm term;
  if (!numerics::cholesky_in_place(work, d)) {
    term.ok = false;
    return term;
  }
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += std::log(work[k + k * d]);
  term.logdet = 2.0 * s;
  if (inv.empty()) return term;

  // inv = L^{-T} L^{-1}, column by column of the identity.
  std::vector<double> y(static_cast<std::size_t>(d));
  for (int e = 0; e < d; ++e) {
    for (int r = 0; r < d; ++r) {
      double acc = (r == e) ? 1.0 : 0.0;
      for (int k = 0; k < r; ++k) acc -= work[r + k * d] * y[k];
      y[r] = acc / work[r + r * d];
    }
    for (int r = d - 1; r >= 0; --r) {
      double acc = y[r];
      for (int k = r + 1; k < d; ++k) acc -= work[k + r * d] * inv[k + e * d];
      inv[r + e * d] = acc / work[r + r * d];
    }
  }
  return term;
}

/// Row i of grad_gamma and column i of grad_z given all inverses.
inline void membership_grad_row(const FeatureMatrix& z, const MembershipMatrix& gamma,
                                double alpha, const std::vector<double>& inverses, Eigen::Index i,
                                MembershipRate& out, std::span<double> acc) {
  const int d = static_cast<int>(z.rows());
  const Eigen::Index n = z.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double* zi = z.col(i).data();
  std::fill(acc.begin(), acc.end(), 0.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double* mj = inverses.data() + static_cast<std::size_t>(j) * d * d;
    double quad = 0.0;
    for (int c = 0; c < d; ++c) {
      double mz = 0.0;
      for (int r = 0; r < d; ++r) mz += mj[r + c * d] * zi[r];
      quad += mz * zi[c];
      // column c of sum_j Gamma_ij M_j^{-1} z_i (M_j^{-1} is symmetric)
      acc[c] += gamma(i, j) * mz;
    }
    out.grad_gamma(i, j) = alpha * inv_n * quad;
  }
  for (int c = 0; c < d; ++c) out.grad_z(c, i) = 2.0 * alpha * inv_n * acc[c];
}

inline void gram_column(const DenseMatrix& c, DenseMatrix& g, Eigen::Index j) {
  for (Eigen::Index i = 0; i <= j; ++i) g(i, j) = c.col(i).dot(c.col(j));
}

inline double neg_lse_column(const DenseMatrix& a, const DenseVector& add, Eigen::Index j) {
  const Eigen::Index n = a.rows();
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) m = std::max(m, a(i, j) + add(i));
  if (!std::isfinite(m)) return -m;
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) s += std::exp(a(i, j) + add(i) - m);
  return -(m + std::log(s));
}

}  // namespace mlc::kernels::detail
