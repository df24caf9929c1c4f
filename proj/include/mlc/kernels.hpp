#pragma once

// Data-parallel inner loops of the objective and the Sinkhorn layer.
//
// Every kernel exists twice with the same signature: `serial::` is the
// reference implementation, `omp::` distributes the outer loop with OpenMP.
// The OpenMP variants write per-index partial results and reduce them in
// the same left-to-right order as the serial code, so both produce
// bitwise-identical output regardless of the thread count.

#include "mlc/numerics.hpp"

namespace mlc::kernels {

/// Value and gradients of (1/n) sum_j log det(I + alpha Z Diag(Gamma_j) Z^T).
struct MembershipRate {
  double value = 0.0;
  DenseMatrix grad_z;      // d x n, empty unless requested
  DenseMatrix grad_gamma;  // n x n, empty unless requested
};

namespace serial {

MembershipRate membership_rate(const FeatureMatrix& z, const MembershipMatrix& gamma, double alpha,
                               bool with_grads);

/// C^T C, computed on the upper triangle and mirrored.
DenseMatrix gram(const DenseMatrix& c);

/// out_j = -log sum_i exp(a_ij + add_i), stabilized per column.
void neg_lse_cols(const DenseMatrix& a, const DenseVector& add, DenseVector& out);

/// out_ij = exp(a_ij + x_i + y_j).
void materialize_log(const DenseMatrix& a, const DenseVector& x, const DenseVector& y,
                     DenseMatrix& out);

/// out_ij = k_ij * x_i * y_j.
void materialize_scaled(const DenseMatrix& k, const DenseVector& x, const DenseVector& y,
                        DenseMatrix& out);

}  // namespace serial

namespace omp {

MembershipRate membership_rate(const FeatureMatrix& z, const MembershipMatrix& gamma, double alpha,
                               bool with_grads);
DenseMatrix gram(const DenseMatrix& c);
void neg_lse_cols(const DenseMatrix& a, const DenseVector& add, DenseVector& out);
void materialize_log(const DenseMatrix& a, const DenseVector& x, const DenseVector& y,
                     DenseMatrix& out);
void materialize_scaled(const DenseMatrix& k, const DenseVector& x, const DenseVector& y,
                        DenseMatrix& out);

/// Threads OpenMP would use; 1 when built without OpenMP.
int max_threads();

}  // namespace omp

}  // namespace mlc::kernels
