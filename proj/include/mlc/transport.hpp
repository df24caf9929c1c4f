#pragma once

#include <vector>

#include "mlc/numerics.hpp"

namespace mlc::transport {

struct SinkhornConfig {
  double eta = 0.175;   // entropy coefficient
  int max_iters = 200;  // full row+column sweeps
  double tol = 1e-6;    // max |row sum - 1| after a column sweep
  /// Skip the scaled-kernel fast path and run every sweep as log-sum-exp.
  bool force_log_domain = false;
};

/// Potentials recorded by the forward pass so the backward pass can replay
/// exactly the sweeps that were executed.
struct SinkhornTrace {
  DenseMatrix logits;     // S / eta
  DenseMatrix logits_t;   // its transpose, for row sweeps over contiguous memory
  bool scaled = false;    // fast path: kernel = exp(logits - shift)
  DenseMatrix kernel;
  double shift = 0.0;
  double eta = 0.0;
  std::vector<DenseVector> row_pot;  // f^1..f^T
  std::vector<DenseVector> col_pot;  // g^0..g^T, g^0 = 0

  [[nodiscard]] int iterations() const { return static_cast<int>(row_pot.size()); }
  [[nodiscard]] bool empty() const { return row_pot.empty(); }
};

struct SinkhornResult {
  MembershipMatrix gamma;
  int iters = 0;
  bool converged = false;
  double marginal_error = 0.0;
  SinkhornTrace trace;
};

/// S = C^T C, exactly symmetric.
SimilarityMatrix gram_similarity(const DenseMatrix& c);

/// Entropic projection of S onto the doubly stochastic matrices: alternating
/// row/column normalization of exp(S / eta) in the log domain. Columns are
/// normalized last, so column sums are exact up to rounding and row sums are
/// within `tol` when `converged` is set.
SinkhornResult sinkhorn_project(const SimilarityMatrix& s, const SinkhornConfig& cfg);

/// Reverse-mode product of `upstream` (gradient with respect to Gamma) with
/// the Jacobian of the unrolled forward sweeps. Throws IterationMismatch if
/// the trace is empty or its size does not match `upstream`.
DenseMatrix sinkhorn_vjp(const SinkhornTrace& trace, const DenseMatrix& upstream);

/// Backward of S = C^T C: dC = C (dS + dS^T).
DenseMatrix gram_similarity_backward(const DenseMatrix& c, const DenseMatrix& grad_s);

/// -sum Gamma_ij log Gamma_ij with 0 log 0 = 0.
double entropy(const MembershipMatrix& gamma);

/// Largest deviation of any row or column sum from 1.
double marginal_error(const MembershipMatrix& gamma);

}  // namespace mlc::transport
