#pragma once

#include <vector>

#include "mlc/numerics.hpp"

namespace mlc::rates {

/// Precision and feature dimension of R(Z; eps).
struct RateParams {
  double epsilon_sq = 0.1;
  int d = 3;
};

/// Parameters of the total-coding-rate objective used for feature
/// initialization: R((Z + Z') / 2) + lambda * sum_i |z_i^T z'_i|.
struct TcrParams {
  double epsilon_sq = 0.2;
  double lambda = 1.0;
};

/// n x k hard assignment, one 1 per row.
using PartitionMatrix = Eigen::MatrixXd;

PartitionMatrix partition_from_labels(const std::vector<int>& labels, int k);

inline constexpr double kColumnSumTol = 1e-6;

struct ValueGrad {
  double value = 0.0;
  DenseMatrix grad;
};

/// log det(I + d / (n eps^2) Z Z^T) on the d x d side.
double expand_rate(const FeatureMatrix& z, const RateParams& p);
ValueGrad expand_rate_grad(const FeatureMatrix& z, const RateParams& p);

/// sum_j (|Pi_j| / n) log det(I + d / (|Pi_j| eps^2) Z Diag(Pi_j) Z^T).
/// Empty clusters contribute zero.
double compress_rate_partition(const FeatureMatrix& z, const PartitionMatrix& pi,
                               const RateParams& p);

/// Supervised rate reduction R - R_c(Z, Pi).
double mcr2_objective(const FeatureMatrix& z, const PartitionMatrix& pi, const RateParams& p);

/// (1/n) sum_j log det(I + d / eps^2 Z Diag(Gamma_j) Z^T). Gamma must have
/// unit column sums (within kColumnSumTol); it is not renormalized here.
double compress_rate_membership(const FeatureMatrix& z, const MembershipMatrix& gamma,
                                const RateParams& p);

struct MlcEval {
  double value = 0.0;     // R - R_c
  double expand = 0.0;    // R
  double compress = 0.0;  // R_c
  DenseMatrix grad_z;
  DenseMatrix grad_gamma;
};

/// Rate reduction against a doubly stochastic membership, with gradients
/// with respect to both Z and Gamma.
MlcEval mlc_objective_with_grads(const FeatureMatrix& z, const MembershipMatrix& gamma,
                                 const RateParams& p);

struct TcrEval {
  double value = 0.0;
  DenseMatrix grad_z;
  DenseMatrix grad_zp;
};

/// The subgradient of |x| at 0 is taken as 0.
TcrEval tcr_objective_with_grads(const FeatureMatrix& z, const FeatureMatrix& zp,
                                 const TcrParams& t);

}  // namespace mlc::rates
