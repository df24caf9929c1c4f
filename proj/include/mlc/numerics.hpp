#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace mlc {

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

/// Data X (D x n), features Z and cluster codes C (d x n) are stored one
/// sample per column.
using FeatureMatrix = Eigen::MatrixXd;
/// Doubly stochastic n x n membership.
using MembershipMatrix = Eigen::MatrixXd;
using SimilarityMatrix = Eigen::MatrixXd;

inline constexpr double kSphereFloor = 1e-12;

namespace numerics {

/// In-place lower Cholesky factor of the leading n x n block of a
/// column-major buffer. Returns false on a non-positive pivot.
bool cholesky_in_place(std::span<double> a, int n);

/// log det of an SPD matrix, 2 * sum log L_ii. The input is symmetrized
/// as (M + M^T) / 2 before factorization. Throws NotSpd.
double logdet_spd(const DenseMatrix& m);

/// Solves M X = B for SPD M. Throws NotSpd, DimensionMismatch.
DenseMatrix spd_solve(const DenseMatrix& m, const DenseMatrix& b);

/// Inverse of an SPD matrix through its Cholesky factor.
DenseMatrix spd_inverse(const DenseMatrix& m);

/// Descending singular values, min(rows, cols) of them, by one-sided
/// Jacobi rotations. Throws ConvergenceFailure when `max_sweeps` is spent.
std::vector<double> singular_values(const DenseMatrix& w, int max_sweeps = 100);

/// Divides each column by max(||col||, floor).
DenseMatrix sphere_project_columns(const DenseMatrix& m, double floor = kSphereFloor);

/// Column norms as used by sphere_project_columns (before flooring).
DenseVector column_norms(const DenseMatrix& m);

/// Backward of sphere_project_columns: given the pre-projection matrix `v`
/// and upstream gradient with respect to the projected output, returns the
/// gradient with respect to `v`. For ||v|| > floor this is
/// (I - z z^T) g / ||v||; below the floor the map is linear (v / floor).
DenseMatrix sphere_project_backward(const DenseMatrix& v, const DenseMatrix& grad_out,
                                    double floor = kSphereFloor);

}  // namespace numerics
}  // namespace mlc
