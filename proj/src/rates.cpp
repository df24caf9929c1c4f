#include "mlc/rates.hpp"

#include <cmath>
#include <string>

#include "mlc/errors.hpp"
#include "mlc/kernels.hpp"

namespace mlc::rates {
namespace {

void check_dim(const FeatureMatrix& z, const RateParams& p) {
  if (p.d != z.rows()) {
    throw DimensionMismatch("rate params say d=" + std::to_string(p.d) + " but Z has " +
                            std::to_string(z.rows()) + " rows");
  }
  if (!(p.epsilon_sq > 0.0)) throw std::invalid_argument("epsilon_sq must be positive");
  if (z.cols() < 1) throw DimensionMismatch("Z has no columns");
}

void check_membership(const FeatureMatrix& z, const MembershipMatrix& gamma) {
  if (gamma.rows() != z.cols() || gamma.cols() != z.cols()) {
    throw DimensionMismatch("membership is " + std::to_string(gamma.rows()) + "x" +
                            std::to_string(gamma.cols()) + ", expected n=" +
                            std::to_string(z.cols()));
  }
  for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
    const double s = gamma.col(j).sum();
    if (!(std::abs(s - 1.0) <= kColumnSumTol)) {
      throw NotDoublyStochastic("column " + std::to_string(j) + " of membership sums to " +
                                std::to_string(s));
    }
  }
}

DenseMatrix expand_matrix(const FeatureMatrix& z, double scale) {
  DenseMatrix m = DenseMatrix::Identity(z.rows(), z.rows());
  m.noalias() += scale * z * z.transpose();
  return m;
}

}  // namespace

PartitionMatrix partition_from_labels(const std::vector<int>& labels, int k) {
  PartitionMatrix pi = PartitionMatrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw std::out_of_range("label " + std::to_string(labels[i]) + " outside [0, " +
                              std::to_string(k) + ")");
    }
    pi(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return pi;
}

double expand_rate(const FeatureMatrix& z, const RateParams& p) {
  check_dim(z, p);
  const double scale = p.d / (static_cast<double>(z.cols()) * p.epsilon_sq);
  return numerics::logdet_spd(expand_matrix(z, scale));
}

ValueGrad expand_rate_grad(const FeatureMatrix& z, const RateParams& p) {
  check_dim(z, p);
  const double scale = p.d / (static_cast<double>(z.cols()) * p.epsilon_sq);
  const DenseMatrix m = expand_matrix(z, scale);
  ValueGrad out;
  out.value = numerics::logdet_spd(m);
  out.grad = 2.0 * scale * numerics::spd_solve(m, z);
  return out;
}

double compress_rate_partition(const FeatureMatrix& z, const PartitionMatrix& pi,
                               const RateParams& p) {
  check_dim(z, p);
  if (pi.rows() != z.cols()) {
    throw DimensionMismatch("partition has " + std::to_string(pi.rows()) + " rows, Z has " +
                            std::to_string(z.cols()) + " columns");
  }
  const double n = static_cast<double>(z.cols());
  double total = 0.0;
  for (Eigen::Index j = 0; j < pi.cols(); ++j) {
    const double count = pi.col(j).sum();
    if (count <= 0.0) continue;
    DenseMatrix m = DenseMatrix::Identity(z.rows(), z.rows());
    m.noalias() += (p.d / (count * p.epsilon_sq)) * z * pi.col(j).asDiagonal() * z.transpose();
    total += (count / n) * numerics::logdet_spd(m);
  }
  return total;
}

double mcr2_objective(const FeatureMatrix& z, const PartitionMatrix& pi, const RateParams& p) {
  return expand_rate(z, p) - compress_rate_partition(z, pi, p);
}

double compress_rate_membership(const FeatureMatrix& z, const MembershipMatrix& gamma,
                                const RateParams& p) {
  check_dim(z, p);
  check_membership(z, gamma);
  return kernels::omp::membership_rate(z, gamma, p.d / p.epsilon_sq, false).value;
}

MlcEval mlc_objective_with_grads(const FeatureMatrix& z, const MembershipMatrix& gamma,
                                 const RateParams& p) {
  check_dim(z, p);
  check_membership(z, gamma);
  const ValueGrad r = expand_rate_grad(z, p);
  auto rc = kernels::omp::membership_rate(z, gamma, p.d / p.epsilon_sq, true);
  MlcEval out;
  out.expand = r.value;
  out.compress = rc.value;
  out.value = r.value - rc.value;
  out.grad_z = r.grad - rc.grad_z;
  out.grad_gamma = -std::move(rc.grad_gamma);
  return out;
}

TcrEval tcr_objective_with_grads(const FeatureMatrix& z, const FeatureMatrix& zp,
                                 const TcrParams& t) {
  if (z.rows() != zp.rows() || z.cols() != zp.cols()) {
    throw DimensionMismatch("TCR views differ in shape");
  }
  if (t.lambda < 0.0) throw std::invalid_argument("TCR lambda must be nonnegative");
  const FeatureMatrix mean = 0.5 * (z + zp);
  const ValueGrad r = expand_rate_grad(mean, RateParams{t.epsilon_sq, static_cast<int>(z.rows())});

  TcrEval out;
  out.grad_z = 0.5 * r.grad;
  out.grad_zp = 0.5 * r.grad;
  double align = 0.0;
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    const double c = z.col(i).dot(zp.col(i));
    align += std::abs(c);
    const double sgn = (c > 0.0) - (c < 0.0);
    if (sgn == 0.0) continue;
    out.grad_z.col(i) += t.lambda * sgn * zp.col(i);
    out.grad_zp.col(i) += t.lambda * sgn * z.col(i);
  }
  out.value = r.value + t.lambda * align;
  return out;
}

}  // namespace mlc::rates
