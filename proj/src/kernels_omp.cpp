#include <atomic>
#include <string>

#include "kernels_detail.hpp"
#include "mlc/errors.hpp"

#ifdef MLC_HAVE_OPENMP
#include <omp.h>
#endif

namespace mlc::kernels::omp {

int max_threads() {
#ifdef MLC_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

MembershipRate membership_rate(const FeatureMatrix& z, const MembershipMatrix& gamma, double alpha,
                               bool with_grads) {
  const Eigen::Index d = z.rows();
  const Eigen::Index n = z.cols();
  const auto dd = static_cast<std::size_t>(d * d);
  std::vector<double> logdets(static_cast<std::size_t>(n));
  std::vector<double> inverses(with_grads ? dd * static_cast<std::size_t>(n) : 0);
  std::atomic<Eigen::Index> failed{-1};

#pragma omp parallel
  {
    std::vector<double> work(dd);
#pragma omp for schedule(static)
    for (Eigen::Index j = 0; j < n; ++j) {
      std::span<double> inv;
      if (with_grads) inv = std::span<double>(inverses).subspan(static_cast<std::size_t>(j) * dd, dd);
      const auto term = detail::membership_column(z, gamma, alpha, j, work, inv);
      if (!term.ok) failed.store(j);
      logdets[static_cast<std::size_t>(j)] = term.logdet;
    }
  }
  if (failed.load() >= 0) throw NotSpd("membership term " + std::to_string(failed.load()));

  MembershipRate out;
  for (double v : logdets) out.value += v;
  out.value /= static_cast<double>(n);
  if (!with_grads) return out;

  out.grad_z.resize(d, n);
  out.grad_gamma.resize(n, n);
#pragma omp parallel
  {
    std::vector<double> acc(static_cast<std::size_t>(d));
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      detail::membership_grad_row(z, gamma, alpha, inverses, i, out, acc);
    }
  }
  return out;
}

DenseMatrix gram(const DenseMatrix& c) {
  const Eigen::Index n = c.cols();
  DenseMatrix g(n, n);
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index j = 0; j < n; ++j) detail::gram_column(c, g, j);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) g(i, j) = g(j, i);
  return g;
}

void neg_lse_cols(const DenseMatrix& a, const DenseVector& add, DenseVector& out) {
  out.resize(a.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < a.cols(); ++j) out(j) = detail::neg_lse_column(a, add, j);
}

void materialize_log(const DenseMatrix& a, const DenseVector& x, const DenseVector& y,
                     DenseMatrix& out) {
  out.resize(a.rows(), a.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out(i, j) = std::exp(a(i, j) + x(i) + y(j));
}

void materialize_scaled(const DenseMatrix& k, const DenseVector& x, const DenseVector& y,
                        DenseMatrix& out) {
  out.resize(k.rows(), k.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < k.cols(); ++j)
    for (Eigen::Index i = 0; i < k.rows(); ++i) out(i, j) = k(i, j) * x(i) * y(j);
}

}  // namespace mlc::kernels::omp
