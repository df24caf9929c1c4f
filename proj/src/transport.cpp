#include "mlc/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlc/errors.hpp"
#include "mlc/kernels.hpp"

namespace mlc::transport {
namespace {

// Logit spread below which exp(logits - max) cannot underflow during the
// sweeps; larger spreads fall back to log-sum-exp.
constexpr double kScaledRange = 100.0;

class Sweeper {
 public:
  explicit Sweeper(const SinkhornTrace& t) : t_(t) {}

  // f_i = -log sum_j exp(L_ij + g_j)
  void rows(const DenseVector& g, DenseVector& f) const {
    if (!t_.scaled) {
      kernels::omp::neg_lse_cols(t_.logits_t, g, f);
      return;
    }
    const double c = g.maxCoeff();
    const DenseVector b = (g.array() - c).exp().matrix();
    const DenseVector r = t_.kernel * b;
    f = (-(t_.shift + c) - r.array().log()).matrix();
  }

  // g_j = -log sum_i exp(L_ij + f_i)
  void cols(const DenseVector& f, DenseVector& g) const {
    if (!t_.scaled) {
      kernels::omp::neg_lse_cols(t_.logits, f, g);
      return;
    }
    const double c = f.maxCoeff();
    const DenseVector a = (f.array() - c).exp().matrix();
    const DenseVector r = t_.kernel.transpose() * a;
    g = (-(t_.shift + c) - r.array().log()).matrix();
  }

  // out_ij = exp(L_ij + f_i + g_j)
  void plan(const DenseVector& f, const DenseVector& g, DenseMatrix& out) const {
    if (!t_.scaled) {
      kernels::omp::materialize_log(t_.logits, f, g, out);
      return;
    }
    const double c = g.maxCoeff();
    const DenseVector a = (f.array() + (t_.shift + c)).exp().matrix();
    const DenseVector b = (g.array() - c).exp().matrix();
    kernels::omp::materialize_scaled(t_.kernel, a, b, out);
  }

 private:
  const SinkhornTrace& t_;
};

}  // namespace

SimilarityMatrix gram_similarity(const DenseMatrix& c) { return kernels::omp::gram(c); }

DenseMatrix gram_similarity_backward(const DenseMatrix& c, const DenseMatrix& grad_s) {
  if (grad_s.rows() != c.cols() || grad_s.cols() != c.cols()) {
    throw DimensionMismatch("gram backward: gradient is not n x n");
  }
  return c * (grad_s + grad_s.transpose());
}

SinkhornResult sinkhorn_project(const SimilarityMatrix& s, const SinkhornConfig& cfg) {
  if (s.rows() != s.cols() || s.rows() < 1) {
    throw DimensionMismatch("similarity must be a nonempty square matrix");
  }
  if (!(cfg.eta > 0.0) || !(cfg.tol > 0.0) || cfg.max_iters < 1) {
    throw std::invalid_argument("Sinkhorn needs eta > 0, tol > 0, max_iters >= 1");
  }
  if (!s.allFinite()) throw NumericError("similarity matrix has non-finite entries");

  const Eigen::Index n = s.rows();
  SinkhornResult res;
  SinkhornTrace& tr = res.trace;
  tr.eta = cfg.eta;
  tr.logits = s / cfg.eta;
  tr.logits_t = tr.logits.transpose();
  const double hi = tr.logits.maxCoeff();
  const double lo = tr.logits.minCoeff();
  tr.scaled = !cfg.force_log_domain && (hi - lo) <= kScaledRange;
  if (tr.scaled) {
    tr.shift = hi;
    tr.kernel = (tr.logits.array() - hi).exp().matrix();
  }

  const Sweeper sweep(tr);
  tr.col_pot.push_back(DenseVector::Zero(n));
  DenseVector f;
  DenseVector g;
  DenseVector f_next;
  sweep.rows(tr.col_pot.back(), f);
  for (int it = 0; it < cfg.max_iters; ++it) {
    sweep.cols(f, g);
    tr.row_pot.push_back(f);
    tr.col_pot.push_back(g);
    // Row sums after the column sweep are exp(f - f_next); f_next is the
    // next row sweep, so the check costs nothing extra.
    sweep.rows(g, f_next);
    res.marginal_error = ((f - f_next).array().exp() - 1.0).abs().maxCoeff();
    if (res.marginal_error < cfg.tol) {
      res.converged = true;
      break;
    }
    f.swap(f_next);
  }
  res.iters = tr.iterations();
  sweep.plan(tr.row_pot.back(), tr.col_pot.back(), res.gamma);
  return res;
}

DenseMatrix sinkhorn_vjp(const SinkhornTrace& trace, const DenseMatrix& upstream) {
  if (trace.empty() || trace.col_pot.size() != trace.row_pot.size() + 1) {
    throw IterationMismatch("Sinkhorn trace is missing; run the forward pass first");
  }
  const Eigen::Index n = trace.logits.rows();
  if (upstream.rows() != n || upstream.cols() != n) {
    throw IterationMismatch("upstream gradient is " + std::to_string(upstream.rows()) + "x" +
                            std::to_string(upstream.cols()) + ", trace is for n=" +
                            std::to_string(n));
  }
  const Sweeper sweep(trace);
  const int T = trace.iterations();

  DenseMatrix plan;
  sweep.plan(trace.row_pot[T - 1], trace.col_pot[T], plan);
  DenseMatrix logits_bar = upstream.cwiseProduct(plan);
  DenseVector f_bar = logits_bar.rowwise().sum();
  DenseVector g_bar = logits_bar.colwise().sum().transpose();

  for (int t = T; t >= 1; --t) {
    const DenseVector& f = trace.row_pot[t - 1];
    // column sweep t: g^t = -lse_i(L + f^t)
    sweep.plan(f, trace.col_pot[t], plan);
    logits_bar.noalias() -= plan * g_bar.asDiagonal();
    f_bar.noalias() -= plan * g_bar;
    // row sweep t: f^t = -lse_j(L + g^{t-1})
    sweep.plan(f, trace.col_pot[t - 1], plan);
    logits_bar.noalias() -= f_bar.asDiagonal() * plan;
    g_bar.noalias() = -plan.transpose() * f_bar;
    f_bar.setZero();
  }
  return logits_bar / trace.eta;
}

double entropy(const MembershipMatrix& gamma) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < gamma.cols(); ++j)
    for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
      const double v = gamma(i, j);
      if (v > 0.0) h -= v * std::log(v);
    }
  return h;
}

double marginal_error(const MembershipMatrix& gamma) {
  const double rows = (gamma.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (gamma.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

}  // namespace mlc::transport
