#include "mlc/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>

#include "mlc/errors.hpp"
#include "mlc/rng.hpp"

namespace mlc::eval {
namespace {

constexpr int kMaxLloydIters = 300;

double sq_dist(const DenseMatrix& points, Eigen::Index i, const DenseMatrix& centers,
               Eigen::Index c) {
  return (points.row(i) - centers.row(c)).squaredNorm();
}

KMeansResult kmeans_once(const DenseMatrix& points, int k, std::mt19937_64& rng) {
  const Eigen::Index m = points.rows();
  DenseMatrix centers(k, points.cols());

  // k-means++ seeding
  std::vector<double> d2(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
  std::vector<char> chosen(static_cast<std::size_t>(m), 0);
  Eigen::Index first = std::uniform_int_distribution<Eigen::Index>(0, m - 1)(rng);
  centers.row(0) = points.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      auto& di = d2[static_cast<std::size_t>(i)];
      di = std::min(di, sq_dist(points, i, centers, c - 1));
      total += di;
    }
    Eigen::Index pick = -1;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (Eigen::Index i = 0; i < m; ++i) {
        u -= d2[static_cast<std::size_t>(i)];
        if (u < 0.0 && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {
        for (Eigen::Index i = m - 1; i >= 0; --i)
          if (d2[static_cast<std::size_t>(i)] > 0.0) {
            pick = i;
            break;
          }
      }
    } else {
      for (Eigen::Index i = 0; i < m && pick < 0; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) pick = i;
    }
    if (pick < 0) pick = 0;
    chosen[static_cast<std::size_t>(pick)] = 1;
    centers.row(c) = points.row(pick);
  }

  KMeansResult res;
  res.labels.assign(static_cast<std::size_t>(m), -1);
  std::vector<double> dist(static_cast<std::size_t>(m), 0.0);
  for (int iter = 0; iter < kMaxLloydIters; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      int best = 0;
      double bd = sq_dist(points, i, centers, 0);
      for (int c = 1; c < k; ++c) {
        const double dc = sq_dist(points, i, centers, c);
        if (dc < bd) {
          bd = dc;
          best = c;
        }
      }
      dist[static_cast<std::size_t>(i)] = bd;
      if (res.labels[static_cast<std::size_t>(i)] != best) {
        res.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    DenseMatrix sums = DenseMatrix::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < m; ++i) {
      const int c = res.labels[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        continue;
      }
      // empty cluster: move it onto the farthest point
      const auto far = std::max_element(dist.begin(), dist.end()) - dist.begin();
      centers.row(c) = points.row(far);
      dist[static_cast<std::size_t>(far)] = 0.0;
    }
  }
  res.inertia = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    res.inertia += sq_dist(points, i, centers, res.labels[static_cast<std::size_t>(i)]);
  }
  return res;
}

struct LabelStats {
  std::map<int, std::size_t> pred_index;
  std::map<int, std::size_t> truth_index;
  std::vector<std::vector<double>> joint;  // pred x truth counts
};

LabelStats contingency(const LabelVector& pred, const LabelVector& truth) {
  if (pred.size() != truth.size()) {
    throw LengthMismatch("label vectors have lengths " + std::to_string(pred.size()) + " and " +
                         std::to_string(truth.size()));
  }
  if (pred.empty()) throw LengthMismatch("label vectors are empty");
  LabelStats s;
  for (int p : pred) s.pred_index.emplace(p, 0);
  for (int t : truth) s.truth_index.emplace(t, 0);
  std::size_t idx = 0;
  for (auto& [label, i] : s.pred_index) i = idx++;
  idx = 0;
  for (auto& [label, i] : s.truth_index) i = idx++;
  s.joint.assign(s.pred_index.size(), std::vector<double>(s.truth_index.size(), 0.0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    s.joint[s.pred_index[pred[i]]][s.truth_index[truth[i]]] += 1.0;
  }
  return s;
}

}  // namespace

KMeansResult kmeans(const DenseMatrix& points, int k, int restarts, std::uint64_t seed) {
  if (k < 1 || points.rows() < k) {
    throw std::invalid_argument("kmeans needs 1 <= k <= number of points");
  }
  restarts = std::max(restarts, 1);
  std::vector<KMeansResult> runs(static_cast<std::size_t>(restarts));
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < restarts; ++r) {
    auto rng = make_stream(seed, "kmeans/restart-" + std::to_string(r));
    runs[static_cast<std::size_t>(r)] = kmeans_once(points, k, rng);
  }
  int best = 0;
  for (int r = 1; r < restarts; ++r) {
    if (runs[static_cast<std::size_t>(r)].inertia < runs[static_cast<std::size_t>(best)].inertia) {
      best = r;
    }
  }
  KMeansResult out = runs[static_cast<std::size_t>(best)];
  out.best_restart = best;
  out.restart_inertia.clear();
  for (const auto& run : runs) out.restart_inertia.push_back(run.inertia);
  return out;
}

LabelVector spectral_clustering(const MembershipMatrix& gamma, int k, std::uint64_t seed,
                                int restarts) {
  const Eigen::Index n = gamma.rows();
  if (gamma.cols() != n) throw DimensionMismatch("spectral_clustering needs a square affinity");
  if (k < 1 || n < k) throw std::invalid_argument("spectral_clustering needs 1 <= k <= n");
  const DenseMatrix w = 0.5 * (gamma + gamma.transpose());
  const DenseVector deg = w.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(deg(i) > 1e-12)) {
      throw DegenerateAffinity("degree of node " + std::to_string(i) + " is " +
                               std::to_string(deg(i)));
    }
  }
  const DenseVector inv_sqrt = deg.array().rsqrt().matrix();
  DenseMatrix lap = -(inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;
  lap = 0.5 * (lap + lap.transpose());

  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(lap);
  if (eig.info() != Eigen::Success) throw ConvergenceFailure("Laplacian eigensolver failed");
  DenseMatrix embed = eig.eigenvectors().leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = embed.row(i).norm();
    if (r > kSphereFloor) embed.row(i) /= r;
  }
  return kmeans(embed, k, restarts, seed).labels;
}

std::vector<int> hungarian(const DenseMatrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DimensionMismatch("hungarian needs a square cost matrix");
  // 1-based potentials formulation
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) assign[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  }
  return assign;
}

double clustering_accuracy(const LabelVector& pred, const LabelVector& truth) {
  const LabelStats s = contingency(pred, truth);
  const std::size_t kp = s.pred_index.size();
  const std::size_t kt = s.truth_index.size();
  const std::size_t size = std::max(kp, kt);
  DenseMatrix cost = DenseMatrix::Zero(static_cast<Eigen::Index>(size),
                                       static_cast<Eigen::Index>(size));
  for (std::size_t a = 0; a < kp; ++a)
    for (std::size_t b = 0; b < kt; ++b)
      cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = -s.joint[a][b];
  const auto assign = hungarian(cost);
  double matched = 0.0;
  for (std::size_t a = 0; a < kp; ++a) {
    const auto b = static_cast<std::size_t>(assign[a]);
    if (b < kt) matched += s.joint[a][b];
  }
  return matched / static_cast<double>(pred.size());
}

double nmi(const LabelVector& pred, const LabelVector& truth) {
  const LabelStats s = contingency(pred, truth);
  const double n = static_cast<double>(pred.size());
  std::vector<double> pp(s.pred_index.size(), 0.0);
  std::vector<double> pt(s.truth_index.size(), 0.0);
  for (std::size_t a = 0; a < pp.size(); ++a)
    for (std::size_t b = 0; b < pt.size(); ++b) {
      pp[a] += s.joint[a][b];
      pt[b] += s.joint[a][b];
    }
  auto entropy = [n](const std::vector<double>& counts) {
    double h = 0.0;
    for (double c : counts)
      if (c > 0.0) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double hp = entropy(pp);
  const double ht = entropy(pt);
  if (pp.size() == 1 && pt.size() == 1) return 1.0;
  if (hp <= 0.0 || ht <= 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t a = 0; a < pp.size(); ++a)
    for (std::size_t b = 0; b < pt.size(); ++b) {
      const double c = s.joint[a][b];
      if (c > 0.0) mi += (c / n) * std::log(c * n / (pp[a] * pt[b]));
    }
  return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

int numerical_rank_from_singular_values(const std::vector<double>& sigma, double threshold) {
  double total = 0.0;
  for (double s : sigma) total += s * s;
  if (!(total > 0.0)) throw ZeroMatrix("numerical rank of a zero matrix is undefined");
  double cum = 0.0;
  for (std::size_t r = 0; r < sigma.size(); ++r) {
    cum += sigma[r] * sigma[r];
    if (cum / total > threshold) return static_cast<int>(r + 1);
  }
  return static_cast<int>(sigma.size());
}

int numerical_rank(const DenseMatrix& w, double threshold) {
  return numerical_rank_from_singular_values(numerics::singular_values(w), threshold);
}

std::vector<int> per_cluster_ranks(const FeatureMatrix& z, const LabelVector& truth,
                                   double threshold) {
  if (static_cast<Eigen::Index>(truth.size()) != z.cols()) {
    throw LengthMismatch("per_cluster_ranks: " + std::to_string(truth.size()) + " labels for " +
                         std::to_string(z.cols()) + " features");
  }
  const std::set<int> labels(truth.begin(), truth.end());
  std::vector<int> ranks;
  for (int label : labels) {
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (truth[i] == label) cols.push_back(static_cast<Eigen::Index>(i));
    ranks.push_back(numerical_rank(z(Eigen::all, cols), threshold));
  }
  return ranks;
}

DenseMatrix cosine_similarity_matrix(const FeatureMatrix& z) {
  return (z.transpose() * z).cwiseAbs();
}

}  // namespace mlc::eval
