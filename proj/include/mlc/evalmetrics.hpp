#pragma once

#include <cstdint>
#include <vector>

#include "mlc/numerics.hpp"

namespace mlc::eval {

using LabelVector = std::vector<int>;

struct KMeansResult {
  LabelVector labels;
  double inertia = 0.0;
  std::vector<double> restart_inertia;  // one per restart, in restart order
  int best_restart = 0;
};

/// Rows of `points` are samples. k-means++ seeding, Lloyd iterations until
/// the assignment is a fixpoint or 300 iterations; empty clusters are
/// re-seeded with the point farthest from its centroid. Best of `restarts`
/// by inertia, ties to the lowest restart index. Distance ties go to the
/// lowest centroid index.
KMeansResult kmeans(const DenseMatrix& points, int k, int restarts, std::uint64_t seed);

/// Symmetrize W = (Gamma + Gamma^T) / 2, embed with the eigenvectors of the
/// k smallest eigenvalues of I - D^{-1/2} W D^{-1/2}, row-normalize, k-means.
/// Throws DegenerateAffinity if a degree is <= 1e-12.
LabelVector spectral_clustering(const MembershipMatrix& gamma, int k, std::uint64_t seed,
                                int restarts = 10);

/// Optimal one-to-one assignment minimizing total cost on a square matrix;
/// returns the column assigned to each row.
std::vector<int> hungarian(const DenseMatrix& cost);

/// Fraction of points matched under the best injective relabeling of pred.
double clustering_accuracy(const LabelVector& pred, const LabelVector& truth);

/// I(pred; truth) / sqrt(H(pred) H(truth)), natural logs. Zero when either
/// entropy vanishes, except when both labelings are a single cluster (1).
double nmi(const LabelVector& pred, const LabelVector& truth);

/// Smallest r with sum_{i<=r} sigma_i^2 / sum sigma_i^2 > threshold.
int numerical_rank_from_singular_values(const std::vector<double>& sigma, double threshold = 0.95);
int numerical_rank(const DenseMatrix& w, double threshold = 0.95);

/// Numerical rank of each ground-truth cluster's columns, clusters in
/// ascending label order.
std::vector<int> per_cluster_ranks(const FeatureMatrix& z, const LabelVector& truth,
                                   double threshold = 0.95);

/// |Z^T Z|.
DenseMatrix cosine_similarity_matrix(const FeatureMatrix& z);

}  // namespace mlc::eval
