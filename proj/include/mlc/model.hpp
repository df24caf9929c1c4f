#pragma once

#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "mlc/numerics.hpp"

namespace mlc::model {

/// Two-layer fully connected head: sphere(W2 relu(W1 x + b1) + b2).
/// Also used as the gradient type (same shapes).
struct MlpParams {
  DenseMatrix w1;  // h x D
  DenseVector b1;  // h
  DenseMatrix w2;  // d x h
  DenseVector b2;  // d

  [[nodiscard]] Eigen::Index input_dim() const { return w1.cols(); }
  [[nodiscard]] Eigen::Index hidden_dim() const { return w1.rows(); }
  [[nodiscard]] Eigen::Index output_dim() const { return w2.rows(); }
  [[nodiscard]] bool same_shape(const MlpParams& o) const;
  [[nodiscard]] MlpParams zeros_like() const;
  /// Sum of squared entries over all four tensors.
  [[nodiscard]] double squared_norm() const;

  MlpParams& operator+=(const MlpParams& o);
  MlpParams& operator*=(double s);
  bool operator==(const MlpParams& o) const;
};

/// Feature head f (produces Z) and cluster head g (produces C).
struct HeadPair {
  MlpParams feature;
  MlpParams cluster;
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
MlpParams init_mlp(int input_dim, int hidden_dim, int output_dim, std::mt19937_64& rng);

struct HeadTrace {
  DenseMatrix input;       // D x m
  DenseMatrix pre_hidden;  // h x m
  DenseMatrix hidden;      // h x m, relu(pre_hidden)
  DenseMatrix pre_out;     // d x m, before sphere projection
};

struct HeadOutput {
  FeatureMatrix z;
  HeadTrace trace;
};

HeadOutput head_forward(const MlpParams& p, const DenseMatrix& x);

/// Exact reverse-mode gradient. ReLU uses subgradient 0 at 0.
MlpParams head_backward(const MlpParams& p, const HeadTrace& trace, const DenseMatrix& grad_z);

/// Returns a pair whose cluster head is a deep copy of the feature head.
HeadPair copy_feature_to_cluster(const HeadPair& hp);

struct SgdState {
  double lr = 1e-2;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  MlpParams velocity;
};

SgdState make_sgd(const MlpParams& p, double lr, double momentum, double weight_decay);

/// v <- momentum v + (g - weight_decay p direction); p <- p + lr direction v.
/// direction = +1 ascends the objective whose gradient is g.
void sgd_step(MlpParams& p, const MlpParams& g, SgdState& s, int direction = +1);

struct AugFeatures {
  FeatureMatrix z;          // sphere projection of the mean
  DenseMatrix mean;         // pre-projection mean, kept for the backward pass
  int views = 0;
  int degenerate_cols = 0;  // mean columns whose norm fell below the floor
};

AugFeatures average_aug_features(std::span<const FeatureMatrix> zs);

/// Gradient with respect to each view (identical for all views).
DenseMatrix average_aug_features_backward(const AugFeatures& fwd, const DenseMatrix& grad_z);

/// Elementwise mean; the backward pass splits the gradient by 1/A.
MembershipMatrix average_aug_memberships(std::span<const MembershipMatrix> gammas);

/// One MLCMAT01 file per tensor, `<prefix>.<tensor>.mlcmat`, plus a line per
/// tensor in `<dir>/manifest.txt` giving name, rows and cols.
void save_params(const std::filesystem::path& dir, const HeadPair& hp);
HeadPair load_params(const std::filesystem::path& dir);

}  // namespace mlc::model
