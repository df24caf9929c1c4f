#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "mlc/numerics.hpp"

namespace mlc::datagen {

/// Two manifolds on S^2: a closed wavy curve around the equator and a
/// Gaussian blob at the north pole.
struct SynthConfig {
  double amp = 0.2;                     // curve amplitude
  double omega = 5.0;                   // curve frequency
  double noise_std = std::sqrt(0.05);   // per-coordinate std (variance 0.05)
  int points_per_manifold = 100;
  std::uint64_t seed = 0;
};

struct LabeledDataset {
  DenseMatrix x;        // D x n
  std::vector<int> y;   // ground-truth manifold per column
};

/// x_i = [cos(a sin(w phi)) cos phi, cos(a sin(w phi)) sin phi, sin(a sin(w phi))] + noise,
/// phi_i = 2 pi i / m for i = 1..m.
DenseMatrix make_curve_manifold(const SynthConfig& cfg);

/// m samples from N([0, 0, 1], noise_std^2 I).
DenseMatrix make_point_cluster(const SynthConfig& cfg);

/// Curve points (label 0) followed by the point cluster (label 1).
LabeledDataset make_synthetic_dataset(const SynthConfig& cfg);

/// X + N(0, sigma^2) per entry, then columns projected onto the sphere.
DenseMatrix augment_sphere_jitter(const DenseMatrix& x, double sigma_aug, std::mt19937_64& rng);

/// X.mlcmat and labels.txt under `dir`.
void save_dataset(const std::filesystem::path& dir, const LabeledDataset& data);
LabeledDataset load_dataset(const std::filesystem::path& dir);

}  // namespace mlc::datagen
