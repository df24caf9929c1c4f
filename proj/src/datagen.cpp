#include "mlc/datagen.hpp"

#include <numbers>
#include <stdexcept>

#include "mlc/errors.hpp"
#include "mlc/matrix_io.hpp"
#include "mlc/rng.hpp"

namespace mlc::datagen {
namespace {

void validate(const SynthConfig& cfg) {
  if (cfg.points_per_manifold < 1) throw std::invalid_argument("points_per_manifold must be >= 1");
  if (!(cfg.noise_std >= 0.0)) throw std::invalid_argument("noise_std must be nonnegative");
}

void add_noise(DenseMatrix& x, double std_dev, std::mt19937_64& rng) {
  if (std_dev == 0.0) return;
  std::normal_distribution<double> normal(0.0, std_dev);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) += normal(rng);
}

}  // namespace

DenseMatrix make_curve_manifold(const SynthConfig& cfg) {
  validate(cfg);
  const int m = cfg.points_per_manifold;
  DenseMatrix x(3, m);
  for (int k = 0; k < m; ++k) {
    const double phi = 2.0 * std::numbers::pi * (k + 1) / m;
    const double tilt = cfg.amp * std::sin(cfg.omega * phi);
    x(0, k) = std::cos(tilt) * std::cos(phi);
    x(1, k) = std::cos(tilt) * std::sin(phi);
    x(2, k) = std::sin(tilt);
  }
  auto rng = make_stream(cfg.seed, "data/curve");
  add_noise(x, cfg.noise_std, rng);
  return x;
}

DenseMatrix make_point_cluster(const SynthConfig& cfg) {
  validate(cfg);
  DenseMatrix x = DenseMatrix::Zero(3, cfg.points_per_manifold);
  x.row(2).setOnes();
  auto rng = make_stream(cfg.seed, "data/point");
  add_noise(x, cfg.noise_std, rng);
  return x;
}

LabeledDataset make_synthetic_dataset(const SynthConfig& cfg) {
  const DenseMatrix curve = make_curve_manifold(cfg);
  const DenseMatrix point = make_point_cluster(cfg);
  LabeledDataset data;
  data.x.resize(3, curve.cols() + point.cols());
  data.x << curve, point;
  data.y.assign(static_cast<std::size_t>(curve.cols()), 0);
  data.y.resize(static_cast<std::size_t>(data.x.cols()), 1);
  return data;
}

DenseMatrix augment_sphere_jitter(const DenseMatrix& x, double sigma_aug, std::mt19937_64& rng) {
  if (!(sigma_aug >= 0.0)) throw std::invalid_argument("sigma_aug must be nonnegative");
  DenseMatrix out = x;
  add_noise(out, sigma_aug, rng);
  return numerics::sphere_project_columns(out);
}

void save_dataset(const std::filesystem::path& dir, const LabeledDataset& data) {
  std::filesystem::create_directories(dir);
  io::save_matrix(dir / "X.mlcmat", data.x);
  io::save_labels(dir / "labels.txt", data.y);
}

LabeledDataset load_dataset(const std::filesystem::path& dir) {
  LabeledDataset data;
  data.x = io::load_matrix(dir / "X.mlcmat");
  data.y = io::load_labels(dir / "labels.txt");
  if (static_cast<Eigen::Index>(data.y.size()) != data.x.cols()) {
    throw LengthMismatch("dataset has " + std::to_string(data.x.cols()) + " columns but " +
                         std::to_string(data.y.size()) + " labels");
  }
  return data;
}

}  // namespace mlc::datagen
