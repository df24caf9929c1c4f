#include "mlc/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "mlc/errors.hpp"
#include "mlc/matrix_io.hpp"

namespace mlc::model {

bool MlpParams::same_shape(const MlpParams& o) const {
  return w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() && b1.size() == o.b1.size() &&
         w2.rows() == o.w2.rows() && w2.cols() == o.w2.cols() && b2.size() == o.b2.size();
}

MlpParams MlpParams::zeros_like() const {
  return {DenseMatrix::Zero(w1.rows(), w1.cols()), DenseVector::Zero(b1.size()),
          DenseMatrix::Zero(w2.rows(), w2.cols()), DenseVector::Zero(b2.size())};
}

double MlpParams::squared_norm() const {
  return w1.squaredNorm() + b1.squaredNorm() + w2.squaredNorm() + b2.squaredNorm();
}

MlpParams& MlpParams::operator+=(const MlpParams& o) {
  if (!same_shape(o)) throw ShapeMismatch("adding parameters of different shapes");
  w1 += o.w1;
  b1 += o.b1;
  w2 += o.w2;
  b2 += o.b2;
  return *this;
}

MlpParams& MlpParams::operator*=(double s) {
  w1 *= s;
  b1 *= s;
  w2 *= s;
  b2 *= s;
  return *this;
}

bool MlpParams::operator==(const MlpParams& o) const {
  return same_shape(o) && w1 == o.w1 && b1 == o.b1 && w2 == o.w2 && b2 == o.b2;
}

MlpParams init_mlp(int input_dim, int hidden_dim, int output_dim, std::mt19937_64& rng) {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("MLP dimensions must be positive");
  }
  auto fill = [&rng](Eigen::Index rows, Eigen::Index cols, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
    return m;
  };
  const double b_in = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double b_hid = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  MlpParams p;
  p.w1 = fill(hidden_dim, input_dim, b_in);
  p.b1 = fill(hidden_dim, 1, b_in);
  p.w2 = fill(output_dim, hidden_dim, b_hid);
  p.b2 = fill(output_dim, 1, b_hid);
  return p;
}

HeadOutput head_forward(const MlpParams& p, const DenseMatrix& x) {
  if (x.rows() != p.input_dim() || p.b1.size() != p.hidden_dim() ||
      p.w2.cols() != p.hidden_dim() || p.b2.size() != p.output_dim()) {
    throw DimensionMismatch("head_forward: input has " + std::to_string(x.rows()) +
                            " rows, head expects " + std::to_string(p.input_dim()));
  }
  HeadOutput out;
  HeadTrace& t = out.trace;
  t.input = x;
  t.pre_hidden = p.w1 * x;
  t.pre_hidden.colwise() += p.b1;
  t.hidden = t.pre_hidden.cwiseMax(0.0);
  t.pre_out = p.w2 * t.hidden;
  t.pre_out.colwise() += p.b2;
  out.z = numerics::sphere_project_columns(t.pre_out);
  return out;
}

MlpParams head_backward(const MlpParams& p, const HeadTrace& trace, const DenseMatrix& grad_z) {
  if (trace.pre_out.rows() != p.output_dim() || trace.pre_hidden.rows() != p.hidden_dim() ||
      trace.input.rows() != p.input_dim() || grad_z.rows() != trace.pre_out.rows() ||
      grad_z.cols() != trace.pre_out.cols()) {
    throw TraceMismatch("head_backward: trace or gradient does not match the parameters");
  }
  const DenseMatrix g_out = numerics::sphere_project_backward(trace.pre_out, grad_z);
  MlpParams g;
  g.w2 = g_out * trace.hidden.transpose();
  g.b2 = g_out.rowwise().sum();
  DenseMatrix g_hidden = p.w2.transpose() * g_out;
  g_hidden = (trace.pre_hidden.array() > 0.0).select(g_hidden, 0.0);
  g.w1 = g_hidden * trace.input.transpose();
  g.b1 = g_hidden.rowwise().sum();
  return g;
}

HeadPair copy_feature_to_cluster(const HeadPair& hp) {
  if (hp.feature.output_dim() != hp.cluster.output_dim() && hp.cluster.output_dim() != 0) {
    throw ShapeMismatch("feature head outputs " + std::to_string(hp.feature.output_dim()) +
                        " dims, cluster head " + std::to_string(hp.cluster.output_dim()));
  }
  return HeadPair{hp.feature, hp.feature};
}

SgdState make_sgd(const MlpParams& p, double lr, double momentum, double weight_decay) {
  return SgdState{lr, momentum, weight_decay, p.zeros_like()};
}

void sgd_step(MlpParams& p, const MlpParams& g, SgdState& s, int direction) {
  if (!p.same_shape(g) || !p.same_shape(s.velocity)) {
    throw ShapeMismatch("sgd_step: parameter, gradient and velocity shapes differ");
  }
  const double dir = direction >= 0 ? 1.0 : -1.0;
  auto update = [&](auto& param, const auto& grad, auto& vel) {
    vel = s.momentum * vel + (grad - s.weight_decay * dir * param);
    param += s.lr * dir * vel;
  };
  update(p.w1, g.w1, s.velocity.w1);
  update(p.b1, g.b1, s.velocity.b1);
  update(p.w2, g.w2, s.velocity.w2);
  update(p.b2, g.b2, s.velocity.b2);
}

AugFeatures average_aug_features(std::span<const FeatureMatrix> zs) {
  if (zs.empty()) throw ShapeMismatch("average_aug_features needs at least one view");
  AugFeatures out;
  out.views = static_cast<int>(zs.size());
  out.mean = zs[0];
  for (std::size_t a = 1; a < zs.size(); ++a) {
    if (zs[a].rows() != out.mean.rows() || zs[a].cols() != out.mean.cols()) {
      throw ShapeMismatch("augmented feature views differ in shape");
    }
    out.mean += zs[a];
  }
  out.mean /= static_cast<double>(zs.size());
  out.z = numerics::sphere_project_columns(out.mean);
  for (Eigen::Index j = 0; j < out.mean.cols(); ++j) {
    if (out.mean.col(j).norm() <= kSphereFloor) ++out.degenerate_cols;
  }
  return out;
}

DenseMatrix average_aug_features_backward(const AugFeatures& fwd, const DenseMatrix& grad_z) {
  return numerics::sphere_project_backward(fwd.mean, grad_z) / static_cast<double>(fwd.views);
}

MembershipMatrix average_aug_memberships(std::span<const MembershipMatrix> gammas) {
  if (gammas.empty()) throw ShapeMismatch("average_aug_memberships needs at least one view");
  MembershipMatrix mean = gammas[0];
  for (std::size_t a = 1; a < gammas.size(); ++a) {
    if (gammas[a].rows() != mean.rows() || gammas[a].cols() != mean.cols()) {
      throw ShapeMismatch("augmented memberships differ in shape");
    }
    mean += gammas[a];
  }
  return mean / static_cast<double>(gammas.size());
}

namespace {

struct NamedTensor {
  std::string name;
  DenseMatrix value;
};

std::vector<NamedTensor> flatten(const HeadPair& hp) {
  std::vector<NamedTensor> out;
  for (const auto& [prefix, p] : {std::pair<std::string, const MlpParams*>{"feature", &hp.feature},
                                  {"cluster", &hp.cluster}}) {
    out.push_back({prefix + ".w1", p->w1});
    out.push_back({prefix + ".b1", p->b1});
    out.push_back({prefix + ".w2", p->w2});
    out.push_back({prefix + ".b2", p->b2});
  }
  return out;
}

}  // namespace

void save_params(const std::filesystem::path& dir, const HeadPair& hp) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw FormatError("cannot write " + (dir / "manifest.txt").string());
  for (const auto& t : flatten(hp)) {
    io::save_matrix(dir / (t.name + ".mlcmat"), t.value);
    manifest << t.name << ' ' << t.value.rows() << ' ' << t.value.cols() << '\n';
  }
}

HeadPair load_params(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw FormatError("missing parameter manifest in " + dir.string());
  HeadPair hp;
  std::string line;
  int count = 0;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    if (!(ss >> name >> rows >> cols)) throw FormatError("bad manifest line: " + line);
    const DenseMatrix m = io::load_matrix(dir / (name + ".mlcmat"));
    if (m.rows() != rows || m.cols() != cols) {
      throw FormatError("tensor " + name + " does not match its manifest shape");
    }
    const auto dot = name.find('.');
    if (dot == std::string::npos) throw FormatError("bad tensor name " + name);
    const std::string head = name.substr(0, dot);
    const std::string field = name.substr(dot + 1);
    MlpParams* p = head == "feature" ? &hp.feature : head == "cluster" ? &hp.cluster : nullptr;
    if (p == nullptr) throw FormatError("unknown head in tensor name " + name);
    if (field == "w1") p->w1 = m;
    else if (field == "b1") p->b1 = m.col(0);
    else if (field == "w2") p->w2 = m;
    else if (field == "b2") p->b2 = m.col(0);
    else throw FormatError("unknown tensor " + name);
    ++count;
  }
  if (count != 8) throw FormatError("manifest lists " + std::to_string(count) + " tensors, need 8");
  return hp;
}

}  // namespace mlc::model
