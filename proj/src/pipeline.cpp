#include "mlc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "mlc/errors.hpp"
#include "mlc/rates.hpp"
#include "mlc/rng.hpp"
#include "mlc/transport.hpp"

namespace mlc::pipeline {
namespace {

using Clock = std::chrono::steady_clock;

std::vector<std::vector<Eigen::Index>> make_batches(Eigen::Index n, int batch_size,
                                                    std::mt19937_64& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  if (batch_size >= n) return {order};
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<Eigen::Index>> out;
  for (Eigen::Index start = 0; start < n; start += batch_size) {
    const Eigen::Index stop = std::min<Eigen::Index>(n, start + batch_size);
    // a trailing batch of one point has no pairwise structure; fold it in
    if (stop - start < 2 && !out.empty()) {
      out.back().insert(out.back().end(), order.begin() + start, order.begin() + stop);
      break;
    }
    out.emplace_back(order.begin() + start, order.begin() + stop);
  }
  return out;
}

DenseMatrix gather(const DenseMatrix& x, const std::vector<Eigen::Index>& idx) {
  DenseMatrix out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(idx[j]);
  return out;
}

DenseMatrix make_view(const DenseMatrix& xb, double sigma, bool jitter, std::mt19937_64& rng) {
  if (!jitter) return numerics::sphere_project_columns(xb);
  return datagen::augment_sphere_jitter(xb, sigma, rng);
}

rates::RateParams mlc_rate(const ExperimentConfig& cfg) {
  return {cfg.mlc_eps_sq, cfg.feature_dim};
}

rates::TcrParams tcr_params(const ExperimentConfig& cfg, Eigen::Index batch_cols) {
  return {cfg.tcr_eps_sq, cfg.resolved_tcr_lambda(batch_cols)};
}

struct TcrStep {
  double value = 0.0;
  model::MlpParams grad;
};

TcrStep tcr_step(const model::MlpParams& feature, const DenseMatrix& xb, const ExperimentConfig& cfg,
                 std::mt19937_64& rng) {
  const DenseMatrix x1 = make_view(xb, cfg.aug_sigma, true, rng);
  const DenseMatrix x2 = make_view(xb, cfg.aug_sigma, true, rng);
  const auto f1 = model::head_forward(feature, x1);
  const auto f2 = model::head_forward(feature, x2);
  const auto tcr = rates::tcr_objective_with_grads(f1.z, f2.z, tcr_params(cfg, xb.cols()));
  TcrStep out{tcr.value, model::head_backward(feature, f1.trace, tcr.grad_z)};
  out.grad += model::head_backward(feature, f2.trace, tcr.grad_zp);
  return out;
}

DenseMatrix cluster_outputs(const model::MlpParams& cluster, const DenseMatrix& xs, int cap) {
  if (xs.cols() <= cap) return model::head_forward(cluster, xs).z;
  DenseMatrix c(cluster.output_dim(), xs.cols());
  for (Eigen::Index start = 0; start < xs.cols(); start += cap) {
    const Eigen::Index len = std::min<Eigen::Index>(cap, xs.cols() - start);
    c.middleCols(start, len) = model::head_forward(cluster, xs.middleCols(start, len)).z;
  }
  return c;
}

}  // namespace

model::HeadPair init_heads(int input_dim, const ExperimentConfig& cfg) {
  auto rng = make_stream(cfg.master_seed, "tcr/init");
  model::HeadPair hp;
  hp.feature = model::init_mlp(input_dim, cfg.hidden, cfg.feature_dim, rng);
  hp.cluster = model::init_mlp(input_dim, cfg.hidden, cfg.feature_dim, rng);
  return hp;
}

model::HeadPair train_tcr(const datagen::LabeledDataset& data, model::HeadPair hp,
                          const ExperimentConfig& cfg) {
  auto batch_rng = make_stream(cfg.master_seed, "tcr/batches");
  auto aug_rng = make_stream(cfg.master_seed, "aug/tcr");
  auto sgd = model::make_sgd(hp.feature, cfg.tcr_lr, cfg.momentum, cfg.weight_decay);
  for (int epoch = 0; epoch < cfg.epochs_tcr; ++epoch) {
    for (const auto& idx : make_batches(data.x.cols(), cfg.batch_size, batch_rng)) {
      const auto step = tcr_step(hp.feature, gather(data.x, idx), cfg, aug_rng);
      model::sgd_step(hp.feature, step.grad, sgd, +1);
    }
  }
  return hp;
}

double tcr_value(const datagen::LabeledDataset& data, const model::HeadPair& hp,
                 const ExperimentConfig& cfg) {
  auto rng = make_stream(cfg.master_seed, "aug/tcr-probe");
  const auto step = tcr_step(hp.feature, data.x, cfg, rng);
  return step.value;
}

model::HeadPair init_membership(const model::HeadPair& hp, const ExperimentConfig&) {
  return model::copy_feature_to_cluster(hp);
}

Evaluation evaluate(const datagen::LabeledDataset& data, const model::HeadPair& hp,
                    const ExperimentConfig& cfg) {
  const DenseMatrix xs = numerics::sphere_project_columns(data.x);
  Evaluation ev;
  ev.z = model::head_forward(hp.feature, xs).z;
  const DenseMatrix c = cluster_outputs(hp.cluster, xs, cfg.full_gamma_cap);
  transport::SinkhornConfig readout = cfg.sinkhorn;
  readout.max_iters = std::max(cfg.sinkhorn.max_iters, cfg.readout_max_iters);
  auto sink = transport::sinkhorn_project(transport::gram_similarity(c), readout);
  ev.gamma = std::move(sink.gamma);
  ev.sinkhorn_converged = sink.converged;
  ev.marginal_error = sink.marginal_error;
  const auto rp = mlc_rate(cfg);
  ev.R = rates::expand_rate(ev.z, rp);
  ev.Rc = rates::compress_rate_membership(ev.z, ev.gamma, rp);
  ev.rank_all = eval::numerical_rank(ev.z, cfg.rank_threshold);
  ev.rank_clusters = eval::per_cluster_ranks(ev.z, data.y, cfg.rank_threshold);
  ev.pred = eval::spectral_clustering(ev.gamma, cfg.k, stream_seed(cfg.master_seed, "kmeans"),
                                      cfg.kmeans_restarts);
  ev.acc = eval::clustering_accuracy(ev.pred, data.y);
  ev.nmi = eval::nmi(ev.pred, data.y);
  return ev;
}

MlcResult train_mlc(const datagen::LabeledDataset& data, model::HeadPair hp,
                    const ExperimentConfig& cfg) {
  MlcResult out;
  auto batch_rng = make_stream(cfg.master_seed, "mlc/batches");
  auto aug_rng = make_stream(cfg.master_seed, "aug/mlc");
  auto sgd_f = model::make_sgd(hp.feature, cfg.feature_lr, cfg.momentum, cfg.weight_decay);
  auto sgd_c = model::make_sgd(hp.cluster, cfg.cluster_lr, cfg.momentum, cfg.weight_decay);
  const auto rp = mlc_rate(cfg);
  const int views = cfg.mlc_augment ? cfg.num_aug : 1;

  for (int epoch = 0; epoch < cfg.epochs_mlc; ++epoch) {
    const auto t0 = Clock::now();
    for (const auto& idx : make_batches(data.x.cols(), cfg.batch_size, batch_rng)) {
      const DenseMatrix xb = gather(data.x, idx);
      std::vector<model::HeadOutput> fz;
      std::vector<model::HeadOutput> cz;
      std::vector<transport::SinkhornResult> sinks;
      std::vector<FeatureMatrix> zs;
      std::vector<MembershipMatrix> gammas;
      for (int a = 0; a < views; ++a) {
        const DenseMatrix xa = make_view(xb, cfg.aug_sigma, cfg.mlc_augment, aug_rng);
        fz.push_back(model::head_forward(hp.feature, xa));
        cz.push_back(model::head_forward(hp.cluster, xa));
        sinks.push_back(
            transport::sinkhorn_project(transport::gram_similarity(cz.back().z), cfg.sinkhorn));
        if (!sinks.back().converged) ++out.sinkhorn_unconverged;
        zs.push_back(fz.back().z);
        gammas.push_back(sinks.back().gamma);
      }
      const auto agg = model::average_aug_features(zs);
      const auto gamma = model::average_aug_memberships(gammas);
      const auto obj = rates::mlc_objective_with_grads(agg.z, gamma, rp);

      const DenseMatrix gz_view = model::average_aug_features_backward(agg, obj.grad_z);
      const DenseMatrix gg_view = obj.grad_gamma / static_cast<double>(views);
      model::MlpParams gf = hp.feature.zeros_like();
      model::MlpParams gc = hp.cluster.zeros_like();
      for (int a = 0; a < views; ++a) {
        gf += model::head_backward(hp.feature, fz[a].trace, gz_view);
        const DenseMatrix gs = transport::sinkhorn_vjp(sinks[a].trace, gg_view);
        gc += model::head_backward(hp.cluster, cz[a].trace,
                                   transport::gram_similarity_backward(cz[a].z, gs));
      }
      model::sgd_step(hp.feature, gf, sgd_f, +1);
      model::sgd_step(hp.cluster, gc, sgd_c, +1);
    }
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.ms = ms;
    const bool score = (epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs_mlc;
    const DenseMatrix xs = numerics::sphere_project_columns(data.x);
    const FeatureMatrix z = model::head_forward(hp.feature, xs).z;
    const DenseMatrix c = cluster_outputs(hp.cluster, xs, cfg.full_gamma_cap);
    const auto sink = transport::sinkhorn_project(transport::gram_similarity(c), cfg.sinkhorn);
    rec.R = rates::expand_rate(z, rp);
    rec.Rc = rates::compress_rate_membership(z, sink.gamma, rp);
    rec.deltaR = rec.R - rec.Rc;
    rec.rank_all = eval::numerical_rank(z, cfg.rank_threshold);
    rec.rank_clusters = eval::per_cluster_ranks(z, data.y, cfg.rank_threshold);
    if (score) {
      const auto pred = eval::spectral_clustering(
          sink.gamma, cfg.k, stream_seed(cfg.master_seed, "kmeans"), cfg.kmeans_restarts);
      rec.acc = eval::clustering_accuracy(pred, data.y);
      rec.nmi = eval::nmi(pred, data.y);
    }
    out.records.push_back(std::move(rec));
  }
  out.heads = std::move(hp);
  return out;
}

PipelineResult run_pipeline(const datagen::LabeledDataset& data, const ExperimentConfig& cfg) {
  validate(cfg);
  if (data.x.cols() != static_cast<Eigen::Index>(data.y.size())) {
    throw LengthMismatch("dataset has " + std::to_string(data.x.cols()) + " points and " +
                         std::to_string(data.y.size()) + " labels");
  }
  PipelineResult res;
  model::HeadPair hp = init_heads(static_cast<int>(data.x.rows()), cfg);
  if (cfg.self_supervised_init) {
    res.tcr_before = tcr_value(data, hp, cfg);
    hp = train_tcr(data, std::move(hp), cfg);
    res.tcr_after = tcr_value(data, hp, cfg);
  }
  hp = init_membership(hp, cfg);
  auto mlc = train_mlc(data, std::move(hp), cfg);
  res.heads = std::move(mlc.heads);
  res.records = std::move(mlc.records);
  res.sinkhorn_unconverged = mlc.sinkhorn_unconverged;
  res.eval = evaluate(data, res.heads, cfg);
  return res;
}

void write_epoch_csv(std::ostream& out, const std::vector<EpochRecord>& records) {
  const std::size_t clusters = records.empty() ? 0 : records.front().rank_clusters.size();
  out << "epoch,R,Rc,deltaR,rank_all";
  for (std::size_t j = 0; j < clusters; ++j) out << ",rank_c" << j;
  out << ",acc,nmi,ms\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (const auto& r : records) {
    out << r.epoch << ',' << num(r.R) << ',' << num(r.Rc) << ',' << num(r.deltaR) << ','
        << r.rank_all;
    for (int rk : r.rank_clusters) out << ',' << rk;
    out << ',' << num(r.acc) << ',' << num(r.nmi) << ',' << num(r.ms) << '\n';
  }
}

void write_epoch_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& records) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  write_epoch_csv(out, records);
}

}  // namespace mlc::pipeline
