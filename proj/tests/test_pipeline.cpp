#include <doctest.h>

#include <chrono>
#include <sstream>

#include "mlc/pipeline.hpp"
#include "mlc/rates.hpp"
#include "mlc/transport.hpp"

using namespace mlc;

namespace {

// Small, quick setting: 30 + 30 points, few epochs.
ExperimentConfig small_config(std::uint64_t seed = 3) {
  ExperimentConfig cfg;
  cfg.synth.points_per_manifold = 30;
  cfg.synth.seed = seed;
  cfg.master_seed = seed;
  cfg.hidden = 16;
  cfg.epochs_tcr = 20;
  cfg.epochs_mlc = 5;
  cfg.kmeans_restarts = 3;
  return cfg;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("stage 1") {
    const auto cfg = small_config();
    const auto data = datagen::make_synthetic_dataset(cfg.synth);
    const auto hp0 = pipeline::init_heads(3, cfg);

    auto zero = cfg;
    zero.epochs_tcr = 0;
    const auto same = pipeline::train_tcr(data, hp0, zero);
    CHECK(same.feature == hp0.feature);

    auto longer = cfg;
    longer.epochs_tcr = 100;
    const auto trained = pipeline::train_tcr(data, hp0, longer);
    CHECK(trained.cluster == hp0.cluster);
    CHECK(pipeline::tcr_value(data, trained, longer) > pipeline::tcr_value(data, hp0, longer));
    CHECK(pipeline::train_tcr(data, hp0, longer).feature == trained.feature);
  }

  TEST_CASE("one-shot membership initialization") {
    const auto cfg = small_config();
    const auto data = datagen::make_synthetic_dataset(cfg.synth);
    const auto hp = pipeline::train_tcr(data, pipeline::init_heads(3, cfg), cfg);

    const auto t0 = std::chrono::steady_clock::now();
    const auto init = pipeline::init_membership(hp, cfg);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    CHECK(ms < 1.0);
    CHECK(init.feature == hp.feature);

    const DenseMatrix x = numerics::sphere_project_columns(data.x);
    const auto z = model::head_forward(init.feature, x).z;
    const auto c = model::head_forward(init.cluster, x).z;
    const auto via_cluster = transport::sinkhorn_project(transport::gram_similarity(c), cfg.sinkhorn);
    const auto via_feature = transport::sinkhorn_project(z.transpose() * z, cfg.sinkhorn);
    CHECK(via_cluster.gamma == transport::sinkhorn_project(transport::gram_similarity(z), cfg.sinkhorn).gamma);
    CHECK((via_cluster.gamma - via_feature.gamma).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("stage 2 records and determinism") {
    const auto cfg = small_config();
    const auto data = datagen::make_synthetic_dataset(cfg.synth);
    const auto hp = pipeline::init_membership(pipeline::init_heads(3, cfg), cfg);

    auto zero = cfg;
    zero.epochs_mlc = 0;
    const auto none = pipeline::train_mlc(data, hp, zero);
    CHECK(none.records.empty());
    CHECK(none.heads.feature == hp.feature);
    CHECK(none.heads.cluster == hp.cluster);

    const auto a = pipeline::train_mlc(data, hp, cfg);
    const auto b = pipeline::train_mlc(data, hp, cfg);
    REQUIRE(a.records.size() == 5);
    CHECK(a.heads.feature == b.heads.feature);
    CHECK(a.heads.cluster == b.heads.cluster);
    for (std::size_t e = 0; e < a.records.size(); ++e) {
      const auto& r = a.records[e];
      CHECK(r.epoch == static_cast<int>(e));
      CHECK(r.deltaR == r.R - r.Rc);
      CHECK(r.R == b.records[e].R);
      CHECK(r.Rc == b.records[e].Rc);
      CHECK(r.acc == b.records[e].acc);
      CHECK(r.rank_clusters.size() == 2);
    }
    CHECK_FALSE(a.heads.cluster == hp.cluster);
  }

  TEST_CASE("mini-batches smaller than the dataset") {
    auto cfg = small_config();
    cfg.batch_size = 16;
    cfg.epochs_tcr = 3;
    cfg.epochs_mlc = 3;
    const auto data = datagen::make_synthetic_dataset(cfg.synth);
    const auto res = pipeline::run_pipeline(data, cfg);
    CHECK(res.records.size() == 3);
    CHECK(res.eval.pred.size() == 60);
    const auto again = pipeline::run_pipeline(data, cfg);
    CHECK(again.eval.pred == res.eval.pred);
    CHECK(again.heads.feature == res.heads.feature);
  }

  TEST_CASE("readout") {
    auto cfg = small_config();
    const auto data = datagen::make_synthetic_dataset(cfg.synth);
    const auto res = pipeline::run_pipeline(data, cfg);
    CHECK(res.eval.sinkhorn_converged);
    CHECK(transport::marginal_error(res.eval.gamma) <= cfg.sinkhorn.tol);
    CHECK(res.eval.z.cols() == 60);
    CHECK(res.eval.R == rates::expand_rate(res.eval.z, {cfg.mlc_eps_sq, cfg.feature_dim}));

    // cluster outputs assembled in blocks give the same membership
    auto blocked = cfg;
    blocked.full_gamma_cap = 7;
    const auto ev = pipeline::evaluate(data, res.heads, blocked);
    CHECK((ev.gamma - res.eval.gamma).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ev.pred == res.eval.pred);

    auto single = cfg;
    single.k = 1;
    const auto one = pipeline::evaluate(data, res.heads, single);
    CHECK(one.acc == doctest::Approx(0.5));
    CHECK(std::all_of(one.pred.begin(), one.pred.end(), [](int v) { return v == 0; }));
  }

  TEST_CASE("epoch csv layout") {
    pipeline::EpochRecord r;
    r.epoch = 4;
    r.R = 2.5;
    r.Rc = 1.0;
    r.deltaR = 1.5;
    r.rank_all = 3;
    r.rank_clusters = {2, 1};
    r.acc = 1.0;
    r.nmi = 1.0;
    r.ms = 12.0;
    std::ostringstream out;
    pipeline::write_epoch_csv(out, {r});
    CHECK(out.str() == "epoch,R,Rc,deltaR,rank_all,rank_c0,rank_c1,acc,nmi,ms\n4,2.5,1,1.5,3,2,1,1,1,12\n");
  }
}
