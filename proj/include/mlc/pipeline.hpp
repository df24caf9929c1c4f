#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mlc/config.hpp"
#include "mlc/datagen.hpp"
#include "mlc/evalmetrics.hpp"
#include "mlc/model.hpp"

namespace mlc::pipeline {

/// Diagnostics for one epoch of the clustering stage, measured after the
/// epoch's updates on a clean full-data forward pass.
struct EpochRecord {
  int epoch = 0;
  double R = 0.0;
  double Rc = 0.0;
  double deltaR = 0.0;
  int rank_all = 0;
  std::vector<int> rank_clusters;  // ascending ground-truth label
  double acc = -1.0;  // -1 on epochs skipped by eval_every
  double nmi = -1.0;
  double ms = 0.0;
};

/// Random heads: input_dim -> hidden -> feature_dim for both heads.
model::HeadPair init_heads(int input_dim, const ExperimentConfig& cfg);

/// Ascent on R((Z + Z') / 2) + lambda sum |z_i^T z'_i| over two jittered
/// views. Only the feature head changes.
model::HeadPair train_tcr(const datagen::LabeledDataset& data, model::HeadPair hp,
                          const ExperimentConfig& cfg);

/// Mean TCR objective over the same two views per batch used for training,
/// drawn from a fixed stream so before/after values are comparable.
double tcr_value(const datagen::LabeledDataset& data, const model::HeadPair& hp,
                 const ExperimentConfig& cfg);

/// Cluster head becomes a copy of the feature head.
model::HeadPair init_membership(const model::HeadPair& hp, const ExperimentConfig& cfg);

struct MlcResult {
  model::HeadPair heads;
  std::vector<EpochRecord> records;
  int sinkhorn_unconverged = 0;  // batches whose projection hit max_iters
};

MlcResult train_mlc(const datagen::LabeledDataset& data, model::HeadPair hp,
                    const ExperimentConfig& cfg);

/// Full-data readout: features, membership, predicted labels and scores.
struct Evaluation {
  FeatureMatrix z;
  MembershipMatrix gamma;
  eval::LabelVector pred;
  double acc = 0.0;
  double nmi = 0.0;
  double R = 0.0;
  double Rc = 0.0;
  int rank_all = 0;
  std::vector<int> rank_clusters;
  bool sinkhorn_converged = false;
  double marginal_error = 0.0;
};

Evaluation evaluate(const datagen::LabeledDataset& data, const model::HeadPair& hp,
                    const ExperimentConfig& cfg);

struct PipelineResult {
  model::HeadPair heads;
  std::vector<EpochRecord> records;
  Evaluation eval;
  double tcr_before = 0.0;
  double tcr_after = 0.0;
  int sinkhorn_unconverged = 0;
};

PipelineResult run_pipeline(const datagen::LabeledDataset& data, const ExperimentConfig& cfg);

/// Header: epoch,R,Rc,deltaR,rank_all,rank_c0,...,acc,nmi,ms
void write_epoch_csv(std::ostream& out, const std::vector<EpochRecord>& records);
void write_epoch_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& records);

}  // namespace mlc::pipeline
