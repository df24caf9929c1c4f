#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mlc/datagen.hpp"
#include "mlc/transport.hpp"

namespace mlc {

inline constexpr const char* kVersion = "mlc 1.0.0";

/// Every scalar of the two-stage pipeline. Field names double as the keys
/// of the plain-text config format.
struct ExperimentConfig {
  // data (synthetic generator; ignored when a dataset is loaded from disk)
  datagen::SynthConfig synth;

  // heads
  int hidden = 100;
  int feature_dim = 3;

  // stage 1: total coding rate
  double tcr_eps_sq = 0.2;
  std::optional<double> tcr_lambda;  // unset: 20 / batch size
  int epochs_tcr = 500;
  double tcr_lr = 0.05;

  // stage 2: rate reduction against the doubly stochastic membership
  double mlc_eps_sq = 0.1;
  transport::SinkhornConfig sinkhorn;
  int epochs_mlc = 500;
  double feature_lr = 1e-2;
  double cluster_lr = 1e-2;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 1024;
  int num_aug = 2;
  double aug_sigma = 0.05;
  int k = 2;

  // ablation switches
  bool self_supervised_init = true;  // false: skip stage 1, keep random heads
  bool mlc_augment = true;           // false: one clean view per batch in stage 2

  // readout and diagnostics
  int kmeans_restarts = 10;
  double rank_threshold = 0.95;
  int full_gamma_cap = 4096;
  int readout_max_iters = 10000;  // Sinkhorn budget for the final full-data membership
  int eval_every = 1;  // clustering metrics in epoch records every N epochs

  std::uint64_t master_seed = 0;

  [[nodiscard]] double resolved_tcr_lambda(Eigen::Index batch_cols) const {
    return tcr_lambda ? *tcr_lambda : 20.0 / static_cast<double>(batch_cols);
  }
};

/// Parse error carrying the offending line number (0 for whole-file checks).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& msg)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  [[nodiscard]] int line() const { return line_; }

 private:
  int line_;
};

/// `key = value` lines, `#` starts a comment, unknown keys are rejected,
/// missing keys keep their defaults. Validates the result.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError on any invariant violation.
void validate(const ExperimentConfig& cfg);

/// Full resolved config in the same format; parse_config(to_config_text(c))
/// reproduces c exactly.
std::string to_config_text(const ExperimentConfig& cfg);

}  // namespace mlc
