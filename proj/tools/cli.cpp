#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <string>

#include "mlc/config.hpp"
#include "mlc/datagen.hpp"
#include "mlc/errors.hpp"
#include "mlc/matrix_io.hpp"
#include "mlc/model.hpp"
#include "mlc/pipeline.hpp"

namespace fs = std::filesystem;

namespace mlc::cli {
namespace {

struct Options {
  std::string config;
  std::string out;
  std::string data;
  std::string params;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig resolve_config(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) cfg.master_seed = *o.seed;
  cfg.synth.seed = cfg.master_seed;
  return cfg;
}

datagen::LabeledDataset resolve_data(const Options& o, const ExperimentConfig& cfg) {
  if (!o.data.empty()) return datagen::load_dataset(o.data);
  return datagen::make_synthetic_dataset(cfg.synth);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write " + path.string());
  f << text;
}

void write_run_meta(const fs::path& dir, const std::string& verb, const ExperimentConfig& cfg) {
  write_text(dir / "run-meta.txt", "# " + std::string(kVersion) + "\n# verb " + verb + "\n" +
                                       to_config_text(cfg));
}

nlohmann::json metrics_json(const pipeline::Evaluation& ev, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["acc"] = ev.acc;
  j["nmi"] = ev.nmi;
  j["nmi_normalization"] = "geometric-mean";
  j["laplacian"] = "symmetric-normalized";
  j["R"] = ev.R;
  j["Rc"] = ev.Rc;
  j["deltaR"] = ev.R - ev.Rc;
  j["rank_all"] = ev.rank_all;
  j["rank_clusters"] = ev.rank_clusters;
  j["rank_threshold"] = cfg.rank_threshold;
  j["n"] = ev.z.cols();
  j["k"] = cfg.k;
  j["master_seed"] = cfg.master_seed;
  j["sinkhorn_converged"] = ev.sinkhorn_converged;
  j["marginal_error"] = ev.marginal_error;
  j["version"] = kVersion;
  return j;
}

void write_evaluation(const fs::path& dir, const pipeline::Evaluation& ev, nlohmann::json metrics) {
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  io::save_labels(dir / "labels_pred.txt", ev.pred);
  io::save_matrix(dir / "Z.mlcmat", ev.z);
  io::save_matrix(dir / "gamma.mlcmat", ev.gamma);
}

int cmd_synth(const Options& o, std::ostream& out) {
  const auto cfg = resolve_config(o);
  fs::create_directories(o.out);
  const auto data = datagen::make_synthetic_dataset(cfg.synth);
  datagen::save_dataset(o.out, data);
  write_run_meta(o.out, "synth", cfg);
  out << "wrote " << data.x.cols() << " points to " << o.out << "\n";
  return 0;
}

int cmd_train_tcr(const Options& o, std::ostream& out) {
  const auto cfg = resolve_config(o);
  const auto data = resolve_data(o, cfg);
  fs::create_directories(o.out);
  auto hp = o.params.empty() ? pipeline::init_heads(static_cast<int>(data.x.rows()), cfg)
                             : model::load_params(o.params);
  const double before = pipeline::tcr_value(data, hp, cfg);
  hp = pipeline::train_tcr(data, std::move(hp), cfg);
  const double after = pipeline::tcr_value(data, hp, cfg);
  hp = pipeline::init_membership(hp, cfg);
  model::save_params(fs::path(o.out) / "params", hp);
  write_run_meta(o.out, "train-tcr", cfg);
  out << "tcr objective " << before << " -> " << after << "\n";
  return 0;
}

int cmd_train_mlc(const Options& o, std::ostream& out) {
  const auto cfg = resolve_config(o);
  const auto data = resolve_data(o, cfg);
  fs::create_directories(o.out);
  auto res = pipeline::train_mlc(data, model::load_params(o.params), cfg);
  model::save_params(fs::path(o.out) / "params", res.heads);
  pipeline::write_epoch_csv(fs::path(o.out) / "epochs.csv", res.records);
  write_run_meta(o.out, "train-mlc", cfg);
  if (res.sinkhorn_unconverged > 0) {
    out << "warning: " << res.sinkhorn_unconverged << " projections hit sinkhorn_max_iters\n";
  }
  out << "trained " << res.records.size() << " epochs\n";
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto cfg = resolve_config(o);
  const auto data = resolve_data(o, cfg);
  fs::create_directories(o.out);
  const auto ev = pipeline::evaluate(data, model::load_params(o.params), cfg);
  write_evaluation(o.out, ev, metrics_json(ev, cfg));
  write_run_meta(o.out, "eval", cfg);
  out << "acc " << ev.acc << " nmi " << ev.nmi << "\n";
  return 0;
}

int cmd_full(const Options& o, std::ostream& out) {
  const auto cfg = resolve_config(o);
  const auto data = resolve_data(o, cfg);
  fs::create_directories(o.out);
  const auto res = pipeline::run_pipeline(data, cfg);
  auto metrics = metrics_json(res.eval, cfg);
  metrics["tcr_before"] = res.tcr_before;
  metrics["tcr_after"] = res.tcr_after;
  metrics["sinkhorn_unconverged"] = res.sinkhorn_unconverged;
  write_evaluation(o.out, res.eval, metrics);
  model::save_params(fs::path(o.out) / "params", res.heads);
  pipeline::write_epoch_csv(fs::path(o.out) / "epochs.csv", res.records);
  write_run_meta(o.out, "full", cfg);
  out << "acc " << res.eval.acc << " nmi " << res.eval.nmi << "\n";
  return 0;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  const auto base = resolve_config(o);
  const auto data = resolve_data(o, base);
  fs::create_directories(o.out);
  struct Variant {
    const char* name;
    bool stage1;
    bool augment;
  };
  const Variant variants[] = {
      {"full", true, true}, {"no-stage-1", false, true}, {"no-augmentation", true, false}};
  std::string csv = "variant,acc,nmi\n";
  nlohmann::json summary;
  for (const auto& v : variants) {
    ExperimentConfig cfg = base;
    cfg.self_supervised_init = v.stage1;
    cfg.mlc_augment = v.augment;
    const auto res = pipeline::run_pipeline(data, cfg);
    char line[128];
    std::snprintf(line, sizeof(line), "%s,%.6f,%.6f\n", v.name, res.eval.acc, res.eval.nmi);
    csv += line;
    summary[v.name] = {{"acc", res.eval.acc}, {"nmi", res.eval.nmi}};
    out << line;
  }
  write_text(fs::path(o.out) / "ablation.csv", csv);
  write_text(fs::path(o.out) / "metrics.json", summary.dump(2) + "\n");
  write_run_meta(o.out, "ablate", base);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Manifold linearizing and clustering", "mlc"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Options o;
  auto add_common = [&o](CLI::App* sub, bool needs_params) {
    sub->add_option("--config", o.config, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory")->required();
    sub->add_option("--seed", o.seed, "master seed override");
    sub->add_option("--data", o.data, "dataset directory (default: synthesize)")
        ->check(CLI::ExistingDirectory);
    auto* p = sub->add_option("--params", o.params, "parameter directory")
                  ->check(CLI::ExistingDirectory);
    if (needs_params) p->required();
  };
  struct Verb {
    const char* name;
    const char* help;
    bool needs_params;
    int (*fn)(const Options&, std::ostream&);
  };
  const Verb verbs[] = {
      {"synth", "write the synthetic two-manifold dataset", false, cmd_synth},
      {"train-tcr", "stage 1: self-supervised feature initialization", false, cmd_train_tcr},
      {"train-mlc", "stage 2: joint feature and membership training", true, cmd_train_mlc},
      {"eval", "full-data readout and metrics", true, cmd_eval},
      {"full", "both stages and the readout", false, cmd_full},
      {"ablate", "full pipeline against its two ablations", false, cmd_ablate},
  };
  std::vector<std::pair<CLI::App*, const Verb*>> subs;
  for (const auto& v : verbs) {
    auto* sub = app.add_subcommand(v.name, v.help);
    add_common(sub, v.needs_params);
    subs.emplace_back(sub, &v);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    for (const auto& [sub, verb] : subs) {
      if (sub->parsed()) return verb->fn(o, out);
    }
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 1;
}

}  // namespace mlc::cli
