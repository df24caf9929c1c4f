#include "mlc/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace mlc {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
  return {buf, res.ptr};
}

double parse_double(const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("expected a number, got '" + v + "'");
  }
  if (used != v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
  return out;
}

template <class Int>
Int parse_int(const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected an integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field number_field(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) c.*member = parse_double(v);
            else c.*member = parse_int<T>(v);
          },
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
            else return std::to_string(c.*member);
          }};
}

Field bool_field(bool ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) { c.*member = parse_bool(v); },
          [member](const ExperimentConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

// Ordered as they appear in written configs.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"master_seed", number_field(&ExperimentConfig::master_seed)},
      {"synth_amp", {[](ExperimentConfig& c, const std::string& v) { c.synth.amp = parse_double(v); },
                     [](const ExperimentConfig& c) { return format_double(c.synth.amp); }}},
      {"synth_omega",
       {[](ExperimentConfig& c, const std::string& v) { c.synth.omega = parse_double(v); },
        [](const ExperimentConfig& c) { return format_double(c.synth.omega); }}},
      {"synth_noise_std",
       {[](ExperimentConfig& c, const std::string& v) { c.synth.noise_std = parse_double(v); },
        [](const ExperimentConfig& c) { return format_double(c.synth.noise_std); }}},
      {"points_per_manifold",
       {[](ExperimentConfig& c, const std::string& v) {
          c.synth.points_per_manifold = parse_int<int>(v);
        },
        [](const ExperimentConfig& c) { return std::to_string(c.synth.points_per_manifold); }}},
      {"hidden", number_field(&ExperimentConfig::hidden)},
      {"feature_dim", number_field(&ExperimentConfig::feature_dim)},
      {"tcr_eps_sq", number_field(&ExperimentConfig::tcr_eps_sq)},
      {"tcr_lambda",
       {[](ExperimentConfig& c, const std::string& v) {
          if (v == "auto") c.tcr_lambda.reset();
          else c.tcr_lambda = parse_double(v);
        },
        [](const ExperimentConfig& c) {
          return c.tcr_lambda ? format_double(*c.tcr_lambda) : std::string("auto");
        }}},
      {"epochs_tcr", number_field(&ExperimentConfig::epochs_tcr)},
      {"tcr_lr", number_field(&ExperimentConfig::tcr_lr)},
      {"mlc_eps_sq", number_field(&ExperimentConfig::mlc_eps_sq)},
      {"eta", {[](ExperimentConfig& c, const std::string& v) { c.sinkhorn.eta = parse_double(v); },
               [](const ExperimentConfig& c) { return format_double(c.sinkhorn.eta); }}},
      {"sinkhorn_max_iters",
       {[](ExperimentConfig& c, const std::string& v) { c.sinkhorn.max_iters = parse_int<int>(v); },
        [](const ExperimentConfig& c) { return std::to_string(c.sinkhorn.max_iters); }}},
      {"sinkhorn_tol",
       {[](ExperimentConfig& c, const std::string& v) { c.sinkhorn.tol = parse_double(v); },
        [](const ExperimentConfig& c) { return format_double(c.sinkhorn.tol); }}},
      {"epochs_mlc", number_field(&ExperimentConfig::epochs_mlc)},
      {"feature_lr", number_field(&ExperimentConfig::feature_lr)},
      {"cluster_lr", number_field(&ExperimentConfig::cluster_lr)},
      {"momentum", number_field(&ExperimentConfig::momentum)},
      {"weight_decay", number_field(&ExperimentConfig::weight_decay)},
      {"batch_size", number_field(&ExperimentConfig::batch_size)},
      {"num_aug", number_field(&ExperimentConfig::num_aug)},
      {"aug_sigma", number_field(&ExperimentConfig::aug_sigma)},
      {"k", number_field(&ExperimentConfig::k)},
      {"self_supervised_init", bool_field(&ExperimentConfig::self_supervised_init)},
      {"mlc_augment", bool_field(&ExperimentConfig::mlc_augment)},
      {"kmeans_restarts", number_field(&ExperimentConfig::kmeans_restarts)},
      {"rank_threshold", number_field(&ExperimentConfig::rank_threshold)},
      {"full_gamma_cap", number_field(&ExperimentConfig::full_gamma_cap)},
      {"readout_max_iters", number_field(&ExperimentConfig::readout_max_iters)},
      {"eval_every", number_field(&ExperimentConfig::eval_every)},
  };
  return table;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(0, msg);
  };
  require(c.synth.points_per_manifold >= 1, "points_per_manifold must be >= 1");
  require(c.synth.noise_std >= 0.0, "synth_noise_std must be >= 0");
  require(c.hidden >= 1, "hidden must be >= 1");
  require(c.feature_dim >= 1, "feature_dim must be >= 1");
  require(c.tcr_eps_sq > 0.0, "tcr_eps_sq must be > 0");
  require(!c.tcr_lambda || *c.tcr_lambda >= 0.0, "tcr_lambda must be >= 0");
  require(c.epochs_tcr >= 0, "epochs_tcr must be >= 0");
  require(c.tcr_lr >= 0.0, "tcr_lr must be >= 0");
  require(c.mlc_eps_sq > 0.0, "mlc_eps_sq must be > 0");
  require(c.sinkhorn.eta > 0.0, "eta must be > 0");
  require(c.sinkhorn.max_iters >= 1, "sinkhorn_max_iters must be >= 1");
  require(c.sinkhorn.tol > 0.0, "sinkhorn_tol must be > 0");
  require(c.epochs_mlc >= 0, "epochs_mlc must be >= 0");
  require(c.feature_lr >= 0.0 && c.cluster_lr >= 0.0, "learning rates must be >= 0");
  require(c.momentum >= 0.0 && c.momentum < 1.0, "momentum must be in [0, 1)");
  require(c.weight_decay >= 0.0, "weight_decay must be >= 0");
  require(c.batch_size >= 2, "batch_size must be >= 2");
  require(c.num_aug >= 1, "num_aug must be >= 1");
  require(c.aug_sigma >= 0.0, "aug_sigma must be >= 0");
  require(c.k >= 1, "k must be >= 1");
  require(c.kmeans_restarts >= 1, "kmeans_restarts must be >= 1");
  require(c.rank_threshold > 0.0 && c.rank_threshold < 1.0, "rank_threshold must be in (0, 1)");
  require(c.full_gamma_cap >= 2, "full_gamma_cap must be >= 2");
  require(c.readout_max_iters >= 1, "readout_max_iters must be >= 1");
  require(c.eval_every >= 1, "eval_every must be >= 1");
}

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, const Field*> lookup;
  for (const auto& [name, field] : fields()) lookup[name] = &field;

  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = lookup.find(key);
    if (it == lookup.end()) throw ConfigError(lineno, "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(lineno, "duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(lineno, "missing value for '" + key + "'");
    try {
      it->second->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(lineno, key + ": " + e.what());
    } catch (const std::out_of_range&) {
      throw ConfigError(lineno, key + ": value out of range");
    }
    try {
      validate(cfg);
    } catch (const ConfigError& e) {
      throw ConfigError(lineno, e.what());
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(cfg) + "\n";
  return out;
}

}  // namespace mlc
