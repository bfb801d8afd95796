#include "confusable/config.hpp"

#include <algorithm>
#include <iterator>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "confusable/errors.hpp"

namespace confusable {
namespace {

constexpr std::string_view kKnownKeys[] = {
    "data.train",          "data.validation",      "data.test",
    "train.episodes",      "train.lr",             "train.optimizer",
    "train.mode",          "train.eval_every",     "train.seed",
    "train.patience",      "train.min_delta",      "train.temperature",
    "train.audit_cme",     "train.threads",        "episode.n_s",
    "episode.n_q",         "episode.n_d",          "episode.n_tc",
    "cme.rho",             "cme.n_te",             "cme.m_steps",
    "cme.temperature",     "model.learner",        "model.hidden",
    "model.d_emb",         "eval.n_s",             "eval.n_q",
    "eval.episodes",       "eval.way",             "synthetic.k",
    "synthetic.pairs",     "synthetic.d_in",       "synthetic.sigma_within",
    "synthetic.delta_pair", "synthetic.delta_far", "synthetic.n_per_class",
    "synthetic.seed",      "synthetic.nuisance_dims", "synthetic.nuisance_sigma",
    "synthetic.center_radius", "synthetic.split",  "bench.n_te",
    "bench.m_steps",       "bench.repetitions",    "bench.n_s",
    "bench.n_q",           "bench.rho",            "bench.seed",
};

bool is_known_key(std::string_view key) {
  return std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) != std::end(kKnownKeys);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Empty text is an empty list; empty items between commas are kept so callers
// can reject them.
std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    auto item = trim(text.substr(start, end - start));
    out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const ConfigMap& config) : config_(config) {}

  const std::string* find(const std::string& key) const {
    const auto it = config_.find(key);
    return it == config_.end() ? nullptr : &it->second;
  }

  void read(const std::string& key, std::size_t& out) const {
    if (const auto* v = find(key)) {
      std::size_t value = 0;
      const auto res = std::from_chars(v->data(), v->data() + v->size(), value);
      if (res.ec != std::errc{} || res.ptr != v->data() + v->size()) bad(key, *v);
      out = value;
    }
  }
  void read(const std::string& key, double& out) const {
    if (const auto* v = find(key)) {
      try {
        out = parse_double(*v);
      } catch (const Error&) {
        bad(key, *v);
      }
    }
  }
  void read(const std::string& key, bool& out) const {
    if (const auto* v = find(key)) {
      if (*v == "true" || *v == "1" || *v == "yes") {
        out = true;
      } else if (*v == "false" || *v == "0" || *v == "no") {
        out = false;
      } else {
        bad(key, *v);
      }
    }
  }
  void read(const std::string& key, std::vector<std::size_t>& out) const {
    if (const auto* v = find(key)) {
      std::vector<std::size_t> values;
      for (const auto& item : split_list(*v)) {
        std::size_t value = 0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), value);
        if (res.ec != std::errc{} || res.ptr != item.data() + item.size()) bad(key, *v);
        values.push_back(value);
      }
      out = std::move(values);
    }
  }

  template <typename Parse, typename T>
  void read_enum(const std::string& key, T& out, Parse parse) const {
    if (const auto* v = find(key)) {
      try {
        out = parse(*v);
      } catch (const ConfigError& e) {
        throw ConfigError(key + ": " + e.what());
      }
    }
  }

 private:
  [[noreturn]] static void bad(const std::string& key, const std::string& value) {
    throw ConfigError("invalid value '" + value + "' for " + key);
  }

  const ConfigMap& config_;
};

}  // namespace

ConfigMap parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }
  ConfigMap out;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      out[name] = trim(node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) out[name + "." + key] = trim(leaf.data());
  }
  return out;
}

ConfigMap load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const ConfigMap& config) {
  std::string section;
  for (const auto& [key, value] : config) {
    const auto dot = key.find('.');
    const std::string sec = dot == std::string::npos ? std::string() : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (sec != section) {
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << name << " = " << value << '\n';
  }
}

std::vector<std::string> known_keys() { return {std::begin(kKnownKeys), std::end(kKnownKeys)}; }

void check_known_keys(const ConfigMap& config) {
  for (const auto& [key, value] : config) {
    if (!is_known_key(key)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

void apply_override(ConfigMap& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  if (!is_known_key(key)) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  config[key] = trim(assignment.substr(eq + 1));
}

SyntheticSpec synthetic_spec_from(const ConfigMap& config) {
  Reader r(config);
  SyntheticSpec spec;
  r.read("synthetic.k", spec.k);
  r.read("synthetic.pairs", spec.pairs);
  r.read("synthetic.d_in", spec.d_in);
  r.read("synthetic.sigma_within", spec.sigma_within);
  r.read("synthetic.delta_pair", spec.delta_pair);
  r.read("synthetic.delta_far", spec.delta_far);
  r.read("synthetic.n_per_class", spec.n_per_class);
  r.read("synthetic.seed", spec.seed);
  r.read("synthetic.nuisance_dims", spec.nuisance_dims);
  r.read("synthetic.nuisance_sigma", spec.nuisance_sigma);
  r.read("synthetic.center_radius", spec.center_radius);
  return spec;
}

TrainConfig train_config_from(const ConfigMap& config) {
  Reader r(config);
  TrainConfig cfg;
  r.read("train.episodes", cfg.episodes);
  r.read("train.lr", cfg.lr);
  r.read_enum("train.optimizer", cfg.optimizer, parse_optimizer_kind);
  r.read_enum("train.mode", cfg.mode, parse_training_mode);
  r.read("train.eval_every", cfg.eval_every);
  r.read("train.seed", cfg.seed);
  r.read("train.patience", cfg.patience);
  r.read("train.min_delta", cfg.min_delta);
  r.read("train.temperature", cfg.temperature);
  r.read("train.audit_cme", cfg.audit_cme);
  r.read("train.threads", cfg.eval.threads);
  r.read("episode.n_s", cfg.episode.n_s);
  r.read("episode.n_q", cfg.episode.n_q);
  r.read("episode.n_d", cfg.episode.n_d);
  r.read("episode.n_tc", cfg.episode.n_tc);
  r.read("cme.rho", cfg.estimator.rho);
  r.read("cme.n_te", cfg.estimator.n_te);
  r.read("cme.m_steps", cfg.estimator.m_steps);
  r.read("cme.temperature", cfg.estimator.temperature);
  r.read_enum("model.learner", cfg.learner, parse_learner_kind);
  r.read("model.hidden", cfg.hidden);
  r.read("model.d_emb", cfg.d_emb);
  cfg.eval.n_s = cfg.episode.n_s;
  cfg.eval.n_q = cfg.episode.n_q;
  r.read("eval.n_s", cfg.eval.n_s);
  r.read("eval.n_q", cfg.eval.n_q);
  r.read("eval.episodes", cfg.eval.episodes);
  r.read("eval.way", cfg.eval.way);
  return cfg;
}

std::vector<CmeBenchmarkConfig> bench_configs_from(const ConfigMap& config) {
  Reader r(config);
  std::vector<std::size_t> n_te{8};
  std::vector<std::size_t> m_steps{1};
  r.read("bench.n_te", n_te);
  r.read("bench.m_steps", m_steps);
  if (n_te.empty() || m_steps.empty()) throw ConfigError("bench: n_te and m_steps need values");
  std::vector<CmeBenchmarkConfig> out;
  for (auto m : m_steps) {
    for (auto n : n_te) out.push_back({m, n});
  }
  return out;
}

CmeBenchmarkOptions bench_options_from(const ConfigMap& config) {
  Reader r(config);
  CmeBenchmarkOptions opts;
  r.read("bench.repetitions", opts.repetitions);
  r.read("bench.n_s", opts.n_s);
  r.read("bench.n_q", opts.n_q);
  r.read("bench.rho", opts.rho);
  r.read("bench.seed", opts.seed);
  return opts;
}

DataPaths data_paths_from(const ConfigMap& config) {
  DataPaths paths;
  auto get = [&](const char* key) -> std::optional<std::filesystem::path> {
    const auto it = config.find(key);
    if (it == config.end() || it->second.empty()) return std::nullopt;
    return std::filesystem::path(it->second);
  };
  paths.train = get("data.train");
  paths.validation = get("data.validation");
  paths.test = get("data.test");
  return paths;
}

Sweep parse_sweep(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("sweep '" + std::string(text) + "' is not name=v1,v2,...");
  }
  Sweep sweep;
  const std::string name = trim(text.substr(0, eq));
  if (name == "rho") {
    sweep.key = "cme.rho";
  } else if (name == "n_te") {
    sweep.key = "cme.n_te";
  } else if (name == "n_d") {
    sweep.key = "episode.n_d";
  } else if (name == "n_tc") {
    sweep.key = "episode.n_tc";
  } else {
    sweep.key = name;
  }
  if (!is_known_key(sweep.key)) {
    throw ConfigError("cannot sweep unknown key '" + name + "'");
  }
  sweep.values = split_list(text.substr(eq + 1));
  if (sweep.values.empty() ||
      std::find(sweep.values.begin(), sweep.values.end(), "") != sweep.values.end()) {
    throw ConfigError("sweep '" + name + "' has an empty value");
  }
  return sweep;
}

}  // namespace confusable
