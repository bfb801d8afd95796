#include "confusable_cli/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "confusable/checkpoint.hpp"
#include "confusable/cme.hpp"
#include "confusable/config.hpp"
#include "confusable/dataset.hpp"
#include "confusable/errors.hpp"
#include "confusable/evaluation.hpp"
#include "confusable/synthetic.hpp"
#include "confusable/trace.hpp"
#include "confusable/training.hpp"
#include "confusable/version.hpp"

namespace confusable::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

Dataset load_dataset_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("dataset directory not found: " + dir.string());
  return load_dataset(dir);
}

ConfigMap load_with_overrides(const std::string& config_path, const std::vector<std::string>& sets) {
  ConfigMap config = config_path.empty() ? ConfigMap{} : load_config(config_path);
  for (const auto& s : sets) apply_override(config, s);
  check_known_keys(config);
  return config;
}

json config_json(const ConfigMap& config) {
  json out = json::object();
  for (const auto& [k, v] : config) out[k] = v;
  return out;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string config;
  std::string out;
  std::string split = "train";
  std::vector<std::string> sets;
};

int cmd_generate(const GenerateArgs& args, std::ostream& out) {
  const ConfigMap config = load_with_overrides(args.config, args.sets);
  const SyntheticSpec spec = synthetic_spec_from(config);
  spec.validate();
  const Dataset dataset = generate_synthetic(spec, parse_split(args.split));
  fs::create_directories(args.out);
  save_dataset(dataset, args.out);
  out << "wrote " << dataset.num_classes() << " classes, " << dataset.total_instances()
      << " instances to " << args.out << "\nchecksum " << hex64(dataset.checksum()) << '\n';
  return kExitOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::size_t> episodes;
  std::optional<std::size_t> threads;
  std::string out = "run";
  std::vector<std::string> sweeps;
  std::vector<std::string> sets;
};

void save_state_files(const fs::path& dir, const std::string& stem, const TrainState& state,
                      const TrainConfig& cfg) {
  save_checkpoint(dir / (stem + ".params"), {cfg.learner, cfg.temperature, state.params});
  if (cfg.mode != TrainingMode::UniformBaseline) {
    auto est = open_output(dir / (stem + ".estimator.csv"));
    write_estimator(est, state.estimator);
  }
}

void train_one(const ConfigMap& config, const fs::path& out_dir, std::ostream& out) {
  const TrainConfig cfg = train_config_from(config);
  const DataPaths paths = data_paths_from(config);
  if (!paths.train) throw InputError("data.train is not set");
  const Dataset train = load_dataset_dir(*paths.train);
  std::optional<Dataset> validation;
  std::optional<Dataset> test;
  if (paths.validation) validation = load_dataset_dir(*paths.validation);
  if (paths.test) test = load_dataset_dir(*paths.test);
  for (const Dataset* d : {validation ? &*validation : nullptr, test ? &*test : nullptr}) {
    if (d && d->dim() != train.dim()) {
      throw InputError("evaluation dataset has d_in " + std::to_string(d->dim()) +
                       " but training data has " + std::to_string(train.dim()));
    }
  }
  cfg.validate(train.num_classes());

  fs::create_directories(out_dir / "checkpoints");
  json manifest;
  manifest["config"] = config_json(config);
  manifest["seed"] = cfg.seed;
  manifest["mode"] = std::string(to_string(cfg.mode));
  manifest["version"] = std::string(version_string());
  manifest["git"] = std::string(git_stamp());
  manifest["output_dir"] = fs::absolute(out_dir).string();
  manifest["train_checksum"] = hex64(train.checksum());
  manifest["started_at"] = utc_timestamp();
  open_output(out_dir / "manifest.json") << manifest.dump(2) << '\n';

  auto trace = open_output(out_dir / "trace.jsonl");
  TrainingHooks hooks;
  hooks.on_episode = [&](const EpisodeTrace& t) { write_trace_line(trace, t); };
  hooks.on_evaluation = [&](const TrainState& state) {
    save_state_files(out_dir / "checkpoints", "episode_" + std::to_string(state.episode), state,
                     cfg);
  };
  const TrainState state = run_training(
      {&train, validation ? &*validation : nullptr, test ? &*test : nullptr}, cfg, hooks);

  auto metrics = open_output(out_dir / "metrics.csv");
  write_metrics_csv(metrics, state.history);
  save_state_files(out_dir, "final", state, cfg);

  json done;
  done["finished_at"] = utc_timestamp();
  done["episodes_run"] = state.episode;
  if (!state.history.empty()) {
    const MetricsRow& last = state.history.back();
    done["train_J"] = last.train_objective;
    if (last.val_accuracy) done["val_accuracy"] = *last.val_accuracy;
    if (last.test_accuracy) done["test_accuracy"] = *last.test_accuracy;
  }
  open_output(out_dir / "completed.json") << done.dump(2) << '\n';

  out << out_dir.string() << ": " << state.episode << " episodes, mode " << to_string(cfg.mode);
  if (!state.history.empty() && state.history.back().test_accuracy) {
    out << ", test accuracy " << format_double(*state.history.back().test_accuracy);
  }
  out << '\n';
}

int cmd_train(const TrainArgs& args, std::ostream& out) {
  ConfigMap config = load_with_overrides(args.config, args.sets);
  if (args.seed) config["train.seed"] = std::to_string(*args.seed);
  if (args.mode) config["train.mode"] = *args.mode;
  if (args.episodes) config["train.episodes"] = std::to_string(*args.episodes);
  if (args.threads) config["train.threads"] = std::to_string(*args.threads);
  // Parse once up front so bad values fail before anything is written.
  train_config_from(config);

  std::vector<Sweep> sweeps;
  for (const auto& s : args.sweeps) sweeps.push_back(parse_sweep(s));
  if (sweeps.empty()) {
    train_one(config, args.out, out);
    return kExitOk;
  }
  std::vector<std::size_t> index(sweeps.size(), 0);
  while (true) {
    ConfigMap point = config;
    std::string name;
    for (std::size_t i = 0; i < sweeps.size(); ++i) {
      point[sweeps[i].key] = sweeps[i].values[index[i]];
      if (!name.empty()) name += '_';
      name += sweeps[i].key + '=' + sweeps[i].values[index[i]];
    }
    train_one(point, fs::path(args.out) / name, out);
    std::size_t i = 0;
    while (i < sweeps.size() && ++index[i] == sweeps[i].values.size()) index[i++] = 0;
    if (i == sweeps.size()) break;
  }
  return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string dataset;
  std::size_t way = 0;
  std::size_t episodes = 10;
  std::size_t n_s = 5;
  std::size_t n_q = 5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::optional<double> temperature;
};

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const LearnerCheckpoint checkpoint = load_checkpoint(args.checkpoint);
  const Dataset dataset = load_dataset_dir(args.dataset);
  if (checkpoint.params.d_in() != dataset.dim()) {
    throw InputError("checkpoint expects d_in " + std::to_string(checkpoint.params.d_in()) +
                     " but dataset has " + std::to_string(dataset.dim()));
  }
  EvalOptions opts;
  opts.way = args.way;
  opts.episodes = args.episodes;
  opts.n_s = args.n_s;
  opts.n_q = args.n_q;
  opts.threads = args.threads;
  opts.temperature = args.temperature.value_or(checkpoint.temperature);
  const auto learner = make_learner(checkpoint.kind, checkpoint.params);
  const EvalReport report = evaluate_all_way(dataset, *learner, opts, args.seed);
  out << report.to_json().dump(2) << '\n';
  return kExitOk;
}

// --- bench-cme --------------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::string dataset;
  std::string checkpoint;
  std::string out;
  std::vector<std::string> sets;
};

int cmd_bench_cme(const BenchArgs& args, std::ostream& out) {
  const ConfigMap config = load_with_overrides(args.config, args.sets);
  const auto configs = bench_configs_from(config);
  const auto options = bench_options_from(config);
  Dataset dataset = [&] {
    if (!args.dataset.empty()) return load_dataset_dir(args.dataset);
    if (const auto paths = data_paths_from(config); paths.train) return load_dataset_dir(*paths.train);
    const SyntheticSpec spec = synthetic_spec_from(config);
    spec.validate();
    return generate_synthetic(spec);
  }();
  for (const auto& c : configs) {
    EstimatorConfig est;
    est.rho = options.rho;
    est.n_te = c.n_te;
    est.m_steps = c.m_steps;
    est.validate(dataset.num_classes());
  }

  LearnerCheckpoint checkpoint;
  if (!args.checkpoint.empty()) {
    checkpoint = load_checkpoint(args.checkpoint);
    if (checkpoint.params.d_in() != dataset.dim()) {
      throw InputError("checkpoint expects d_in " + std::to_string(checkpoint.params.d_in()) +
                       " but dataset has " + std::to_string(dataset.dim()));
    }
  } else {
    const TrainConfig cfg = train_config_from(config);
    std::vector<std::size_t> widths{dataset.dim()};
    widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
    widths.push_back(cfg.d_emb);
    Rng rng = make_stream(cfg.seed, "init");
    checkpoint = {cfg.learner, cfg.temperature, LearnerParams::random(widths, rng)};
  }
  const auto learner = make_learner(checkpoint.kind, checkpoint.params);
  const auto rows = cme_benchmark(dataset, *learner, configs, options);
  if (args.out.empty()) {
    write_benchmark_csv(out, rows);
  } else {
    auto file = open_output(args.out);
    write_benchmark_csv(file, rows);
    out << "wrote " << rows.size() << " rows to " << args.out << '\n';
  }
  return kExitOk;
}

// --- attention --------------------------------------------------------------

struct AttentionArgs {
  std::string trace;
  std::size_t k = 0;
  std::size_t first = 1;
  std::size_t last = 0;  // 0 means through the end
  std::string out;
};

int cmd_attention(const AttentionArgs& args, std::ostream& out) {
  std::ifstream in(args.trace);
  if (!in) throw InputError("cannot open trace " + args.trace);
  const std::size_t end = args.last == 0 ? static_cast<std::size_t>(-1) : args.last + 1;
  const auto counts = attention_frequencies(in, args.k, args.first, end);
  if (args.out.empty()) {
    write_attention_csv(out, counts);
  } else {
    auto file = open_output(args.out);
    write_attention_csv(file, counts);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Confusion-guided episodic meta-learning", "confusable"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version_string()));

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  generate->add_option("--config", gen.config, "INI file with a [synthetic] section");
  generate->add_option("--out", gen.out, "Output dataset directory")->required();
  generate->add_option("--split", gen.split, "train, validation or test");
  generate->add_option("--set", gen.sets, "Override a config key (key=value)");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Episodic training");
  train->add_option("--config", tr.config, "INI config file")->required();
  train->add_option("--seed", tr.seed, "Overrides train.seed");
  train->add_option("--mode", tr.mode, "confusable, confusable_count, traditional or uniform");
  train->add_option("--episodes", tr.episodes, "Overrides train.episodes");
  train->add_option("--threads", tr.threads, "Worker threads for evaluation");
  train->add_option("--out", tr.out, "Output directory");
  train->add_option("--sweep", tr.sweeps, "name=v1,v2,... (rho, n_d, n_te, n_tc or a dotted key)");
  train->add_option("--set", tr.sets, "Override a config key (key=value)");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Large-way evaluation of a checkpoint");
  eval->add_option("--checkpoint", ev.checkpoint, "Parameter file")->required();
  eval->add_option("--dataset", ev.dataset, "Dataset directory")->required();
  eval->add_option("--way", ev.way, "Classes per episode (0 = all)");
  eval->add_option("--episodes", ev.episodes, "Evaluation episodes");
  eval->add_option("--n-s", ev.n_s, "Support instances per class");
  eval->add_option("--n-q", ev.n_q, "Query instances per class");
  eval->add_option("--seed", ev.seed, "Evaluation seed");
  eval->add_option("--threads", ev.threads, "Worker threads");
  eval->add_option("--temperature", ev.temperature, "Softmax temperature (default: checkpoint)");

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench-cme", "Time confusion-matrix refreshes");
  bench->add_option("--config", bn.config, "INI file with [bench] and [model] sections");
  bench->add_option("--dataset", bn.dataset, "Dataset directory (default: data.train or synthetic)");
  bench->add_option("--checkpoint", bn.checkpoint, "Parameter file (default: random init)");
  bench->add_option("--out", bn.out, "CSV output file (default: stdout)");
  bench->add_option("--set", bn.sets, "Override a config key (key=value)");

  AttentionArgs at;
  auto* attention = app.add_subcommand("attention", "Distractor counts from a trace log");
  attention->add_option("--trace", at.trace, "trace.jsonl from a training run")->required();
  attention->add_option("--k", at.k, "Number of classes")->required();
  attention->add_option("--from", at.first, "First episode (1-based)");
  attention->add_option("--to", at.last, "Last episode, inclusive (0 = end)");
  attention->add_option("--out", at.out, "CSV output file (default: stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen, out);
    if (train->parsed()) return cmd_train(tr, out);
    if (eval->parsed()) return cmd_eval(ev, out);
    if (bench->parsed()) return cmd_bench_cme(bn, out);
    if (attention->parsed()) return cmd_attention(at, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DatasetError& e) {
    err << "dataset error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace confusable::cli
