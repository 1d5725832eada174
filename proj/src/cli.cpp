#include "kgforge/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include "kgforge/checkpoint.hpp"
#include "kgforge/config.hpp"
#include "kgforge/eval.hpp"
#include "kgforge/kgdata.hpp"
#include "kgforge/train.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kgforge::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config keys exposed as flags, with their help text.
const std::vector<std::pair<std::string, std::string>> kValueKeys = {
    {"model", "distmult|complex|simple (default complex)"},
    {"d", "embedding dimension (200)"},
    {"batch", "positives per batch (1000)"},
    {"n_neg", "negatives per positive, sampled loss only (100)"},
    {"alpha", "pair-loss weight, joint model only (0.5)"},
    {"p_bias", "probability of a type-consistent negative (0.3)"},
    {"lr", "Adam learning rate (0.001)"},
    {"beta1", "Adam beta1 (0.9)"},
    {"beta2", "Adam beta2 (0.999)"},
    {"eps", "Adam epsilon (1e-8)"},
    {"max_epochs", "epoch limit (100)"},
    {"eval_every", "validate every N epochs (5)"},
    {"patience", "evaluations without improvement before stopping (4)"},
    {"loss", "sampled|full (sampled)"},
    {"seed", "base random seed (42)"},
    {"side_policy", "per-negative|per-positive (per-negative)"},
    {"l2", "L2 weight on the batch's rows (0)"},
    {"threads", "worker threads (1)"},
    {"full_softmax_budget", "max batch * entities scores under --loss full"},
    {"tie", "validation tie policy opt|pess|mean (mean)"}};
const std::vector<std::pair<std::string, std::string>> kBoolKeys = {
    {"joint", "add the pair module (joint model)"},
    {"exclude_gold", "redraw a negative that repeats the gold entity"}};

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> bools;
  std::map<std::string, CLI::Option*> options;
};

void add_config_flags(CLI::App* app, ConfigFlags& flags) {
  app->add_option("--config", flags.config_file, "key=value config file (flags override it)");
  for (const auto& [key, help] : kValueKeys) {
    flags.options[key] = app->add_option("--" + dashed(key), flags.values[key], help);
  }
  for (const auto& [key, help] : kBoolKeys) {
    flags.options[key] = app->add_flag("--" + dashed(key), flags.bools[key], help);
  }
}

/// Config file first, then flags; rejects n_neg under full softmax.
TrainConfig merge_config(const ConfigFlags& flags) {
  std::set<std::string> explicit_keys;
  TrainConfig config;
  try {
    if (!flags.config_file.empty()) config = load_config(flags.config_file, &explicit_keys);
    for (const auto& [key, help] : kValueKeys) {
      if (flags.options.at(key)->count() > 0) {
        apply_config_value(config, key, flags.values.at(key));
        explicit_keys.insert(key);
      }
    }
    for (const auto& [key, help] : kBoolKeys) {
      if (flags.options.at(key)->count() > 0) {
        apply_config_value(config, key, flags.bools.at(key) ? "true" : "false");
        explicit_keys.insert(key);
      }
    }
    if (config.loss == LossMode::full_softmax && explicit_keys.count("n_neg") != 0) {
      throw UsageError("--n-neg cannot be combined with --loss full");
    }
    config.validate();
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return config;
}

struct DataFlags {
  std::string data;
  bool lowercase = false;
};

void add_data_flags(CLI::App* app, DataFlags& flags) {
  app->add_option("--data", flags.data, "dataset directory or name under $KGFORGE_DATA_DIR");
  app->add_flag("--lowercase", flags.lowercase, "lowercase entity and relation names");
}

Dataset load_data(const DataFlags& flags) {
  auto dir = resolve_data_dir(flags.data);
  if (!dir) {
    throw UsageError("dataset directory not found: '" + flags.data +
                     "' (set --data or KGFORGE_DATA_DIR)");
  }
  log_info("loading dataset from " + dir->string());
  return load_dataset(*dir, LoadOptions{flags.lowercase});
}

TiePolicy parse_tie(const std::string& s) {
  if (s == "opt") return TiePolicy::optimistic;
  if (s == "pess") return TiePolicy::pessimistic;
  if (s == "mean") return TiePolicy::mean;
  throw UsageError("unknown tie policy '" + s + "'");
}

RankMode parse_mode(const std::string& s) {
  if (s == "both") return RankMode::both_sides;
  if (s == "tail-only") return RankMode::tail_only;
  throw UsageError("unknown rank mode '" + s + "'");
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

Checkpoint load_matching(const std::string& path, const Dataset& data) {
  auto ck = load_checkpoint(path);
  if (!(ck.vocab == data.vocab)) {
    throw DataError("checkpoint vocabulary does not match the dataset: " + path);
  }
  return ck;
}

const std::vector<Triple>& pick_split(const Dataset& data, const std::string& split) {
  if (split == "test") return data.test.triples;
  if (split == "valid") return data.valid.triples;
  if (split == "train") return data.train.triples;
  throw UsageError("unknown split '" + split + "'");
}

void set_threads(int threads) {
#ifdef _OPENMP
  omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

// ---------------------------------------------------------------- commands

int cmd_stats(const DataFlags& data_flags, const std::string& out_path, std::ostream& out) {
  const auto data = load_data(data_flags);
  const auto stats = dataset_stats(data);
  out << format_stats_text(stats);
  if (!out_path.empty()) write_file(out_path, format_stats_kv(stats));
  return kExitOk;
}

struct TrainFlags {
  std::string out_dir = "run";
  std::string mode = "both";
};

int cmd_train(const DataFlags& data_flags, const ConfigFlags& config_flags,
              const TrainFlags& flags, std::ostream& out) {
  const auto config = merge_config(config_flags);
  const auto mode = parse_mode(flags.mode);
  const auto data = load_data(data_flags);
  set_threads(config.threads);

  const fs::path dir(flags.out_dir);
  fs::create_directories(dir);
  const auto config_text = format_config(config);
  write_file(dir / "config.txt", config_text);
  log_info("effective config:\n" + config_text);

  const auto log_path = dir / "train_log.tsv";
  const bool fresh = !fs::exists(log_path) || fs::file_size(log_path) == 0;
  std::ofstream log(log_path, std::ios::app);
  if (fresh) log << train_log_header();

  auto result = fit(data, config, {}, [&](const EpochRecord& record) {
    log << train_log_line(record);
    log.flush();
    std::ostringstream msg;
    msg << "epoch " << record.stats.epoch << " L_total " << record.stats.loss_total;
    if (record.val_hits10) msg << " val_hits@10 " << *record.val_hits10;
    log_info(msg.str());
  });
  save_checkpoint(dir / "best.kgfg", result.best, data.vocab);
  out << "best epoch: " << result.best_epoch << "\ncheckpoint: " << (dir / "best.kgfg").string()
      << '\n';
  if (!data.valid.empty()) {
    const auto report = evaluate(result.best, data.valid.triples, data.filter, mode, config.tie);
    out << "validation:\n" << format_report_text(report);
  }
  return kExitOk;
}

struct EvalFlags {
  std::string ckpt;
  std::string split = "test";
  std::string mode = "both";
  std::string tie = "mean";
  std::string out_dir;
  std::string compare_with;
  int threads = 1;
};

int cmd_eval(const DataFlags& data_flags, const EvalFlags& flags, std::ostream& out) {
  const auto mode = parse_mode(flags.mode);
  const auto tie = parse_tie(flags.tie);
  const auto data = load_data(data_flags);
  set_threads(flags.threads);
  const auto& split = pick_split(data, flags.split);
  const auto ck = load_matching(flags.ckpt, data);
  const auto report = evaluate(ck.table, split, data.filter, mode, tie);
  out << format_report_text(report);
  if (!flags.out_dir.empty()) {
    const fs::path dir(flags.out_dir);
    fs::create_directories(dir);
    write_file(dir / "report.txt", format_report_text(report));
    write_file(dir / "metrics.tsv", format_metrics_tsv(report));
    write_file(dir / "per_relation.tsv", format_per_relation_tsv(report, data.vocab));
  }
  if (!flags.compare_with.empty()) {
    const auto other = load_matching(flags.compare_with, data);
    const auto other_report = evaluate(other.table, split, data.filter, mode, tie);
    const auto gains = compare_relations(report, other_report);
    const auto text = format_gain_tsv(gains, data.vocab);
    if (!flags.out_dir.empty()) write_file(fs::path(flags.out_dir) / "gains.tsv", text);
    else out << text;
  }
  return kExitOk;
}

struct CompareFlags {
  std::string a;
  std::string b;
  std::string split = "test";
  std::string mode = "both";
  std::string tie = "mean";
  std::string out_dir;
  int threads = 1;
};

int cmd_compare(const DataFlags& data_flags, const CompareFlags& flags, std::ostream& out) {
  const auto mode = parse_mode(flags.mode);
  const auto tie = parse_tie(flags.tie);
  const auto data = load_data(data_flags);
  set_threads(flags.threads);
  const auto a = load_matching(flags.a, data);
  const auto b = load_matching(flags.b, data);
  if (!(a.vocab == b.vocab)) throw DataError("checkpoints use different vocabularies");
  const auto& split = pick_split(data, flags.split);
  const auto ra = evaluate(a.table, split, data.filter, mode, tie);
  const auto rb = evaluate(b.table, split, data.filter, mode, tie);
  const auto gains = compare_relations(ra, rb);
  const auto improved = rank1_gained(split, ra, rb);
  const auto gain_text = format_gain_tsv(gains, data.vocab);
  const auto improved_text = format_improvements_tsv(improved, data.vocab);
  if (!flags.out_dir.empty()) {
    const fs::path dir(flags.out_dir);
    fs::create_directories(dir);
    write_file(dir / "gains.tsv", gain_text);
    write_file(dir / "rank1_gained.tsv", improved_text);
  }
  out << gain_text;
  return kExitOk;
}

struct SweepFlags {
  std::string sweep = "batch";
  std::vector<std::size_t> points;
  int parallel = 1;
  std::string out_path;
  std::string tie = "mean";
};

struct Variant {
  const char* name;
  bool joint;
  bool biased;
};

constexpr Variant kVariants[] = {
    {"Baseline", false, false}, {"BiasedNeg", false, true}, {"Joint", true, false}, {"JoBi", true, true}};

int cmd_sweep(const DataFlags& data_flags, const ConfigFlags& config_flags,
              const SweepFlags& flags, std::ostream& out) {
  auto base = merge_config(config_flags);
  const bool by_batch = flags.sweep == "batch";
  if (!by_batch && flags.sweep != "neg") throw UsageError("--sweep must be batch or neg");
  if (flags.parallel < 1) throw UsageError("--parallel must be >= 1");
  auto points = flags.points;
  if (points.empty()) {
    points = by_batch ? std::vector<std::size_t>{25, 50, 100, 200, 500, 1000}
                      : std::vector<std::size_t>{5, 10, 25, 50, 100, 200};
  }
  const auto data = load_data(data_flags);
  log_info("sweep base config:\n" + format_config(base));

  struct Job {
    std::size_t point;
    std::size_t variant;
    TrainConfig config;
  };
  std::vector<Job> jobs;
  for (auto point : points) {
    for (std::size_t v = 0; v < std::size(kVariants); ++v) {
      TrainConfig c = base;
      c.loss = LossMode::sampled_softmax;
      c.batch_size = by_batch ? point : 200;
      c.n_neg = by_batch ? 25 : static_cast<int>(point);
      c.model.joint = kVariants[v].joint;
      c.alpha = kVariants[v].joint ? base.alpha : 0.0;
      c.p_bias = kVariants[v].biased ? base.p_bias : 0.0;
      c.validate();
      jobs.push_back({point, v, c});
    }
  }

  std::vector<double> hits(jobs.size(), 0.0);
  auto run_job = [&](std::size_t j) {
    const auto result = fit(data, jobs[j].config);
    hits[j] = evaluate(result.best, data.test.triples, data.filter, RankMode::both_sides,
                       jobs[j].config.tie)
                  .overall.hits10;
    log_info(std::string("sweep ") + kVariants[jobs[j].variant].name + " @ " +
             std::to_string(jobs[j].point) + ": test hits@10 " + std::to_string(hits[j]));
  };
  if (flags.parallel == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
  } else {
    std::size_t next = 0;
    std::mutex m;
    std::vector<std::future<void>> workers;
    for (int w = 0; w < flags.parallel; ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        while (true) {
          std::size_t j;
          {
            std::lock_guard lock(m);
            if (next >= jobs.size()) return;
            j = next++;
          }
          run_job(j);
        }
      }));
    }
    for (auto& f : workers) f.get();
  }

  std::ostringstream tsv;
  tsv << (by_batch ? "batch" : "n_neg");
  for (const auto& v : kVariants) tsv << '\t' << v.name;
  tsv << '\n';
  tsv.precision(6);
  for (std::size_t p = 0; p < points.size(); ++p) {
    tsv << points[p];
    for (std::size_t v = 0; v < std::size(kVariants); ++v) {
      tsv << '\t' << hits[p * std::size(kVariants) + v];
    }
    tsv << '\n';
  }
  if (!flags.out_path.empty()) write_file(flags.out_path, tsv.str());
  out << tsv.str();
  return kExitOk;
}

}  // namespace

std::optional<fs::path> resolve_data_dir(const std::string& name) {
  if (!name.empty() && fs::is_directory(name)) return fs::path(name);
  const char* root = std::getenv("KGFORGE_DATA_DIR");
  if (root == nullptr || *root == '\0') return std::nullopt;
  fs::path candidate = name.empty() ? fs::path(root) : fs::path(root) / name;
  if (fs::is_directory(candidate)) return candidate;
  return std::nullopt;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"kgforge: bilinear knowledge-graph embeddings with joint pair training"};
  app.require_subcommand(1, 1);
  app.fallthrough();  // global flags may follow the subcommand
  bool quiet = false;
  bool verbose = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress logging");
  app.add_flag("-v,--verbose", verbose, "debug logging");

  DataFlags data_flags;
  ConfigFlags train_config;
  ConfigFlags sweep_config;

  auto* stats = app.add_subcommand("stats", "dataset statistics");
  add_data_flags(stats, data_flags);
  std::string stats_out;
  stats->add_option("--out", stats_out, "write key=value statistics to this file");

  auto* train = app.add_subcommand("train", "train a model with early stopping");
  add_data_flags(train, data_flags);
  add_config_flags(train, train_config);
  TrainFlags train_flags;
  train->add_option("--out", train_flags.out_dir, "output directory");
  train->add_option("--mode", train_flags.mode, "final validation report: both|tail-only");

  auto* eval = app.add_subcommand("eval", "filtered ranking evaluation of a checkpoint");
  add_data_flags(eval, data_flags);
  EvalFlags eval_flags;
  eval->add_option("--ckpt", eval_flags.ckpt, "checkpoint file")->required();
  eval->add_option("--split", eval_flags.split, "test|valid|train");
  eval->add_option("--mode", eval_flags.mode, "both|tail-only");
  eval->add_option("--tie", eval_flags.tie, "opt|pess|mean");
  eval->add_option("--out", eval_flags.out_dir, "write report.txt, metrics.tsv, per_relation.tsv");
  eval->add_option("--compare-with", eval_flags.compare_with,
                   "second checkpoint: emit per-relation hits@1 gains over --ckpt");
  eval->add_option("--threads", eval_flags.threads, "worker threads");

  auto* sweep = app.add_subcommand("sweep", "batch-size or negative-ratio sweep, four variants");
  add_data_flags(sweep, data_flags);
  add_config_flags(sweep, sweep_config);
  SweepFlags sweep_flags;
  sweep->add_option("--sweep", sweep_flags.sweep, "batch|neg");
  sweep->add_option("--points", sweep_flags.points, "override the grid points")->delimiter(',');
  sweep->add_option("--parallel", sweep_flags.parallel, "concurrent sweep points");
  sweep->add_option("--out", sweep_flags.out_path, "TSV output file");

  auto* compare = app.add_subcommand("compare", "per-relation hits@1 gains of B over A");
  add_data_flags(compare, data_flags);
  CompareFlags compare_flags;
  compare->add_option("--a", compare_flags.a, "checkpoint A")->required();
  compare->add_option("--b", compare_flags.b, "checkpoint B")->required();
  compare->add_option("--split", compare_flags.split, "test|valid|train");
  compare->add_option("--mode", compare_flags.mode, "both|tail-only");
  compare->add_option("--tie", compare_flags.tie, "opt|pess|mean");
  compare->add_option("--out", compare_flags.out_dir, "write gains.tsv and rank1_gained.tsv");
  compare->add_option("--threads", compare_flags.threads, "worker threads");

  std::vector<const char*> argv;
  argv.push_back("kgforge");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const auto previous_level = log_level();
  if (quiet) set_log_level(LogLevel::quiet);
  if (verbose) set_log_level(LogLevel::debug);
  struct Restore {
    LogLevel level;
    ~Restore() { set_log_level(level); }
  } restore{previous_level};

  try {
    if (*stats) return cmd_stats(data_flags, stats_out, out);
    if (*train) return cmd_train(data_flags, train_config, train_flags, out);
    if (*eval) return cmd_eval(data_flags, eval_flags, out);
    if (*sweep) return cmd_sweep(data_flags, sweep_config, sweep_flags, out);
    if (*compare) return cmd_compare(data_flags, compare_flags, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ContractViolation& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace kgforge::cli
