#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "kgforge/checkpoint.hpp"
#include "kgforge/cli.hpp"
#include "kgforge/config.hpp"
#include "support.hpp"

using namespace kgforge;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.push_back("-q");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Small ring-shaped KG with two relations.
void write_toy(const fs::path& dir, int n = 12) {
  std::vector<std::string> train, valid, test;
  for (int i = 0; i < n; ++i) {
    const auto a = "e" + std::to_string(i), b = "e" + std::to_string((i + 1) % n),
               c = "e" + std::to_string((i + 2) % n);
    train.push_back(a + "\tnext\t" + b);
    if (i % 3 == 0) valid.push_back(a + "\tskip\t" + c);
    else if (i % 3 == 1) test.push_back(a + "\tskip\t" + c);
    else train.push_back(a + "\tskip\t" + c);
  }
  kgtest::write_dataset(dir, train, valid, test);
}

const std::vector<std::string> kTiny = {"--d", "4", "--batch", "8", "--n-neg", "3",
                                        "--max-epochs", "2", "--eval-every", "1"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  kgtest::TempDir tmp("cli_usage");
  write_toy(tmp.path / "kg");
  const auto data = (tmp.path / "kg").string();
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"train", "--data", data, "--no-such-flag"}).code == 2);
  CHECK(run({"train", "--data", data, "--d", "zero"}).code == 2);
  CHECK(run({"train", "--data", data, "--model", "transe"}).code == 2);
  CHECK(run({"train", "--data", data, "--alpha", "-1"}).code == 2);

  const auto missing = run({"train", "--data", (tmp.path / "absent").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("absent") != std::string::npos);

  const auto combo = run({"train", "--data", data, "--loss", "full", "--n-neg", "5"});
  CHECK(combo.code == 2);
  CHECK(combo.err.find("--n-neg") != std::string::npos);
}

TEST_CASE("help exits with 0") {
  const auto r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("train") != std::string::npos);
}

TEST_CASE("stats") {
  kgtest::TempDir tmp("cli_stats");
  write_toy(tmp.path / "kg");
  const auto r = run({"stats", "--data", (tmp.path / "kg").string(), "--out",
                      (tmp.path / "stats.txt").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("entities") != std::string::npos);
  const auto kv = read(tmp.path / "stats.txt");
  CHECK(kv.find("entities=12\n") != std::string::npos);
  CHECK(kv.find("relations=2\n") != std::string::npos);
}

TEST_CASE("dataset root from KGFORGE_DATA_DIR") {
  kgtest::TempDir tmp("cli_env");
  write_toy(tmp.path / "toykg");
  ::setenv("KGFORGE_DATA_DIR", tmp.path.c_str(), 1);
  CHECK(cli::resolve_data_dir("toykg") == tmp.path / "toykg");
  CHECK_FALSE(cli::resolve_data_dir("missing").has_value());
  CHECK(run({"stats", "--data", "toykg"}).code == 0);
  ::unsetenv("KGFORGE_DATA_DIR");
  CHECK(run({"stats", "--data", "toykg"}).code == 2);
}

TEST_CASE("train with zero epochs writes the initial checkpoint") {
  kgtest::TempDir tmp("cli_train0");
  write_toy(tmp.path / "kg");
  const auto out = tmp.path / "run";
  const auto r = run({"train", "--data", (tmp.path / "kg").string(), "--max-epochs", "0",
                      "--model", "distmult", "--d", "3", "--seed", "5", "--out", out.string()});
  REQUIRE(r.code == 0);
  const auto ck = load_checkpoint(out / "best.kgfg");
  CHECK(ck.table == init_table({ModelType::distmult, false}, 12, 2, 3, 5));
  CHECK(read(out / "train_log.tsv") == "epoch\tL_tri\tL_bi\tL_total\tseconds\tval_hits@10\n");
}

TEST_CASE("train merges config file and flags") {
  kgtest::TempDir tmp("cli_train");
  write_toy(tmp.path / "kg");
  kgtest::write_lines(tmp.path / "cfg.txt", {"model=simple", "joint=true", "alpha=0.25",
                                             "d=5", "seed=3"});
  const auto out = tmp.path / "run";
  const auto r = run(cat({"train", "--data", (tmp.path / "kg").string(), "--config",
                          (tmp.path / "cfg.txt").string(), "--out", out.string(), "--d", "4"},
                         {"--batch", "8", "--n-neg", "3", "--max-epochs", "2"}));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("validation") != std::string::npos);
  const auto cfg = parse_config(read(out / "config.txt"));
  CHECK(cfg.model.type == ModelType::simple);
  CHECK(cfg.model.joint);
  CHECK(cfg.alpha == 0.25);
  CHECK(cfg.dim == 4);  // flag beats file
  CHECK(cfg.seed == 3);
  const auto ck = load_checkpoint(out / "best.kgfg");
  CHECK(ck.table.kind() == ModelKind{ModelType::simple, true});
  CHECK(ck.table.dim() == 4);

  // The log is append-only: a second run adds lines under one header.
  REQUIRE(run(cat({"train", "--data", (tmp.path / "kg").string(), "--out", out.string()},
                  kTiny)).code == 0);
  const auto log = read(out / "train_log.tsv");
  std::size_t headers = 0;
  for (std::size_t pos = 0; (pos = log.find("epoch\t", pos)) != std::string::npos; ++pos) {
    ++headers;
  }
  CHECK(headers == 1);
  CHECK(std::count(log.begin(), log.end(), '\n') == 5);
}

TEST_CASE("eval and compare") {
  kgtest::TempDir tmp("cli_eval");
  write_toy(tmp.path / "kg");
  const auto data = (tmp.path / "kg").string();
  const auto run_a = tmp.path / "a";
  const auto run_b = tmp.path / "b";
  REQUIRE(run(cat({"train", "--data", data, "--out", run_a.string()}, kTiny)).code == 0);
  REQUIRE(run(cat({"train", "--data", data, "--out", run_b.string(), "--joint", "--seed", "9"},
                  kTiny)).code == 0);
  const auto ck_a = (run_a / "best.kgfg").string();
  const auto ck_b = (run_b / "best.kgfg").string();

  SUBCASE("eval writes the report files") {
    const auto dir = tmp.path / "eval";
    const auto r = run({"eval", "--data", data, "--ckpt", ck_a, "--out", dir.string(), "--tie",
                        "pess", "--mode", "tail-only"});
    REQUIRE(r.code == 0);
    CHECK(read(dir / "metrics.tsv").rfind("metric\tvalue\n", 0) == 0);
    CHECK(fs::exists(dir / "report.txt"));
    CHECK(read(dir / "per_relation.tsv").find("skip\t") != std::string::npos);
    CHECK(run({"eval", "--data", data, "--ckpt", ck_a, "--mode", "sideways"}).code == 2);
  }
  SUBCASE("comparing a checkpoint with itself gains nothing") {
    const auto dir = tmp.path / "cmp";
    REQUIRE(run({"compare", "--data", data, "--a", ck_a, "--b", ck_a, "--out", dir.string()})
                .code == 0);
    std::istringstream gains(read(dir / "gains.tsv"));
    std::string line;
    std::getline(gains, line);
    int rows = 0;
    while (std::getline(gains, line)) {
      ++rows;
      CHECK(line.substr(line.rfind('\t') + 1) == "0");
    }
    CHECK(rows == 1);  // only "skip" appears in test
    const auto gained = read(dir / "rank1_gained.tsv");
    CHECK(std::count(gained.begin(), gained.end(), '\n') == 1);
  }
  SUBCASE("compare of two runs") {
    const auto r = run({"compare", "--data", data, "--a", ck_a, "--b", ck_b});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("relation\tcount", 0) == 0);
  }
  SUBCASE("eval --compare-with emits the gain table") {
    const auto r = run({"eval", "--data", data, "--ckpt", ck_a, "--compare-with", ck_b});
    CHECK(r.code == 0);
    CHECK(r.out.find("gain_head") != std::string::npos);
  }
  SUBCASE("vocabulary mismatch is a runtime error") {
    write_toy(tmp.path / "other", 13);
    const auto other = tmp.path / "orun";
    REQUIRE(run(cat({"train", "--data", (tmp.path / "other").string(), "--out", other.string()},
                    kTiny)).code == 0);
    const auto r = run({"compare", "--data", data, "--a", ck_a, "--b",
                        (other / "best.kgfg").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("vocabulary") != std::string::npos);
  }
  SUBCASE("corrupt checkpoint is a runtime error") {
    kgtest::write_lines(tmp.path / "junk.kgfg", {"not a checkpoint"});
    CHECK(run({"eval", "--data", data, "--ckpt", (tmp.path / "junk.kgfg").string()}).code == 1);
  }
}

TEST_CASE("sweep grid") {
  kgtest::TempDir tmp("cli_sweep");
  write_toy(tmp.path / "kg");
  const auto tsv = tmp.path / "sweep.tsv";
  const auto r = run({"sweep", "--data", (tmp.path / "kg").string(), "--sweep", "batch", "--d",
                      "3", "--max-epochs", "1", "--out", tsv.string(), "--parallel", "2"});
  REQUIRE(r.code == 0);
  std::istringstream in(read(tsv));
  std::string line;
  std::getline(in, line);
  CHECK(line == "batch\tBaseline\tBiasedNeg\tJoint\tJoBi");
  std::vector<std::string> points;
  while (std::getline(in, line)) {
    points.push_back(line.substr(0, line.find('\t')));
    CHECK(std::count(line.begin(), line.end(), '\t') == 4);
  }
  CHECK(points == std::vector<std::string>{"25", "50", "100", "200", "500", "1000"});

  const auto neg = run({"sweep", "--data", (tmp.path / "kg").string(), "--sweep", "neg", "--d",
                        "3", "--max-epochs", "1", "--points", "5,10"});
  REQUIRE(neg.code == 0);
  CHECK(neg.out.rfind("n_neg\tBaseline", 0) == 0);
  CHECK(std::count(neg.out.begin(), neg.out.end(), '\n') == 3);
  CHECK(run({"sweep", "--data", (tmp.path / "kg").string(), "--sweep", "lr"}).code == 2);
}
