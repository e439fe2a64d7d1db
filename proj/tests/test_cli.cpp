#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <unistd.h>

#include "json.hpp"
#include "tabrep/cli.hpp"
#include "tabrep/csv.hpp"
#include "tabrep/generative.hpp"
#include "tabrep/io.hpp"
#include "tabrep/table.hpp"
#include "test_util.hpp"

using namespace tabrep;
using tabrep::testing::temp_path;
using tabrep::testing::toy_table;

namespace {

std::string toy_csv(const std::string& name, int64_t rows, uint64_t seed) {
    const std::string path = temp_path("cli", name);
    write_csv(toy_table(rows, seed), path);
    return path;
}

// capture stderr produced by an in-process run
std::pair<int, std::string> run_capturing_stderr(const std::vector<std::string>& args) {
    const std::string errfile = temp_path("cli", "stderr.txt");
    ::fflush(stderr);
    const int saved = ::dup(2);
    FILE* f = ::freopen(errfile.c_str(), "w", stderr);
    REQUIRE(f != nullptr);
    const int code = run_cli(args);
    ::fflush(stderr);
    ::dup2(saved, 2);
    ::close(saved);
    return {code, read_file(errfile)};
}

}  // namespace

TEST_CASE("infer writes a loadable schema") {
    const auto data = toy_csv("infer.csv", 200, 1);
    const auto out = temp_path("cli", "schema.json");
    CHECK(run_cli({"infer", "--data", data, "--out", out}) == 0);
    const TableSchema schema = TableSchema::load(out);
    CHECK(schema.columns.size() == 3);
    CHECK(schema.columns[2].vocabulary == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("train writes a checkpoint with the magic bytes and a monotone log") {
    const auto data = toy_csv("train.csv", 240, 2);
    const auto ckpt = temp_path("cli", "model.ckpt");
    const auto log = temp_path("cli", "train_log.csv");
    CHECK(run_cli({"train", "--data", data, "--out", ckpt, "--log", log, "--iterations", "60",
                   "--batch", "64", "--dt", "16", "--eval-every", "30", "--quantiles", "100",
                   "--seed", "3"}) == 0);
    CHECK(read_file(ckpt).substr(0, 5) == "TREP1");

    const auto rows = parse_csv(read_file(log));
    REQUIRE(rows.size() >= 2);
    CHECK(rows[0] == std::vector<std::string>{"iteration", "loss", "val_score"});
    int64_t prev = 0;
    for (size_t i = 1; i < rows.size(); ++i) {
        const int64_t it = std::stoll(rows[i][0]);
        CHECK(it > prev);
        prev = it;
    }
}

TEST_CASE("both regimes are accepted") {
    const auto data = toy_csv("regimes.csv", 240, 4);
    for (const char* regime : {"ddpm", "flow"}) {
        const auto ckpt = temp_path("cli", std::string("model_") + regime + ".ckpt");
        CHECK(run_cli({"train", "--data", data, "--out", ckpt, "--regime", regime,
                       "--iterations", "40", "--batch", "64", "--dt", "16", "--eval-every", "20",
                       "--quantiles", "100"}) == 0);
        CHECK(load_checkpoint(ckpt).regime == regime_from_string(regime));
    }
    const auto bad = temp_path("cli", "bad.ckpt");
    CHECK(run_cli({"train", "--data", data, "--out", bad, "--regime", "vae"}) != 0);
}

TEST_CASE("sample writes the requested rows under the input header") {
    const auto data = toy_csv("sample.csv", 240, 5);
    const auto ckpt = temp_path("cli", "sampler.ckpt");
    REQUIRE(run_cli({"train", "--data", data, "--out", ckpt, "--regime", "flow", "--iterations",
                     "40", "--batch", "64", "--dt", "16", "--eval-every", "20", "--quantiles",
                     "100"}) == 0);

    const auto out_a = temp_path("cli", "syn_a.csv");
    const auto out_b = temp_path("cli", "syn_b.csv");
    CHECK(run_cli({"sample", "--checkpoint", ckpt, "--n", "25", "--seed", "9", "--out", out_a}) ==
          0);
    CHECK(run_cli({"sample", "--checkpoint", ckpt, "--n", "25", "--seed", "9", "--out", out_b}) ==
          0);
    CHECK(read_file(out_a) == read_file(out_b));  // deterministic under the seed

    const auto rows = parse_csv(read_file(out_a));
    REQUIRE(rows.size() == 26);
    CHECK(rows[0] == std::vector<std::string>{"x1", "x2", "c"});
}

TEST_CASE("eval emits JSON and CSV reports") {
    const auto real = toy_csv("eval_real.csv", 400, 6);
    const auto syn = toy_csv("eval_syn.csv", 300, 7);
    const auto out = temp_path("cli", "report");
    CHECK(run_cli({"eval", "--real", real, "--syn", syn, "--out", out, "--seeds", "2"}) == 0);

    const auto parsed = nlohmann::json::parse(read_file(out + ".json"));
    CHECK(parsed.contains("cde"));
    CHECK(parsed.contains("mia_recall"));
    const auto csv_rows = parse_csv(read_file(out + ".csv"));
    CHECK(csv_rows.size() == 3);  // header + one row per seed
}

TEST_CASE("eval refuses a schema mismatch") {
    const auto real = toy_csv("mismatch_real.csv", 400, 8);
    const std::string other = temp_path("cli", "mismatch_syn.csv");
    atomic_write_file(other, "p,q\n1,2\n3,4\n");
    const auto [code, err] =
        run_capturing_stderr({"eval", "--real", real, "--syn", other, "--out",
                              temp_path("cli", "mismatch_report")});
    CHECK(code != 0);
    CHECK(nlohmann::json::parse(err).contains("error"));
}

TEST_CASE("geometry writes the report and rejects large K") {
    const auto out = temp_path("cli", "geo.csv");
    CHECK(run_cli({"geometry", "--k", "3", "--sigma", "0.2", "--out", out}) == 0);
    const auto rows = parse_csv(read_file(out));
    REQUIRE(rows.size() == 5);  // header + 4 singular points
    CHECK(rows[0][3] == "closed_form");
    CHECK(rows[0][5] == "abs_err");

    CHECK(run_cli({"geometry", "--k", "13", "--out", temp_path("cli", "geo13.csv")}) != 0);
}

TEST_CASE("errors are one-line JSON on stderr with a non-zero exit") {
    const auto [code, err] = run_capturing_stderr({"sample", "--checkpoint",
                                                   temp_path("cli", "missing.ckpt"), "--n", "5",
                                                   "--out", temp_path("cli", "never.csv")});
    CHECK(code != 0);
    REQUIRE(!err.empty());
    CHECK(std::count(err.begin(), err.end(), '\n') == 1);
    const auto parsed = nlohmann::json::parse(err);
    CHECK(parsed.contains("error"));

    CHECK(run_cli({"frobnicate"}) != 0);
    CHECK(run_cli({}) != 0);
}

TEST_CASE("config file merges under explicit flags") {
    const auto data = toy_csv("config.csv", 240, 10);
    const auto cfg = temp_path("cli", "train_config.json");
    atomic_write_file(cfg, R"({"iterations": 40, "dt": 16, "batch": 64, "eval_every": 20,
                               "quantiles": 100, "regime": "flow"})");
    const auto ckpt = temp_path("cli", "config.ckpt");
    // --iterations on the command line beats the config value
    CHECK(run_cli({"train", "--data", data, "--out", ckpt, "--config", cfg, "--iterations",
                   "20"}) == 0);
    const ModelCheckpoint loaded = load_checkpoint(ckpt);
    CHECK(loaded.meta.iterations == 20);
    CHECK(loaded.regime == Regime::Flow);

    const auto bad_cfg = temp_path("cli", "bad_config.json");
    atomic_write_file(bad_cfg, R"({"iterations": 40, "warp_factor": 9})");
    CHECK(run_cli({"train", "--data", data, "--out", ckpt, "--config", bad_cfg}) != 0);
}

TEST_CASE("outputs are idempotent across reruns") {
    const auto out = temp_path("cli", "geo_idem.csv");
    CHECK(run_cli({"geometry", "--k", "4", "--sigma", "0.25", "--out", out}) == 0);
    const std::string first = read_file(out);
    CHECK(run_cli({"geometry", "--k", "4", "--sigma", "0.25", "--out", out}) == 0);
    CHECK(read_file(out) == first);
}

TEST_CASE("help succeeds") {
    CHECK(run_cli({"--help"}) == 0);
    CHECK(run_cli({"train", "--help"}) == 0);
}
