#include "tabrep/cli.hpp"

#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tabrep/generative.hpp"
#include "tabrep/geometry.hpp"
#include "tabrep/io.hpp"
#include "tabrep/metrics.hpp"
#include "tabrep/table.hpp"

namespace tabrep {

namespace {

using ordered_json = nlohmann::ordered_json;

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --config JSON is merged *under* explicit flags: its entries are injected
// before the command-line arguments and every option takes the last
// occurrence, so anything typed on the command line wins.
std::vector<std::string> inject_config(const std::vector<std::string>& args,
                                       const std::set<std::string>& allowed_keys) {
    std::string config_path;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    const ordered_json config = ordered_json::parse(read_file(config_path));
    if (!config.is_object()) throw CliError("config: top level must be a JSON object");

    std::vector<std::string> out;
    for (const auto& [key, value] : config.items()) {
        if (!allowed_keys.count(key)) throw CliError("config: unknown key '" + key + "'");
        std::string flag = "--" + key;
        for (auto& c : flag)
            if (c == '_') c = '-';
        if (value.is_boolean()) {
            if (value.get<bool>()) out.push_back(flag);
            continue;
        }
        out.push_back(flag);
        out.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
    out.insert(out.end(), args.begin(), args.end());
    return out;
}

struct HelpShown {};

// CLI11 consumes a reversed vector; help requests print and exit cleanly
void parse_args(CLI::App& app, std::vector<std::string> args) {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        std::printf("%s", app.help().c_str());
        throw HelpShown{};
    }
}

SplitRatio parse_ratio(const std::string& text) {
    SplitRatio r;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &r.train, &r.validation, &r.test) != 3)
        throw CliError("ratio: expected three comma-separated numbers, got '" + text + "'");
    return r;
}

TableSchema schema_for(const std::string& schema_path, const std::string& data_path,
                       int threshold) {
    if (!schema_path.empty()) return TableSchema::load(schema_path);
    return infer_schema(data_path, threshold);
}

int cmd_infer(std::vector<std::string> args) {
    args = inject_config(args, {"data", "out", "threshold"});
    CLI::App app{"infer a schema from a CSV file"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string data, out, config;
    int threshold = 20;
    app.add_option("--data", data, "input CSV")->required();
    app.add_option("--out", out, "output schema JSON")->required();
    app.add_option("--threshold", threshold, "max distinct values for a categorical column");
    app.add_option("--config", config, "JSON config merged under explicit flags");
    parse_args(app, args);

    const TableSchema schema = infer_schema(data, threshold);
    schema.save(out);
    std::printf("schema with %zu columns written to %s\n", schema.columns.size(), out.c_str());
    return 0;
}

struct TrainCli {
    std::string data, schema_path, out, log_path, test_data, config;
    std::string regime = "ddpm";
    std::string codec = "catconverter";
    std::string ratio = "0.8,0.1,0.1";
    int64_t iterations = 5000;
    int batch = 256;
    double lr = 1e-4;
    double wd = 5e-4;
    uint64_t seed = 0;
    int64_t eval_every = 1000;
    int d_t = 64;
    int n_quantiles = 1000;
    int schedule_steps = 1000;
    int flow_steps = 50;
    int threshold = 20;
    bool paper_scale = false;
    bool onehot_softmax = false;
    double r_min = 0.0;
};

int cmd_train(std::vector<std::string> args) {
    args = inject_config(
        args, {"data", "schema", "out", "log", "test_data", "regime", "codec", "ratio",
               "iterations", "batch", "lr", "wd", "seed", "eval_every", "dt", "quantiles",
               "schedule_steps", "flow_steps", "threshold", "paper_scale", "onehot_softmax",
               "r_min"});
    CLI::App app{"train a generative model"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    TrainCli c;
    app.add_option("--data", c.data, "training CSV")->required();
    app.add_option("--schema", c.schema_path, "schema JSON (inferred when omitted)");
    app.add_option("--out", c.out, "checkpoint path")->required();
    app.add_option("--log", c.log_path, "training log CSV");
    app.add_option("--test-data", c.test_data, "pre-split test CSV (excluded from training)");
    app.add_option("--regime", c.regime, "ddpm | flow");
    app.add_option("--codec", c.codec, "catconverter | onehot | analogbits | dictionary");
    app.add_option("--ratio", c.ratio, "train,val,test split ratio");
    auto* opt_iterations = app.add_option("--iterations", c.iterations, "training iterations");
    auto* opt_batch = app.add_option("--batch", c.batch, "batch size");
    app.add_option("--lr", c.lr, "learning rate");
    app.add_option("--wd", c.wd, "weight decay");
    app.add_option("--seed", c.seed, "training seed");
    app.add_option("--eval-every", c.eval_every, "validation interval");
    auto* opt_dt = app.add_option("--dt", c.d_t, "time embedding width (hidden widths follow)");
    app.add_option("--quantiles", c.n_quantiles, "quantile grid size");
    app.add_option("--schedule-steps", c.schedule_steps, "DDPM diffusion steps");
    app.add_option("--flow-steps", c.flow_steps, "flow sampling steps");
    app.add_option("--threshold", c.threshold, "schema inference threshold");
    app.add_flag("--paper-scale", c.paper_scale,
                 "restore full-scale hyperparameters (100k iterations, batch 4096, width 1024)");
    app.add_flag("--onehot-softmax", c.onehot_softmax, "softmax relaxation for the onehot codec");
    app.add_option("--r-min", c.r_min, "catconverter radial threshold for the OOI cast");
    app.add_option("--config", c.config, "JSON config merged under explicit flags");
    parse_args(app, args);

    if (c.paper_scale) {
        if (!opt_iterations->count()) c.iterations = 100000;
        if (!opt_batch->count()) c.batch = 4096;
        if (!opt_dt->count()) c.d_t = 1024;
    }

    const TableSchema schema = schema_for(c.schema_path, c.data, c.threshold);
    Table table = load_csv(c.data, schema);
    if (table.dropped_rows() > 0)
        std::fprintf(stderr, "{\"warning\":\"dropped %lld rows with missing or unparseable cells\"}\n",
                     static_cast<long long>(table.dropped_rows()));

    SplitIndices idx;
    if (!c.test_data.empty()) {
        const Table test = load_csv(c.test_data, schema);
        const SplitRatio r = parse_ratio(c.ratio);
        const int64_t n_main = table.n_rows();
        table.append_rows(test);
        idx = split_with_external_test(n_main, test.n_rows(),
                                       r.train / (r.train + r.validation), c.seed);
    } else {
        idx = split(table, parse_ratio(c.ratio), c.seed);
    }

    TrainConfig cfg;
    cfg.iterations = c.iterations;
    cfg.batch = c.batch;
    cfg.lr = c.lr;
    cfg.weight_decay = c.wd;
    cfg.regime = regime_from_string(c.regime);
    cfg.seed = c.seed;
    cfg.eval_every = c.eval_every;
    cfg.codec = codec_kind_from_string(c.codec);
    cfg.codec_r_min = c.r_min;
    cfg.onehot_softmax = c.onehot_softmax;
    cfg.d_t = c.d_t;
    cfg.n_quantiles = c.n_quantiles;
    cfg.schedule_steps = c.schedule_steps;
    cfg.flow_sampling_steps = c.flow_steps;

    std::vector<TrainLogRow> log;
    const ModelCheckpoint ckpt =
        train_model(table.select_rows(idx.train), table.select_rows(idx.validation), cfg, &log);
    save_checkpoint(c.out, ckpt);

    if (!c.log_path.empty()) {
        std::string csv = "iteration,loss,val_score\n";
        for (const auto& row : log) {
            csv += std::to_string(row.iteration) + "," + format_double(row.loss) + ",";
            if (row.has_val) csv += format_double(row.val_score);
            csv += "\n";
        }
        atomic_write_file(c.log_path, csv);
    }
    std::printf("checkpoint written to %s (best iteration %lld, val score %.4f)\n", c.out.c_str(),
                static_cast<long long>(ckpt.meta.best_iteration), ckpt.meta.val_score);
    return 0;
}

int cmd_sample(std::vector<std::string> args) {
    args = inject_config(args, {"checkpoint", "n", "seed", "out", "steps"});
    CLI::App app{"sample synthetic rows from a checkpoint"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string ckpt_path, out, config;
    int64_t n = 1000;
    uint64_t seed = 0;
    int steps = 0;
    app.add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
    app.add_option("--n", n, "rows to sample")->required();
    app.add_option("--seed", seed, "sampling seed");
    app.add_option("--out", out, "output CSV")->required();
    app.add_option("--steps", steps, "flow sampling steps override");
    app.add_option("--config", config, "JSON config merged under explicit flags");
    parse_args(app, args);

    const ModelCheckpoint ckpt = load_checkpoint(ckpt_path);
    const SampleResult res = sample_table(
        ckpt, n, seed, steps > 0 ? std::optional<int>(steps) : std::nullopt);
    write_csv(res.table, out);

    double worst = 0.0;
    for (double r : res.ooi_rates) worst = std::max(worst, r);
    std::printf("%lld rows written to %s (max OOI rate %.4f)\n", static_cast<long long>(n),
                out.c_str(), worst);
    return 0;
}

int cmd_eval(std::vector<std::string> args) {
    args = inject_config(args,
                         {"real", "syn", "schema", "out", "seeds", "seed", "ratio", "threshold"});
    CLI::App app{"evaluate synthetic data against the real splits"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string real_path, syn_path, schema_path, out, config;
    std::string ratio = "0.8,0.1,0.1";
    int n_seeds = 20;
    uint64_t seed = 0;
    int threshold = 20;
    app.add_option("--real", real_path, "real CSV")->required();
    app.add_option("--syn", syn_path, "synthetic CSV")->required();
    app.add_option("--schema", schema_path, "schema JSON (inferred when omitted)");
    app.add_option("--out", out, "output prefix; writes <out>.json and <out>.csv")->required();
    app.add_option("--seeds", n_seeds, "number of evaluation seeds");
    app.add_option("--seed", seed, "base seed (also used for the real split)");
    app.add_option("--ratio", ratio, "train,val,test split of the real data");
    app.add_option("--threshold", threshold, "schema inference threshold");
    app.add_option("--config", config, "JSON config merged under explicit flags");
    parse_args(app, args);

    const TableSchema schema = schema_for(schema_path, real_path, threshold);
    const Table real = load_csv(real_path, schema);
    const Table syn = load_csv(syn_path, schema);
    const SplitIndices idx = split(real, parse_ratio(ratio), seed);

    std::vector<uint64_t> seeds(static_cast<size_t>(n_seeds));
    for (int i = 0; i < n_seeds; ++i) seeds[static_cast<size_t>(i)] = seed + static_cast<uint64_t>(i);

    const MetricReport report =
        full_report(real.select_rows(idx.train), real.select_rows(idx.test), syn, seeds);
    atomic_write_file(out + ".json", report.to_json());
    atomic_write_file(out + ".csv", report.to_csv());
    std::printf("report written to %s.json and %s.csv\n", out.c_str(), out.c_str());
    return 0;
}

int cmd_geometry(std::vector<std::string> args) {
    args = inject_config(args, {"k", "alpha", "sigma", "out"});
    CLI::App app{"singular-point diagnostics for the one-hot simplex"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    int k = 3;
    double alpha = 1.0, sigma = 0.2;
    std::string out, config;
    app.add_option("--k", k, "number of categories (<= 12)")->required();
    app.add_option("--alpha", alpha, "forward-process scale");
    app.add_option("--sigma", sigma, "forward-process noise");
    app.add_option("--out", out, "output CSV")->required();
    app.add_option("--config", config, "JSON config merged under explicit flags");
    parse_args(app, args);

    const auto rows = singular_report(k, alpha, sigma, out);
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, r.abs_err);
    std::printf("%zu singular points written to %s (max |closed - exact| %.3g)\n", rows.size(),
                out.c_str(), worst);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    const std::string usage =
        "usage: tabrep <infer|train|sample|eval|geometry> [options]\n"
        "run 'tabrep <subcommand> --help' for details";
    try {
        if (args.empty()) throw CliError("missing subcommand");
        const std::string& cmd = args.front();
        std::vector<std::string> rest(args.begin() + 1, args.end());
        if (cmd == "infer") return cmd_infer(rest);
        if (cmd == "train") return cmd_train(rest);
        if (cmd == "sample") return cmd_sample(rest);
        if (cmd == "eval") return cmd_eval(rest);
        if (cmd == "geometry") return cmd_geometry(rest);
        if (cmd == "--help" || cmd == "-h") {
            std::printf("%s\n", usage.c_str());
            return 0;
        }
        throw CliError("unknown subcommand '" + cmd + "'");
    } catch (const HelpShown&) {
        return 0;
    } catch (const CLI::ParseError& e) {
        nlohmann::ordered_json j{{"error", e.what()}};
        std::cerr << j.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::ordered_json j{{"error", e.what()}};
        std::cerr << j.dump() << "\n";
        return 1;
    }
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace tabrep
