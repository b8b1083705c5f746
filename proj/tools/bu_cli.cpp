// Command-line front end: train, unlearn, eval, run, report.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bu/checkpoint.hpp"
#include "bu/config.hpp"
#include "bu/error.hpp"
#include "bu/experiment.hpp"
#include "bu/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> forget_class;
    std::optional<double> epsilon;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
    auto* opt = cmd->add_option("--config", c.config, "experiment config file");
    if (config_required) opt->required();
    cmd->add_option("--seed", c.seed, "override the global seed");
    cmd->add_option("--forget-class", c.forget_class, "override the class to forget");
    cmd->add_option("--epsilon", c.epsilon, "override the Boundary Shrink step size");
    cmd->add_option("--out", c.out, "run directory");
}

bu::ExperimentConfig load(const Common& c) {
    fs::path path = c.config;
    if (path.empty()) {
        if (c.out.empty()) throw CLI::ValidationError("--config", "no --config and no --out run directory");
        path = fs::path(c.out) / "config.cfg";
    }
    bu::KeyValues overrides;
    if (c.seed) overrides["seed"] = std::to_string(*c.seed);
    if (c.forget_class) overrides["forget.class"] = std::to_string(*c.forget_class);
    if (c.epsilon) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", *c.epsilon);
        overrides["shrink.epsilon"] = buf;
    }
    if (!c.out.empty()) overrides["output.dir"] = c.out;
    return bu::ExperimentConfig::from_file(path, overrides);
}

std::string method_names() {
    std::string out;
    for (bu::Method m : bu::unlearning_methods()) {
        out += (out.empty() ? "" : ", ") + std::string(bu::to_string(m));
    }
    return out;
}

int cmd_train(const Common& c) {
    const bu::ExperimentConfig cfg = load(c);
    const auto ds = bu::build_dataset(cfg);
    const auto result = bu::train_original(cfg, ds);
    const fs::path out = cfg.output_dir;
    bu::write_file_atomic(out / "config.cfg", cfg.canonical_text());
    const fs::path path = bu::checkpoint_path(out, bu::Method::original);
    bu::save_checkpoint(result.model, bu::provenance_for(cfg, result), path);
    std::printf("wrote %s (%.3f s)\n", path.c_str(), result.wall_clock_seconds);
    return 0;
}

int cmd_unlearn(const Common& c, const std::string& method_name, std::string checkpoint) {
    const auto method = bu::parse_method(method_name);
    if (!method || *method == bu::Method::original) {
        std::cerr << "unknown method '" << method_name << "'; valid methods: " << method_names()
                  << "\n";
        return 2;
    }
    const bu::ExperimentConfig cfg = load(c);
    const fs::path out = cfg.output_dir;
    if (checkpoint.empty()) checkpoint = bu::checkpoint_path(out, bu::Method::original).string();
    const bu::Checkpoint original = bu::load_checkpoint(checkpoint);
    const auto split = bu::forget_split(bu::build_dataset(cfg), cfg.forget_class);
    bu::SplitAccess access(split);
    const auto result = bu::run_method(cfg, *method, original.model, access);
    const fs::path path = bu::checkpoint_path(out, *method);
    bu::save_checkpoint(result.model, bu::provenance_for(cfg, result), path);
    std::printf("wrote %s\nmethod,wall_clock_seconds\n%s,%.17g\n", path.c_str(),
                std::string(bu::to_string(*method)).c_str(), result.wall_clock_seconds);
    return 0;
}

int cmd_eval(const Common& c, const std::string& checkpoint) {
    const bu::ExperimentConfig cfg = load(c);
    const bu::Checkpoint ck = bu::load_checkpoint(checkpoint);
    const auto ds = bu::build_dataset(cfg);
    const auto split = bu::forget_split(ds, cfg.forget_class);
    bu::EvalOptions options;
    options.mia = cfg.mia;
    options.raster_resolution = cfg.raster_resolution;
    if (cfg.data.feature_dim == 2) options.raster_bounds = bu::default_bounds(ds.train, cfg.raster_inflate);
    const auto method = bu::parse_method(ck.provenance.method).value_or(bu::Method::original);
    std::cout << bu::eval_report_json(method, bu::evaluate(ck.model, split, options)) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Class-level machine unlearning by decision-boundary shifting"};
    app.require_subcommand(1);

    Common common;
    std::string method;
    std::string checkpoint;

    auto* train = app.add_subcommand("train", "train the original model");
    add_common(train, common, false);

    auto* unlearn = app.add_subcommand("unlearn", "apply one unlearning method to a checkpoint");
    add_common(unlearn, common, false);
    unlearn->add_option("--method", method, "one of: " + method_names())->required();
    unlearn->add_option("--checkpoint", checkpoint,
                        "original model (default <out>/checkpoints/original.buln)");

    auto* eval = app.add_subcommand("eval", "evaluate one checkpoint and print its report");
    add_common(eval, common, false);
    eval->add_option("--checkpoint", checkpoint, "checkpoint to evaluate")->required();

    auto* run = app.add_subcommand("run", "full pipeline: train, unlearn, evaluate, report");
    add_common(run, common, true);

    auto* report = app.add_subcommand("report", "re-emit tables from a run directory");
    report->add_option("--out", common.out, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(common);
        if (unlearn->parsed()) return cmd_unlearn(common, method, checkpoint);
        if (eval->parsed()) return cmd_eval(common, checkpoint);
        if (run->parsed()) {
            const auto cfg = load(common);
            bu::run_experiment(cfg);
            std::cout << bu::read_file_text(cfg.output_dir / "table1.csv");
            return 0;
        }
        if (report->parsed()) {
            bu::emit_report(common.out);
            std::cout << bu::read_file_text(fs::path(common.out) / "table1.csv");
            return 0;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
