// Experiment runner.
//
//   fedmia run <config.json> [--out DIR] [--reps N] [--parallel P]
//   fedmia validate <config.json>
//   fedmia report <DIR>
//
// Exit codes: 0 success, 2 config error, 3 every repetition failed.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fedmia/errors.hpp"
#include "fedmia/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void print_aggregate(const std::map<std::string, fedmia::Summary>& aggregate) {
    for (const char* name : {"accuracy", "precision", "recall", "f1", "auc"}) {
        const auto it = aggregate.find(name);
        if (it == aggregate.end()) continue;
        std::printf("  %-10s %s\n", name, fedmia::format_summary(it->second).c_str());
    }
}

int cmd_run(const std::string& path, const std::string& out, int reps, int parallel) {
    fedmia::ExperimentConfig config = fedmia::load_config(path);
    if (!out.empty()) config.output_dir = out;
    if (reps > 0) {
        config.repetitions = reps;
        config.echo["repetitions"] = reps;
    }
    const auto report = fedmia::run_experiment(config, {parallel, true});

    std::printf("%s: %zu repetition(s), %zu failed -> %s\n", config.name.c_str(), report.repetitions.size(),
                report.failures(), config.output_dir.string().c_str());
    for (const auto& r : report.repetitions)
        if (!r.ok) std::fprintf(stderr, "  repetition %d (seed %llu) failed: %s\n", r.index,
                                static_cast<unsigned long long>(r.seed), r.error.c_str());
    print_aggregate(report.aggregate);
    if (report.overhead) std::printf("  overhead   %+.1f%%\n", report.overhead->mean);
    return report.failures() == report.repetitions.size() ? kExitRuntime : 0;
}

int cmd_validate(const std::string& path) {
    const auto config = fedmia::load_config(path);
    std::optional<std::size_t> dim;
    if (config.dataset.source == fedmia::DatasetSpec::Source::csv)
        dim = fedmia::load_dataset(config.dataset, config.base_seed).dim();
    const auto violations = fedmia::validate_config(config, dim);
    if (violations.empty()) {
        std::printf("ok\n");
        return 0;
    }
    for (const auto& v : violations) std::printf("violation: %s\n", v.c_str());
    return kExitConfig;
}

int cmd_report(const std::string& dir) {
    const auto aggregate = fedmia::reaggregate(dir);
    std::printf("%s\n", dir.c_str());
    print_aggregate(aggregate);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated learning membership and attribute inference toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, report_dir;
    int reps = 0;
    int parallel = 1;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory (overrides output_dir)");
    run->add_option("--reps", reps, "number of repetitions (overrides repetitions)")->check(CLI::PositiveNumber);
    run->add_option("--parallel", parallel, "repetitions run concurrently")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);

    auto* report = app.add_subcommand("report", "re-aggregate metrics.json in an output directory");
    report->add_option("dir", report_dir, "output directory of a previous run")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, reps, parallel);
        if (validate->parsed()) return cmd_validate(config_path);
        return cmd_report(report_dir);
    } catch (const fedmia::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
