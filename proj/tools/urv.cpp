// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0

// urv: falsify or bound safety properties of ReLU networks.
//
//   urv verify NET [PROP] [--acas-prop K] [options]
//   urv bench MANIFEST [--trials T] [--grid a,b,...] [--csv] [options]
//   urv --bench MANIFEST ...          (same as "urv bench")
//
// Exit status: 0 unknown, 1 unsafe, 2 usage/configuration/file error.

#include <chrono>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "urv/urv.hpp"

namespace {

constexpr int kExitError = 2;

struct CommonOptions {
    std::size_t epochs = 1000;
    long long timeout_ms = 60'000;
    std::size_t samples = 10'000;
    std::uint64_t seed = 0;
    std::string order = "rf";
    std::string pruning = "tp";
    unsigned mua = 5;
    double branch_bias = 0.5;
    unsigned parallel = 1;
    bool no_timings = false;
};

void add_common(CLI::App& cmd, CommonOptions& o) {
    cmd.add_option("--epochs", o.epochs, "Epoch bound")->capture_default_str()->check(CLI::PositiveNumber);
    cmd.add_option("--timeout-ms", o.timeout_ms, "Wall-clock budget per (network, property) pair")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--samples", o.samples, "Sample-check size")->capture_default_str()->check(CLI::PositiveNumber);
    cmd.add_option("--seed", o.seed, "Master seed")->capture_default_str();
    cmd.add_option("--strategy", o.order, "Dimension order")
        ->capture_default_str()
        ->check(CLI::IsMember({"rf", "mf", "natural"}));
    cmd.add_option("--pruning", o.pruning, "Branch pruning")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "tp", "ctp"}));
    cmd.add_option("--mua", o.mua, "Greedy restarts per selection (1 disables MUA)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--branch-bias", o.branch_bias, "Probability of the top branch when unpruned")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--parallel", o.parallel, "Worker threads for epochs")->capture_default_str()->check(CLI::PositiveNumber);
    cmd.add_flag("--no-timings", o.no_timings, "Leave wall-clock fields out of the output");
}

urv::VerifierConfig to_config(const CommonOptions& o) {
    urv::VerifierConfig cfg;
    cfg.epochs = o.epochs;
    cfg.timeout = std::chrono::milliseconds(o.timeout_ms);
    cfg.sample_count = o.samples;
    cfg.master_seed = o.seed;
    cfg.parallelism = o.parallel;
    cfg.strategy = urv::parse_strategy_label(o.order + "+" + o.pruning);
    cfg.strategy.mua_restarts = o.mua;
    cfg.strategy.branch_bias = o.branch_bias;
    cfg.strategy.validate();
    return cfg;
}

std::vector<std::string> split_grid(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        if (comma > start) out.push_back(text.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

int emit_error(const std::string& message, bool json, const std::string& property = {}) {
    if (json) {
        urv::VerificationRun run;
        run.verdict = urv::ConfigFailure{message};
        urv::RunReport report{std::move(run), property, "", 0, 0, false};
        std::cout << urv::report_json(report).dump(2) << '\n';
    }
    std::cerr << "urv: error: " << message << '\n';
    return kExitError;
}

int run_verify(const std::string& net_path, const std::optional<std::string>& prop_path, std::optional<int> acas,
               const CommonOptions& o, bool json) {
    if (prop_path.has_value() == acas.has_value()) {
        return emit_error("give exactly one of a property file or --acas-prop", json);
    }
    std::optional<urv::Network> net;
    urv::PropertySpec prop;
    urv::VerifierConfig cfg;
    try {
        net = urv::load_network(net_path);
        prop = prop_path ? urv::load_property(*prop_path) : urv::acasxu_property(*acas);
        cfg = to_config(o);
    } catch (const urv::Error& e) {
        return emit_error(e.what(), json);
    }

    urv::RunReport report = urv::make_report(urv::verify_detailed(*net, prop, cfg), prop, cfg, !o.no_timings);
    if (json) {
        std::cout << urv::report_json(report).dump(2) << '\n';
    } else {
        std::cout << urv::report_text(report);
    }
    if (const auto* f = std::get_if<urv::ConfigFailure>(&report.run.verdict)) {
        std::cerr << "urv: error: " << f->message << '\n';
    }
    return urv::exit_code(report.run.verdict);
}

int run_bench(const std::string& manifest, std::size_t trials, const std::string& grid_text, bool csv,
              const CommonOptions& o) {
    try {
        const urv::VerifierConfig base = to_config(o);
        std::vector<urv::StrategyConfig> grid;
        urv::StrategyConfig grid_base;
        grid_base.mua_restarts = o.mua;
        grid_base.branch_bias = o.branch_bias;
        for (const auto& label : split_grid(grid_text)) grid.push_back(urv::parse_strategy_label(label, grid_base));
        auto cfg = base;
        cfg.compute_confidence = false;
        const auto cases = urv::load_manifest(manifest);
        const auto cells = urv::run_bench(cases, grid, cfg, trials);
        std::cout << (csv ? urv::bench_csv(cells, !o.no_timings) : urv::bench_text(cells, !o.no_timings));
        return 0;
    } catch (const urv::Error& e) {
        std::cerr << "urv: error: " << e.what() << '\n';
        return kExitError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    // "urv --bench M" is shorthand for "urv bench M".
    std::vector<std::string> args(argv, argv + argc);
    if (args.size() > 1 && args[1] == "--bench") args[1] = "bench";
    std::vector<char*> cargs;
    for (auto& a : args) cargs.push_back(a.data());

    CLI::App app{"Under-approximation reachability verifier for ReLU networks"};
    app.require_subcommand(1);

    CommonOptions verify_opts;
    std::string net_path;
    std::optional<std::string> prop_path;
    std::optional<int> acas;
    bool json = false;
    auto* verify = app.add_subcommand("verify", "Verify one property on one network");
    verify->add_option("network", net_path, "Network file (.nnet or urvnet)")->required();
    verify->add_option("property", prop_path, "Property file (urvprop)");
    verify->add_option("--acas-prop", acas, "Built-in ACAS Xu property 1..10")->check(CLI::Range(1, 10));
    verify->add_flag("--json", json, "Print the JSON report");
    add_common(*verify, verify_opts);

    CommonOptions bench_opts;
    bench_opts.timeout_ms = 60'000;
    std::string manifest;
    std::size_t trials = 20;
    std::string grid = "pure,rf+tp,rf+ctp,mf+tp,mf+ctp";
    bool csv = false;
    auto* bench = app.add_subcommand("bench", "Compare strategies over a manifest of cases");
    bench->add_option("manifest", manifest, "Lines of '<network> <property file | acas:K>'")->required();
    bench->add_option("--trials", trials, "Seeds per cell")->capture_default_str()->check(CLI::PositiveNumber);
    bench->add_option("--grid", grid, "Comma-separated strategy labels")->capture_default_str();
    bench->add_flag("--csv", csv, "CSV instead of a text table");
    add_common(*bench, bench_opts);

    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    if (verify->parsed()) return run_verify(net_path, prop_path, acas, verify_opts, json);
    return run_bench(manifest, trials, grid, csv, bench_opts);
}
