// Command-line front end: presets, config runs, size sweeps, ensembles and
// classical automaton grids.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qca/classical.hpp"
#include "qca/parallel.hpp"
#include "qca/runner.hpp"

namespace {

std::vector<qca::RuleSpec> parse_rule_list(const std::string& text) {
    std::vector<qca::RuleSpec> rules;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) rules.push_back(qca::parse_rule(item));
    }
    if (rules.empty()) throw std::invalid_argument("no rules given");
    return rules;
}

void print_summary(const qca::RunSummary& s) {
    for (const auto& f : s.files) std::cout << f << "\n";
    std::cout << s.manifest.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum cellular automata simulator"};
    app.set_version_flag("--version", qca::version_string());
    app.require_subcommand(1);

    qca::RunOptions options;
    options.workers = qca::default_workers();
    options.log = &std::cerr;
    std::string out_dir;

    auto* run = app.add_subcommand("run", "Run a named preset or a key=value config file");
    std::string target;
    run->add_option("target", target, "Preset name or config file path")->required();
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--seed", options.seed, "Seed recorded in the manifest and used for random states");
    run->add_flag("--long", options.long_run, "Use the long late-time window (5000..10000)");

    auto* sweep = app.add_subcommand("sweep", "Late-window network statistics over rules and sizes");
    std::string sweep_rules = "T1,T6,T14,F4,F26";
    std::string sweep_sizes = "11..19";
    double window_from = 500.0, window_to = 1000.0, stride = 1.0;
    sweep->add_option("--rules", sweep_rules, "Comma-separated rules");
    sweep->add_option("--sizes", sweep_sizes, "Sizes as a..b (odd only when both ends are odd) or a comma list");
    sweep->add_option("--out", out_dir, "Output directory")->required();
    sweep->add_option("--window-from", window_from, "Start of the late-time window");
    sweep->add_option("--window-to", window_to, "End of the late-time window");
    sweep->add_option("--stride", stride, "Measurement stride in time units");
    sweep->add_option("--seed", options.seed, "Seed recorded in the manifest");

    auto* ensemble = app.add_subcommand("ensemble", "Random product-state ensembles with averaged density matrices");
    std::string ens_rules = "T1,T6,T13,T14";
    std::string ens_p = "0.0..1.0";
    std::vector<std::string> ens_boundaries{"zero"};
    qca::EnsembleOptions ens;
    ensemble->add_option("--rules", ens_rules, "Comma-separated rules");
    ensemble->add_option("--p", ens_p, "Excitation probabilities: a..b[:step] or a comma list");
    ensemble->add_option("--trials", ens.trials, "Trials per (rule, p, boundary)");
    ensemble->add_option("--boundary", ens_boundaries, "zero, one or periodic (repeatable)")
        ->check(CLI::IsMember({"zero", "one", "periodic"}));
    ensemble->add_option("--L", ens.num_sites, "Number of sites");
    ensemble->add_option("--total-time", ens.total_time, "Number of steps");
    ensemble->add_option("--window-from", ens.window_from, "Window start (exclusive)");
    ensemble->add_option("--out", out_dir, "Output directory")->required();
    ensemble->add_option("--seed", options.seed, "Ensemble seed");

    auto* eca = app.add_subcommand("eca", "Classical elementary automaton grid as CSV on stdout");
    int eca_rule = 90, eca_sites = 31, eca_steps = 15;
    std::string eca_boundary = "zero";
    eca->add_option("--rule", eca_rule, "Wolfram rule number")->check(CLI::Range(0, 255));
    eca->add_option("--L", eca_sites, "Number of sites")->check(CLI::PositiveNumber);
    eca->add_option("--steps", eca_steps, "Number of steps")->check(CLI::NonNegativeNumber);
    eca->add_option("--boundary", eca_boundary, "zero, one or periodic")->check(CLI::IsMember({"zero", "one", "periodic"}));

    CLI11_PARSE(app, argc, argv);

    try {
        options.out_dir = out_dir;
        if (run->parsed()) {
            print_summary(qca::run_experiment(target, options));
        } else if (sweep->parsed()) {
            qca::SweepOptions s;
            s.rules = parse_rule_list(sweep_rules);
            s.sizes = qca::parse_size_range(sweep_sizes);
            s.window = {window_from, window_to};
            s.stride = stride;
            print_summary(qca::run_sweep(s, options));
        } else if (ensemble->parsed()) {
            ens.rules = parse_rule_list(ens_rules);
            ens.probabilities = qca::parse_real_range(ens_p);
            for (const auto& b : ens_boundaries) ens.boundaries.push_back(qca::parse_boundary(b));
            print_summary(qca::run_ensemble(ens, options));
        } else if (eca->parsed()) {
            qca::BitString init(eca_sites, 0);
            init[eca_sites / 2] = 1;
            const auto rows = qca::eca_evolve(init, eca_rule, eca_steps, qca::parse_boundary(eca_boundary));
            std::vector<std::string> columns{"t"};
            for (int j = 0; j < eca_sites; ++j) columns.push_back("s" + std::to_string(j));
            qca::CsvTable table(columns, {{"rule", "C" + std::to_string(eca_rule)}, {"L", std::to_string(eca_sites)}});
            for (std::size_t t = 0; t < rows.size(); ++t) {
                std::vector<double> row{static_cast<double>(t)};
                for (int b : rows[t]) row.push_back(b);
                table.add_row(row);
            }
            std::cout << table.to_string();
        }
    } catch (const std::exception& e) {
        std::cerr << "qca: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
