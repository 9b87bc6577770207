#pragma once

// Experiment orchestration: config files, presets, network-metric series,
// ensembles and random-state baselines, CSV tables and run manifests.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qca/evolve.hpp"

namespace qca {

std::string version_string();

/// Late-time averaging window in time units.
struct LateWindow {
    double from = 500.0;
    double to = 1000.0;

    static LateWindow standard() { return {500.0, 1000.0}; }
    static LateWindow extended() { return {5000.0, 10000.0}; }
};

// ---------------------------------------------------------------------------
// Config files: one `key = value` per line, `#` starts a comment.
//
//   rule = T6                 # parse_rule syntax (T6, AT6, F4, T6:phase=0.3)
//   boundary = zero           # zero | one | periodic
//   L = 19
//   total_time = 100
//   dt = 0.1
//   initial = center          # center | center101 | bits:0010100 | random | product:<p>
//   perturbation = F26:0.05   # rule:epsilon (analog only)
//   measurement_stride = 1
//   sample_from = 0
//   splitting = strang        # strang | lie
//   measures = one_point,site_entropy,network,bond
//   alpha = 1
//   seed = 7

struct RunConfig {
    EvolutionConfig evolution;
    MeasurementSet measures;
    std::uint64_t seed = 1;
    std::string initial_text = "center";
};

/// Throws std::invalid_argument naming the line on malformed input.
RunConfig parse_run_config(std::string_view text, std::uint64_t default_seed = 1);

std::map<std::string, std::string> parse_key_values(std::string_view text);

/// `count` odd sizes or the inclusive range "a..b" (odd values only when
/// both ends are odd).
std::vector<int> parse_size_range(std::string_view text);
/// "a..b" with an optional ":step" or a comma list.
std::vector<double> parse_real_range(std::string_view text, double default_step = 0.1);

// ---------------------------------------------------------------------------
// Network-metric time series.

struct MetricSeries {
    int num_sites = 0;
    std::vector<double> times;
    std::vector<double> clustering;
    std::vector<double> disparity;
    std::vector<double> path_length;
    std::vector<double> bond_entropy;
    std::vector<std::vector<double>> node_strengths;  // per time
};

/// Evolves and measures the MI network and bond entropy at every sample with
/// t >= sample_from.
MetricSeries network_series(const EvolutionConfig& config, Threshold threshold = Threshold::median());

/// Pointwise mean of series sharing the same sample times.
MetricSeries average_series(const std::vector<MetricSeries>& series);

struct WindowStats {
    double clustering = 0.0;
    double disparity = 0.0;
    double disparity_fluctuation = 0.0;  // mean rolling std of disparity
    double path_length = 0.0;            // mean over finite samples
    double bond_entropy = 0.0;
    double bond_fluctuation = 0.0;       // mean rolling std of s_bond
    long samples = 0;
};

/// Means over samples in [from, to]; fluctuations are rolling standard
/// deviations over `window` samples whose windows end inside [from, to]
/// (and start at or after the first sample).
WindowStats window_stats(const MetricSeries& series, double from, double to, int window);

/// Evolves a Gaussian random state (seeded) under each rule, computes the
/// metric series per rule, then averages the series across rules.
MetricSeries random_state_baseline(const std::vector<RuleSpec>& rules, int num_sites, std::uint64_t seed,
                                   double total_time, double sample_from, double stride, int workers = 1);

// ---------------------------------------------------------------------------
// Ensembles of random product states.

struct EnsembleSpec {
    int trials = 500;
    double p = 0.5;  // probability of |1> per site
    std::uint64_t seed = 1;
};

/// Initial bits of trial `trial`; independent of how trials are scheduled.
std::vector<int> ensemble_bits(const EnsembleSpec& spec, int num_sites, int trial);

/// Averages one-site, two-site and central-cut density matrices across trials
/// at each sampled time (t >= config.sample_from), then computes metrics from
/// the averaged matrices. config.initial_state is ignored.
MetricSeries ensemble_run(const EnsembleSpec& spec, const EvolutionConfig& config, int workers = 1,
                          Threshold threshold = Threshold::median());

// ---------------------------------------------------------------------------
// CSV tables and manifests.

/// Column-oriented table; written with `# key=value` comment lines, then a
/// header row, then one row per record. Numbers use 17 significant digits.
class CsvTable {
public:
    CsvTable(std::vector<std::string> columns, std::map<std::string, std::string> meta = {});

    void add_row(const std::vector<double>& values);
    void add_row(const std::vector<std::string>& values);
    std::size_t rows() const { return rows_.size(); }
    const std::vector<std::string>& columns() const { return columns_; }
    std::string to_string() const;

private:
    std::vector<std::string> columns_;
    std::map<std::string, std::string> meta_;
    std::vector<std::vector<std::string>> rows_;
};

std::string format_number(double v);

/// Tracks files written under one output directory; removes them unless
/// commit() is called.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir);
    ~OutputSet();
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;

    void write(const std::string& name, const std::string& contents);
    void write(const std::string& name, const CsvTable& table) { write(name, table.to_string()); }
    /// Writes manifest.json listing every file with its SHA-256 digest.
    std::filesystem::path commit(const std::string& manifest_json_config, std::uint64_t seed, const std::string& started);
    const std::vector<std::string>& files() const { return files_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
    bool committed_ = false;
};

std::string sha256_hex(std::string_view data);
std::string utc_timestamp();

// ---------------------------------------------------------------------------
// Experiments.

struct RunOptions {
    std::filesystem::path out_dir;
    std::uint64_t seed = 1;
    bool long_run = false;
    int workers = 1;
    std::ostream* log = nullptr;
};

struct RunSummary {
    std::vector<std::string> files;
    std::filesystem::path manifest;
};

std::vector<std::string> preset_names();

/// Runs a named preset, or a config file when `name` is not a preset.
RunSummary run_experiment(const std::string& name, const RunOptions& options);

/// Runs a parsed config: time-series CSVs of the requested measures.
RunSummary run_config(const RunConfig& config, const RunOptions& options, const std::string& config_text);

struct SweepOptions {
    std::vector<RuleSpec> rules;
    std::vector<int> sizes;
    LateWindow window;
    double stride = 1.0;
};

/// Late-window network and bond statistics per (rule, L).
RunSummary run_sweep(const SweepOptions& sweep, const RunOptions& options);

struct EnsembleOptions {
    std::vector<RuleSpec> rules;
    std::vector<double> probabilities;
    std::vector<BoundarySpec> boundaries;
    int num_sites = 15;
    int trials = 500;
    double total_time = 500.0;
    double window_from = 250.0;  // exclusive
};

RunSummary run_ensemble(const EnsembleOptions& ensemble, const RunOptions& options);

}  // namespace qca
