#include "qca/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qca/breather.hpp"
#include "qca/parallel.hpp"
#include "qca/rydberg.hpp"

#ifndef QCA_VERSION
#define QCA_VERSION "0.0.0"
#endif

namespace qca {

using nlohmann::json;

std::string version_string() { return QCA_VERSION; }

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double to_double(const std::string& text, const std::string& key) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("'" + key + "' expects a number, got '" + text + "'");
    return v;
}

long to_long(const std::string& text, const std::string& key) {
    long v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("'" + key + "' expects an integer, got '" + text + "'");
    return v;
}

InitialState parse_initial(const std::string& text, const RuleSpec& rule, int num_sites, std::uint64_t seed) {
    if (text == "default") return rule.radius == 2 ? InitialState::center_101(num_sites) : InitialState::single_center(num_sites);
    if (text == "center") return InitialState::single_center(num_sites);
    if (text == "center101") return InitialState::center_101(num_sites);
    if (text == "random") return InitialState::random(seed);
    if (text.starts_with("bits:")) {
        std::vector<int> bits;
        for (char c : text.substr(5)) {
            if (c != '0' && c != '1') throw std::invalid_argument("initial bits must be 0/1, got '" + text + "'");
            bits.push_back(c - '0');
        }
        if (static_cast<int>(bits.size()) != num_sites) {
            throw std::invalid_argument("initial bits have " + std::to_string(bits.size()) + " sites, L = " +
                                        std::to_string(num_sites));
        }
        return InitialState::bits(bits);
    }
    if (text.starts_with("product:")) {
        EnsembleSpec spec;
        spec.p = to_double(text.substr(8), "initial");
        spec.seed = seed;
        return InitialState::bits(ensemble_bits(spec, num_sites, 0));
    }
    throw std::invalid_argument("unknown initial state '" + text + "'");
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
    std::map<std::string, std::string> out;
    int line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line = trim(line.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("line " + std::to_string(line_no) + ": empty key");
        if (!out.emplace(key, value).second) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
    }
    return out;
}

RunConfig parse_run_config(std::string_view text, std::uint64_t default_seed) {
    auto kv = parse_key_values(text);
    auto take = [&](const std::string& key, const std::string& fallback) {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    RunConfig cfg;
    const auto rule_text = take("rule", "");
    if (rule_text.empty()) throw std::invalid_argument("config needs a 'rule'");
    const auto boundary = parse_boundary(take("boundary", "zero"));
    auto& ev = cfg.evolution;
    ev.rule = parse_rule(rule_text, boundary);
    ev.num_sites = static_cast<int>(to_long(take("L", "19"), "L"));
    ev.total_time = to_double(take("total_time", "100"), "total_time");
    ev.dt = to_double(take("dt", "0.1"), "dt");
    ev.measurement_stride = to_double(take("measurement_stride", "1"), "measurement_stride");
    ev.sample_from = to_double(take("sample_from", "0"), "sample_from");
    const auto seed_text = take("seed", "");
    cfg.seed = seed_text.empty() ? default_seed : static_cast<std::uint64_t>(to_long(seed_text, "seed"));
    const auto splitting = take("splitting", "strang");
    if (splitting == "strang") {
        ev.splitting = Splitting::strang;
    } else if (splitting == "lie") {
        ev.splitting = Splitting::lie;
    } else {
        throw std::invalid_argument("splitting must be strang or lie");
    }
    cfg.initial_text = take("initial", "default");
    ev.initial_state = parse_initial(cfg.initial_text, ev.rule, ev.num_sites, cfg.seed);
    const auto pert = take("perturbation", "");
    if (!pert.empty()) {
        const auto colon = pert.rfind(':');
        if (colon == std::string::npos) throw std::invalid_argument("perturbation expects rule:epsilon");
        ev.perturbation = Perturbation{parse_rule(pert.substr(0, colon), boundary),
                                       to_double(pert.substr(colon + 1), "perturbation")};
    }
    auto& m = cfg.measures;
    m = MeasurementSet{false, false, false, false, 1.0, Threshold::median()};
    for (const auto& name : split(take("measures", "one_point,site_entropy"), ',')) {
        if (name == "one_point") {
            m.one_point = true;
        } else if (name == "site_entropy") {
            m.site_entropy = true;
        } else if (name == "network") {
            m.network = true;
        } else if (name == "bond") {
            m.bond = true;
        } else {
            throw std::invalid_argument("unknown measure '" + name + "'");
        }
    }
    m.alpha = to_double(take("alpha", "1"), "alpha");
    const auto threshold = take("path_threshold", "median");
    if (threshold != "median") m.path_threshold = Threshold::fixed(to_double(threshold, "path_threshold"));
    if (!kv.empty()) throw std::invalid_argument("unknown config key '" + kv.begin()->first + "'");
    ev.validate();
    return cfg;
}

std::vector<int> parse_size_range(std::string_view text) {
    const std::string s = trim(text);
    std::vector<int> out;
    if (const auto dots = s.find(".."); dots != std::string::npos) {
        const int a = static_cast<int>(to_long(s.substr(0, dots), "sizes"));
        const int b = static_cast<int>(to_long(s.substr(dots + 2), "sizes"));
        if (a > b) throw std::invalid_argument("size range must be ascending");
        const int step = (a % 2 == 1 && b % 2 == 1) ? 2 : 1;
        for (int v = a; v <= b; v += step) out.push_back(v);
    } else {
        for (const auto& part : split(s, ',')) out.push_back(static_cast<int>(to_long(part, "sizes")));
    }
    for (int v : out) {
        if (v < 3) throw std::invalid_argument("system sizes must be at least 3");
    }
    return out;
}

std::vector<double> parse_real_range(std::string_view text, double default_step) {
    const std::string s = trim(text);
    std::vector<double> out;
    if (const auto dots = s.find(".."); dots != std::string::npos) {
        std::string rest = s.substr(dots + 2);
        double step = default_step;
        if (const auto colon = rest.find(':'); colon != std::string::npos) {
            step = to_double(rest.substr(colon + 1), "range step");
            rest = rest.substr(0, colon);
        }
        const double a = to_double(s.substr(0, dots), "range");
        const double b = to_double(rest, "range");
        if (!(step > 0.0) || a > b) throw std::invalid_argument("range must be ascending with a positive step");
        const long n = std::lround(std::floor((b - a) / step + 1e-9));
        for (long i = 0; i <= n; ++i) out.push_back(a + step * i);
    } else {
        for (const auto& part : split(s, ',')) out.push_back(to_double(part, "list"));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV and manifests

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) v = 0.0;  // drop the sign of negative zero
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

CsvTable::CsvTable(std::vector<std::string> columns, std::map<std::string, std::string> meta)
    : columns_(std::move(columns)), meta_(std::move(meta)) {
    if (columns_.empty()) throw std::invalid_argument("CSV table needs columns");
}

void CsvTable::add_row(const std::vector<double>& values) {
    std::vector<std::string> row;
    for (double v : values) row.push_back(format_number(v));
    add_row(row);
}

void CsvTable::add_row(const std::vector<std::string>& values) {
    if (values.size() != columns_.size()) {
        throw std::invalid_argument("row has " + std::to_string(values.size()) + " values, table has " +
                                    std::to_string(columns_.size()) + " columns");
    }
    rows_.push_back(values);
}

std::string CsvTable::to_string() const {
    std::ostringstream os;
    for (const auto& [k, v] : meta_) os << "# " << k << "=" << v << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
    }
    return os.str();
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

OutputSet::~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(dir_ / f, ec);
}

void OutputSet::write(const std::string& name, const std::string& contents) {
    if (std::find(files_.begin(), files_.end(), name) != files_.end()) {
        throw std::logic_error("output file '" + name + "' written twice");
    }
    const auto path = dir_ / name;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    files_.push_back(name);
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::filesystem::path OutputSet::commit(const std::string& config_json, std::uint64_t seed, const std::string& started) {
    json inventory = json::array();
    for (const auto& f : files_) {
        std::ifstream in(dir_ / f, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        const auto data = buf.str();
        inventory.push_back({{"file", f}, {"bytes", data.size()}, {"sha256", sha256_hex(data)}});
    }
    json manifest = {
        {"version", version_string()},
        {"seed", seed},
        {"started", started},
        {"finished", utc_timestamp()},
        {"config", json::parse(config_json)},
        {"outputs", inventory},
    };
    const auto path = dir_ / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    out << manifest.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    committed_ = true;
    return path;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

const std::vector<std::string> kStudyRules = {"T1", "T6", "T14", "F4", "F26"};
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<RuleSpec> study_rules() {
    std::vector<RuleSpec> out;
    for (const auto& r : kStudyRules) out.push_back(parse_rule(r));
    return out;
}

InitialState default_initial(const RuleSpec& rule, int num_sites) {
    return rule.radius == 2 ? InitialState::center_101(num_sites) : InitialState::single_center(num_sites);
}

std::map<std::string, std::string> meta_for(int num_sites, const RuleSpec& rule, const std::string& columns) {
    return {{"L", std::to_string(num_sites)}, {"rule", rule.to_string()}, {"columns", columns}};
}

json config_json(const EvolutionConfig& ev, const MeasurementSet& m, const std::string& initial) {
    json j = {
        {"rule", ev.rule.to_string()},
        {"L", ev.num_sites},
        {"total_time", ev.total_time},
        {"dt", ev.dt},
        {"initial", initial},
        {"measurement_stride", ev.measurement_stride},
        {"sample_from", ev.sample_from},
        {"splitting", ev.splitting == Splitting::strang ? "strang" : "lie"},
        {"measures",
         {{"one_point", m.one_point}, {"site_entropy", m.site_entropy}, {"network", m.network}, {"bond", m.bond},
          {"alpha", m.alpha}}},
    };
    if (ev.perturbation) j["perturbation"] = {{"rule", ev.perturbation->rule.to_string()}, {"epsilon", ev.perturbation->epsilon}};
    return j;
}

void log_line(const RunOptions& o, const std::string& msg) {
    if (o.log) *o.log << msg << std::endl;
}

std::vector<std::string> site_columns(const std::string& first, int n) {
    std::vector<std::string> cols{first};
    for (int j = 0; j < n; ++j) cols.push_back("site_" + std::to_string(j));
    return cols;
}

CsvTable grid_table(const Trajectory& traj, int n, const RuleSpec& rule, const std::string& what,
                    const std::vector<double> MeasurementRecord::*field) {
    CsvTable t(site_columns("t", n), meta_for(n, rule, "t=time; site_j=" + what + " at site j"));
    for (const auto& rec : traj.records) {
        std::vector<double> row{rec.time};
        const auto& v = rec.*field;
        row.insert(row.end(), v.begin(), v.end());
        t.add_row(row);
    }
    return t;
}

CsvTable metric_table(const MetricSeries& s, const RuleSpec& rule, const std::string& label, int window) {
    auto meta = meta_for(s.num_sites, rule,
                         "t=time; clustering; disparity; disparity_fluct=rolling std of disparity over the trailing "
                         "window; path_length=median-threshold average path length; bond_entropy=Renyi-2 at the "
                         "central cut; bond_fluct=rolling std of bond_entropy");
    meta["series"] = label;
    meta["rolling_window"] = std::to_string(window);
    CsvTable t({"t", "clustering", "disparity", "disparity_fluct", "path_length", "bond_entropy", "bond_fluct"}, meta);
    const auto dfl = rolling_std(s.disparity, window);
    const auto bfl = rolling_std(s.bond_entropy, window);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        const bool full = i + 1 >= static_cast<std::size_t>(window);
        const std::size_t w = full ? i + 1 - window : 0;
        t.add_row(std::vector<double>{s.times[i], s.clustering[i], s.disparity[i], full ? dfl[w] : nan, s.path_length[i],
                                      s.bond_entropy[i], full ? bfl[w] : nan});
    }
    return t;
}

CsvTable histogram_table(const MetricSeries& s, const RuleSpec& rule, const LateWindow& w) {
    std::vector<double> samples;
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        if (s.times[i] + 1e-9 >= w.from && s.times[i] <= w.to + 1e-9) {
            samples.insert(samples.end(), s.node_strengths[i].begin(), s.node_strengths[i].end());
        }
    }
    auto meta = meta_for(s.num_sites, rule,
                         "lower,upper=bin edges in node strength; count; probability=count/positive samples; "
                         "density=probability per unit strength; log_density=probability per unit ln strength");
    meta["window"] = format_number(w.from) + ".." + format_number(w.to);
    CsvTable t({"lower", "upper", "count", "probability", "density", "log_density"}, meta);
    if (samples.empty()) return t;
    const auto h = node_strength_density(samples);
    for (const auto& b : h.bins) {
        t.add_row(std::vector<double>{b.lower, b.upper, static_cast<double>(b.count), b.probability, b.density,
                                      b.log_density});
    }
    return t;
}

CsvTable network_table(const StateVector& state, const RuleSpec& rule) {
    const auto net = mutual_information_matrix(state);
    const int n = net.size();
    CsvTable t(site_columns("site", n), meta_for(n, rule, "row j, column site_k = mutual information M_jk"));
    for (int j = 0; j < n; ++j) {
        std::vector<double> row{static_cast<double>(j)};
        for (int k = 0; k < n; ++k) row.push_back(net(j, k));
        t.add_row(row);
    }
    return t;
}

EvolutionConfig standard_config(const RuleSpec& rule, int num_sites, double total_time) {
    EvolutionConfig ev;
    ev.rule = rule;
    ev.num_sites = num_sites;
    ev.total_time = total_time;
    ev.initial_state = default_initial(rule, num_sites);
    return ev;
}

RunSummary finish(OutputSet& out, const json& config, const RunOptions& options, const std::string& started) {
    RunSummary s;
    s.manifest = out.commit(config.dump(), options.seed, started);
    s.files = out.files();
    return s;
}

RunSummary preset_fig2(const RunOptions& o) {
    const std::string started = utc_timestamp();
    OutputSet out(o.out_dir);
    const int n = 19;
    const double total = o.long_run ? 1000.0 : 100.0;
    const auto rules = study_rules();
    std::vector<Trajectory> trajs(rules.size());
    parallel_for(rules.size(), o.workers, [&](std::size_t i) {
        trajs[i] = run(standard_config(rules[i], n, total), MeasurementSet{true, true, false, false, 1.0, {}});
    });
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto label = rules[i].label();
        out.write("fig2_" + label + "_sigma_z.csv", grid_table(trajs[i], n, rules[i], "<sigma^z_j>", &MeasurementRecord::sigma_z));
        out.write("fig2_" + label + "_entropy.csv",
                  grid_table(trajs[i], n, rules[i], "von Neumann entropy s_j (bits)", &MeasurementRecord::site_entropy));
        log_line(o, "fig2: " + label + " done");
    }
    return finish(out, {{"preset", "fig2"}, {"L", n}, {"total_time", total}, {"rules", kStudyRules}}, o, started);
}

RunSummary preset_fig3_fig4(const RunOptions& o, bool networks) {
    const std::string started = utc_timestamp();
    const std::string tag = networks ? "fig3" : "fig4";
    OutputSet out(o.out_dir);
    const int n = 19;
    const auto w = o.long_run ? LateWindow::extended() : LateWindow::standard();
    const auto rules = study_rules();
    std::vector<MetricSeries> series(rules.size());
    std::vector<StateVector> finals(rules.size(), StateVector(1));
    parallel_for(rules.size(), o.workers, [&](std::size_t i) {
        auto ev = standard_config(rules[i], n, w.to);
        if (networks) {
            MetricSeries s;
            s.num_sites = n;
            MeasurementSet what{false, false, true, true, 1.0, Threshold::median()};
            finals[i] = evolve(ev, [&](double t, const StateVector& state) {
                // Networks are sampled every unit from the window start; the
                // bond entropy at every unit.
                MeasurementSet m = what;
                m.network = t + 1e-9 >= w.from - n;
                const auto rec = measure(state, t, m);
                s.times.push_back(t);
                s.clustering.push_back(rec.clustering.value_or(0.0));
                s.disparity.push_back(rec.disparity.value_or(0.0));
                s.path_length.push_back(rec.path_length ? rec.path_length->average : std::numeric_limits<double>::infinity());
                s.bond_entropy.push_back(rec.bond_entropy_renyi2.value_or(0.0));
                s.node_strengths.push_back(rec.node_strengths);
            });
            series[i] = std::move(s);
        } else {
            MetricSeries s;
            s.num_sites = n;
            evolve(ev, [&](double t, const StateVector& state) {
                s.times.push_back(t);
                s.clustering.push_back(0.0);
                s.disparity.push_back(0.0);
                s.path_length.push_back(0.0);
                s.bond_entropy.push_back(bond_entropy_renyi2(state));
                s.node_strengths.emplace_back();
            });
            series[i] = std::move(s);
        }
        log_line(o, tag + ": " + rules[i].label() + " done");
    });
    MetricSeries baseline;
    if (networks) {
        baseline = random_state_baseline(rules, n, o.seed, w.to, w.from - n, 1.0, o.workers);
    } else {
        std::vector<MetricSeries> per_rule(rules.size());
        parallel_for(rules.size(), o.workers, [&](std::size_t i) {
            EvolutionConfig ev = standard_config(rules[i], n, w.to);
            ev.initial_state = InitialState::random(o.seed);
            MetricSeries s;
            s.num_sites = n;
            evolve(ev, [&](double t, const StateVector& state) {
                s.times.push_back(t);
                s.clustering.push_back(0.0);
                s.disparity.push_back(0.0);
                s.path_length.push_back(0.0);
                s.bond_entropy.push_back(bond_entropy_renyi2(state));
                s.node_strengths.emplace_back(static_cast<std::size_t>(n), 0.0);
            });
            per_rule[i] = std::move(s);
        });
        for (auto& s : series) {
            for (auto& g : s.node_strengths) g.assign(static_cast<std::size_t>(n), 0.0);
        }
        baseline = average_series(per_rule);
    }
    log_line(o, tag + ": random baseline done");

    CsvTable summary({"rule", "clustering", "disparity_fluct", "path_length", "bond_entropy", "bond_fluct"},
                     {{"L", std::to_string(n)},
                      {"rule", "all"},
                      {"window", format_number(w.from) + ".." + format_number(w.to)},
                      {"columns", "late-window means; fluctuations are rolling stds over L samples"}});
    auto add_summary = [&](const std::string& label, const MetricSeries& s) {
        const auto st = window_stats(s, w.from, w.to, n);
        summary.add_row(std::vector<std::string>{label, format_number(st.clustering), format_number(st.disparity_fluctuation),
                                                 format_number(st.path_length), format_number(st.bond_entropy),
                                                 format_number(st.bond_fluctuation)});
    };
    RuleSpec random_label = rules.front();
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto label = rules[i].label();
        // Keep only samples from the first full network window onwards.
        out.write(tag + "_" + label + "_series.csv", metric_table(series[i], rules[i], label, n));
        if (networks) {
            out.write(tag + "_" + label + "_network.csv", network_table(finals[i], rules[i]));
            out.write(tag + "_" + label + "_strength_density.csv", histogram_table(series[i], rules[i], w));
        }
        add_summary(label, series[i]);
    }
    out.write(tag + "_random_series.csv", metric_table(baseline, random_label, "random", n));
    add_summary("random", baseline);
    out.write(tag + "_summary.csv", summary);
    return finish(out,
                  {{"preset", tag}, {"L", n}, {"window", {w.from, w.to}}, {"rules", kStudyRules}, {"baseline_seed", o.seed}},
                  o, started);
}

RunSummary preset_fig5(const RunOptions& o) {
    const std::string started = utc_timestamp();
    OutputSet out(o.out_dir);
    BreatherConfig bc;
    bc.total_time = o.long_run ? 6000.0 : 1000.0;
    const int n = bc.num_sites;
    const auto rule = bc.base;

    auto ev = standard_config(rule, n, bc.total_time);
    const auto traj = run(ev, MeasurementSet::one_point_only());
    out.write("fig5_F4_p1.csv", grid_table(traj, n, rule, "<P1_j>", &MeasurementRecord::p1));
    const auto profile = fluctuation_profile(traj, n, bc.total_time / 2, bc.total_time);
    CsvTable prof({"site", "fluctuation"}, meta_for(n, rule, "site; fluctuation=late-time mean rolling std of <P1_j>"));
    for (int j = 0; j < n; ++j) prof.add_row(std::vector<double>{static_cast<double>(j), profile[j]});
    out.write("fig5_profile.csv", prof);
    log_line(o, "fig5: profile done");

    const auto eps = log_spaced(0.02, 0.3, 6);
    const auto scan = perturbation_scan(eps, bc, o.workers);
    CsvTable fits({"epsilon", "A", "B", "tau", "residual", "decay_detected"},
                  meta_for(n, rule, "epsilon=F26 admixture; fit A + B exp(-t/tau) of neighbor fluctuations"));
    CsvTable curves({"epsilon", "t", "fluctuation"}, meta_for(n, rule, "neighbor fluctuation series per epsilon"));
    std::vector<double> fe, ft;
    for (const auto& p : scan) {
        fits.add_row(std::vector<double>{p.epsilon, p.fit.A, p.fit.B, p.fit.tau, p.fit.residual, p.fit.decay_detected ? 1.0 : 0.0});
        for (std::size_t i = 0; i < p.fluctuations.times.size(); ++i) {
            curves.add_row(std::vector<double>{p.epsilon, p.fluctuations.times[i], p.fluctuations.values[i]});
        }
        if (p.fit.decay_detected) {
            fe.push_back(p.epsilon);
            ft.push_back(p.fit.tau);
        }
    }
    out.write("fig5_lifetimes.csv", fits);
    out.write("fig5_fluctuations.csv", curves);
    CsvTable law({"exponent", "prefactor", "r_squared", "exponent_stderr", "points"},
                 meta_for(n, rule, "power-law fit tau = prefactor * epsilon^exponent"));
    if (fe.size() >= 3) {
        const auto f = fit_powerlaw(fe, ft);
        law.add_row(std::vector<double>{f.exponent, f.prefactor, f.r_squared, f.exponent_stderr, static_cast<double>(fe.size())});
    }
    out.write("fig5_powerlaw.csv", law);
    log_line(o, "fig5: perturbation scan done");

    const std::vector<double> deltas{0.25, 0.5, 0.8};
    const std::vector<double> phis{0.0, std::numbers::pi / 2};
    const auto init = init_perturbation_scan(deltas, phis, bc, o.workers);
    CsvTable it({"delta", "phi", "amplitude_early", "amplitude_late", "B", "tau", "decay_detected"},
                meta_for(n, rule, "imperfect |1> copies; amplitudes are mean neighbor fluctuations"));
    for (const auto& p : init) {
        it.add_row(std::vector<double>{p.delta, p.phi, p.amplitude_early, p.amplitude_late, p.fit.B, p.fit.tau,
                                       p.fit.decay_detected ? 1.0 : 0.0});
    }
    out.write("fig5_initialization.csv", it);
    return finish(out, {{"preset", "fig5"}, {"L", n}, {"total_time", bc.total_time}, {"epsilons", eps}}, o, started);
}

RunSummary preset_rydberg(const RunOptions& o) {
    const std::string started = utc_timestamp();
    OutputSet out(o.out_dir);
    const std::vector<RuleSpec> rules{make_analog_t_rule(1), make_analog_t_rule(6), make_analog_f_rule(4)};
    CsvTable table({"rule", "higher_order", "deviation_percent", "delta", "boundary_offsets", "v_a", "a_um"},
                   {{"L", "17"}, {"rule", "T1,T6,F4"}, {"columns", "deviation = mean |dsigma^z|/2 over sites, t in [0,20]"}});
    std::vector<RydbergComparison> results(rules.size() * 2);
    parallel_for(results.size(), o.workers, [&](std::size_t i) {
        RydbergOptions ro;
        ro.include_higher_order = i % 2 == 0;
        results[i] = compare_rule(rules[i / 2], ro);
    });
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::string offsets;
        for (double d : r.params.boundary_deltas) offsets += (offsets.empty() ? "" : ";") + format_number(d);
        const bool tails = i % 2 == 0;
        table.add_row(std::vector<std::string>{r.rule.label(), tails ? "1" : "0", format_number(r.deviation),
                                               format_number(r.params.delta), offsets, format_number(r.params.v_a()),
                                               format_number(r.params.geometry.a)});
        const std::string suffix = r.rule.label() + (tails ? "_full" : "_truncated");
        const int n = static_cast<int>(r.qca.records.front().sigma_z.size());
        out.write("rydberg_" + suffix + "_qca.csv", grid_table(r.qca, n, r.rule, "<sigma^z_j> (ideal)", &MeasurementRecord::sigma_z));
        out.write("rydberg_" + suffix + "_atoms.csv",
                  grid_table(r.rydberg, n, r.rule, "<sigma^z_j> (Rydberg)", &MeasurementRecord::sigma_z));
    }
    out.write("rydberg_deviations.csv", table);
    return finish(out, {{"preset", "rydberg"}, {"L", 17}, {"omega", kRabiFrequency}, {"v_a", kBlockadeEnergy}, {"c6", kC6}},
                  o, started);
}

RunSummary preset_appendix(const RunOptions& o) {
    EnsembleOptions e;
    for (int r : {1, 6, 13, 14}) e.rules.push_back(make_digital_rule(r));
    e.probabilities = parse_real_range("0.0..1.0:0.1");
    e.boundaries = {parse_boundary("zero"), parse_boundary("one"), parse_boundary("periodic")};
    e.num_sites = 15;
    e.trials = 500;
    RunOptions sub = o;
    sub.out_dir = o.out_dir / "ensembles";
    run_ensemble(e, sub);

    // Phase-gate activation sweep at the standard window.
    const std::string started = utc_timestamp();
    OutputSet out(o.out_dir);
    const int n = 19;
    const auto w = o.long_run ? LateWindow::extended() : LateWindow::standard();
    const std::vector<double> phases{0.0, kTwoPi / 8, kTwoPi / 4, 3 * kTwoPi / 8, kTwoPi / 2};
    std::vector<std::pair<int, double>> grid;
    for (int r : {1, 6, 13, 14}) {
        for (double u : phases) grid.emplace_back(r, u);
    }
    std::vector<WindowStats> stats(grid.size());
    parallel_for(grid.size(), o.workers, [&](std::size_t i) {
        const auto rule = make_digital_rule(grid[i].first, ActivationSpec::hadamard_phase(grid[i].second));
        auto ev = standard_config(rule, n, w.to);
        ev.sample_from = w.from - n;
        stats[i] = window_stats(network_series(ev), w.from, w.to, n);
        log_line(o, "appendix: " + rule.to_string() + " done");
    });
    CsvTable t({"rule", "upsilon", "clustering", "disparity_fluct", "bond_fluct"},
               {{"L", std::to_string(n)}, {"rule", "T1,T6,T13,T14"}, {"columns", "late-window means vs phase-gate angle"}});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        t.add_row(std::vector<std::string>{"T" + std::to_string(grid[i].first), format_number(grid[i].second),
                                           format_number(stats[i].clustering), format_number(stats[i].disparity_fluctuation),
                                           format_number(stats[i].bond_fluctuation)});
    }
    out.write("appendix_phase_sweep.csv", t);
    return finish(out, {{"preset", "appendix-sweeps"}, {"L", n}, {"phases", phases}, {"ensemble_dir", "ensembles"}}, o,
                  started);
}

}  // namespace

std::vector<std::string> preset_names() { return {"fig2", "fig3", "fig4", "fig5", "rydberg", "appendix-sweeps"}; }

RunSummary run_config(const RunConfig& cfg, const RunOptions& o, const std::string& config_text) {
    const std::string started = utc_timestamp();
    OutputSet out(o.out_dir);
    const auto& ev = cfg.evolution;
    const int n = ev.num_sites;
    const auto& m = cfg.measures;
    std::vector<MeasurementRecord> records;
    evolve(ev, [&](double t, const StateVector& state) { records.push_back(measure(state, t, m)); });
    Trajectory traj;
    for (const auto& r : records) traj.times.push_back(r.time);
    traj.records = std::move(records);
    const auto label = ev.rule.label();
    if (m.one_point) {
        out.write(label + "_sigma_z.csv", grid_table(traj, n, ev.rule, "<sigma^z_j>", &MeasurementRecord::sigma_z));
        out.write(label + "_sigma_x.csv", grid_table(traj, n, ev.rule, "<sigma^x_j>", &MeasurementRecord::sigma_x));
        out.write(label + "_p1.csv", grid_table(traj, n, ev.rule, "<P1_j>", &MeasurementRecord::p1));
    }
    if (m.site_entropy) {
        out.write(label + "_entropy.csv", grid_table(traj, n, ev.rule, "von Neumann entropy s_j (bits)", &MeasurementRecord::site_entropy));
    }
    if (m.network || m.bond) {
        CsvTable t({"t", "clustering", "disparity", "path_length", "connected_fraction", "bond_entropy"},
                   meta_for(n, ev.rule, "t=time; network metrics (nan when not measured); bond_entropy=Renyi-2 at the central cut"));
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (const auto& r : traj.records) {
            t.add_row(std::vector<double>{r.time, r.clustering.value_or(nan), r.disparity.value_or(nan),
                                          r.path_length ? r.path_length->average : nan,
                                          r.path_length ? r.path_length->connected_fraction : nan,
                                          r.bond_entropy_renyi2.value_or(nan)});
        }
        out.write(label + "_metrics.csv", t);
    }
    json cj = config_json(ev, m, cfg.initial_text);
    cj["source"] = config_text;
    return finish(out, cj, RunOptions{o.out_dir, cfg.seed, o.long_run, o.workers, o.log}, started);
}

RunSummary run_sweep(const SweepOptions& sweep, const RunOptions& o) {
    if (sweep.rules.empty() || sweep.sizes.empty()) throw std::invalid_argument("sweep needs rules and sizes");
    const std::string started = utc_timestamp();
    OutputSet out(o.out_dir);
    std::vector<std::pair<std::size_t, int>> grid;
    for (std::size_t r = 0; r < sweep.rules.size(); ++r) {
        for (int n : sweep.sizes) grid.emplace_back(r, n);
    }
    std::vector<WindowStats> stats(grid.size());
    parallel_for(grid.size(), o.workers, [&](std::size_t i) {
        const auto& rule = sweep.rules[grid[i].first];
        const int n = grid[i].second;
        auto ev = standard_config(rule, n, sweep.window.to);
        ev.measurement_stride = sweep.stride;
        ev.sample_from = std::max(0.0, sweep.window.from - n * sweep.stride);
        stats[i] = window_stats(network_series(ev), sweep.window.from, sweep.window.to, n);
        log_line(o, "sweep: " + rule.label() + " L=" + std::to_string(n) + " done");
    });
    CsvTable t({"rule", "L", "clustering", "disparity_fluct", "path_length", "bond_entropy", "bond_fluct", "samples"},
               {{"L", "various"},
                {"rule", "various"},
                {"window", format_number(sweep.window.from) + ".." + format_number(sweep.window.to)},
                {"columns", "late-window means per rule and size; fluctuations use a rolling window of L samples"}});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& s = stats[i];
        t.add_row(std::vector<std::string>{sweep.rules[grid[i].first].label(), std::to_string(grid[i].second),
                                           format_number(s.clustering), format_number(s.disparity_fluctuation),
                                           format_number(s.path_length), format_number(s.bond_entropy),
                                           format_number(s.bond_fluctuation), std::to_string(s.samples)});
    }
    out.write("sweep_summary.csv", t);
    std::vector<std::string> rule_labels;
    for (const auto& r : sweep.rules) rule_labels.push_back(r.to_string());
    return finish(out,
                  {{"command", "sweep"}, {"rules", rule_labels}, {"sizes", sweep.sizes}, {"window", {sweep.window.from, sweep.window.to}}},
                  o, started);
}

RunSummary run_ensemble(const EnsembleOptions& e, const RunOptions& o) {
    if (e.rules.empty() || e.probabilities.empty() || e.boundaries.empty()) {
        throw std::invalid_argument("ensemble needs rules, probabilities and boundaries");
    }
    const std::string started = utc_timestamp();
    OutputSet out(o.out_dir);
    const int n = e.num_sites;
    CsvTable t({"rule", "boundary", "p", "clustering", "disparity_fluct", "bond_fluct", "path_length"},
               {{"L", std::to_string(n)},
                {"rule", "various"},
                {"trials", std::to_string(e.trials)},
                {"window", "(" + format_number(e.window_from) + "," + format_number(e.total_time) + "]"},
                {"columns", "late-window metrics of trial-averaged density matrices"}});
    for (const auto& boundary : e.boundaries) {
        for (const auto& base : e.rules) {
            RuleSpec rule = base;
            rule.boundary = boundary;
            for (double p : e.probabilities) {
                EvolutionConfig ev;
                ev.rule = rule;
                ev.num_sites = n;
                ev.total_time = e.total_time;
                ev.sample_from = std::max(0.0, e.window_from + 1.0 - n);
                const auto series = ensemble_run(EnsembleSpec{e.trials, p, o.seed}, ev, o.workers);
                const auto st = window_stats(series, e.window_from + 1.0, e.total_time, n);
                t.add_row(std::vector<std::string>{rule.label(), boundary.to_string(), format_number(p),
                                                   format_number(st.clustering), format_number(st.disparity_fluctuation),
                                                   format_number(st.bond_fluctuation), format_number(st.path_length)});
                log_line(o, "ensemble: " + rule.label() + " " + boundary.to_string() + " p=" + format_number(p) + " done");
            }
        }
    }
    out.write("ensemble_summary.csv", t);
    std::vector<std::string> rule_labels, boundary_labels;
    for (const auto& r : e.rules) rule_labels.push_back(r.to_string());
    for (const auto& b : e.boundaries) boundary_labels.push_back(b.to_string());
    return finish(out,
                  {{"command", "ensemble"},
                   {"rules", rule_labels},
                   {"boundaries", boundary_labels},
                   {"p", e.probabilities},
                   {"L", n},
                   {"trials", e.trials},
                   {"total_time", e.total_time}},
                  o, started);
}

RunSummary run_experiment(const std::string& name, const RunOptions& o) {
    if (name == "fig2") return preset_fig2(o);
    if (name == "fig3") return preset_fig3_fig4(o, true);
    if (name == "fig4") return preset_fig3_fig4(o, false);
    if (name == "fig5") return preset_fig5(o);
    if (name == "rydberg") return preset_rydberg(o);
    if (name == "appendix-sweeps") return preset_appendix(o);
    std::ifstream in(name);
    if (!in) throw std::invalid_argument("'" + name + "' is neither a preset nor a readable config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    const auto cfg = parse_run_config(buf.str(), o.seed);
    return run_config(cfg, o, buf.str());
}

}  // namespace qca
