#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "qca/parallel.hpp"
#include "qca/runner.hpp"

namespace qca {

namespace {

void append_metrics(MetricSeries& s, double t, const MeasurementRecord& rec, double bond) {
    s.times.push_back(t);
    s.clustering.push_back(rec.clustering.value_or(0.0));
    s.disparity.push_back(rec.disparity.value_or(0.0));
    s.path_length.push_back(rec.path_length ? rec.path_length->average : std::numeric_limits<double>::infinity());
    s.bond_entropy.push_back(bond);
    s.node_strengths.push_back(rec.node_strengths);
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

}  // namespace

MetricSeries network_series(const EvolutionConfig& config, Threshold threshold) {
    MetricSeries out;
    out.num_sites = config.num_sites;
    MeasurementSet what;
    what.one_point = false;
    what.site_entropy = false;
    what.network = true;
    what.bond = config.num_sites >= 2;
    what.path_threshold = threshold;
    evolve(config, [&](double t, const StateVector& state) {
        const auto rec = measure(state, t, what);
        append_metrics(out, t, rec, rec.bond_entropy_renyi2.value_or(0.0));
    });
    return out;
}

MetricSeries average_series(const std::vector<MetricSeries>& series) {
    if (series.empty()) throw std::invalid_argument("average_series needs at least one series");
    MetricSeries out = series.front();
    const std::size_t n = out.times.size();
    for (std::size_t s = 1; s < series.size(); ++s) {
        const auto& other = series[s];
        if (other.times.size() != n) throw std::invalid_argument("series have different sample counts");
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(other.times[i] - out.times[i]) > 1e-9) throw std::invalid_argument("series sample different times");
            out.clustering[i] += other.clustering[i];
            out.disparity[i] += other.disparity[i];
            out.path_length[i] += other.path_length[i];
            out.bond_entropy[i] += other.bond_entropy[i];
            for (std::size_t j = 0; j < out.node_strengths[i].size(); ++j) {
                out.node_strengths[i][j] += other.node_strengths[i][j];
            }
        }
    }
    const double k = static_cast<double>(series.size());
    for (std::size_t i = 0; i < n; ++i) {
        out.clustering[i] /= k;
        out.disparity[i] /= k;
        out.path_length[i] /= k;
        out.bond_entropy[i] /= k;
        for (double& g : out.node_strengths[i]) g /= k;
    }
    return out;
}

WindowStats window_stats(const MetricSeries& series, double from, double to, int window) {
    WindowStats st;
    std::vector<double> c, d, p, b;
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        const double t = series.times[i];
        if (t + 1e-9 < from || t > to + 1e-9) continue;
        c.push_back(series.clustering[i]);
        d.push_back(series.disparity[i]);
        if (std::isfinite(series.path_length[i])) p.push_back(series.path_length[i]);
        b.push_back(series.bond_entropy[i]);
    }
    st.samples = static_cast<long>(c.size());
    if (c.empty()) throw std::invalid_argument("no samples inside the late-time window");
    st.clustering = mean_of(c);
    st.disparity = mean_of(d);
    st.path_length = p.empty() ? std::numeric_limits<double>::infinity() : mean_of(p);
    st.bond_entropy = mean_of(b);

    auto fluct = [&](const std::vector<double>& full) {
        const auto sd = rolling_std(full, window);
        std::vector<double> picked;
        for (std::size_t i = 0; i < sd.size(); ++i) {
            const double t_end = series.times[i + window - 1];
            if (t_end + 1e-9 >= from && t_end <= to + 1e-9) picked.push_back(sd[i]);
        }
        return mean_of(picked);
    };
    st.disparity_fluctuation = fluct(series.disparity);
    st.bond_fluctuation = fluct(series.bond_entropy);
    return st;
}

MetricSeries random_state_baseline(const std::vector<RuleSpec>& rules, int num_sites, std::uint64_t seed,
                                   double total_time, double sample_from, double stride, int workers) {
    if (rules.empty()) throw std::invalid_argument("random_state_baseline needs at least one rule");
    std::vector<MetricSeries> per_rule(rules.size());
    parallel_for(rules.size(), workers, [&](std::size_t i) {
        EvolutionConfig ev;
        ev.rule = rules[i];
        ev.num_sites = num_sites;
        ev.total_time = total_time;
        ev.initial_state = InitialState::random(seed);
        ev.measurement_stride = stride;
        ev.sample_from = sample_from;
        per_rule[i] = network_series(ev);
    });
    return average_series(per_rule);
}

std::vector<int> ensemble_bits(const EnsembleSpec& spec, int num_sites, int trial) {
    if (!(spec.p >= 0.0 && spec.p <= 1.0)) throw std::invalid_argument("excitation probability must lie in [0, 1]");
    // One generator per trial, seeded from (seed, trial), so results do not
    // depend on scheduling.
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(trial)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<int> bits(num_sites);
    for (int& b : bits) b = u(rng) < spec.p ? 1 : 0;
    return bits;
}

MetricSeries ensemble_run(const EnsembleSpec& spec, const EvolutionConfig& config, int workers, Threshold threshold) {
    if (spec.trials < 1) throw std::invalid_argument("ensemble needs at least one trial");
    config.validate();
    const int n = config.num_sites;
    const int cut = central_cut(n);
    const long samples = std::lround(config.total_time / config.measurement_stride);

    // All trials advance in lockstep so the averaged matrices of one sample
    // time are complete before moving on.
    std::vector<StateVector> states;
    states.reserve(static_cast<std::size_t>(spec.trials));
    for (int t = 0; t < spec.trials; ++t) {
        states.push_back(InitialState::bits(ensemble_bits(spec, n, t)).build(n));
    }
    std::optional<DigitalPropagator> digital;
    std::optional<AnalogPropagator> analog;
    long per_sample = 0;
    if (config.rule.is_digital()) {
        digital.emplace(config.rule, n);
        per_sample = std::lround(config.measurement_stride);
    } else {
        analog.emplace(AnalogPropagator::from_rule(config.rule, n, config.dt, config.splitting, config.perturbation));
        per_sample = std::lround(config.measurement_stride / config.dt);
    }

    MetricSeries out;
    out.num_sites = n;
    const std::size_t num_pairs = static_cast<std::size_t>(n) * (n - 1) / 2;
    const double weight = 1.0 / spec.trials;
    for (long k = 0; k <= samples; ++k) {
        if (k > 0) {
            parallel_for(states.size(), workers, [&](std::size_t i) {
                if (digital) {
                    for (long s = 0; s < per_sample; ++s) digital->step(states[i]);
                } else {
                    analog->advance(states[i], per_sample);
                }
            });
        }
        const double time = k * config.measurement_stride;
        if (time + 1e-9 < config.sample_from) continue;

        // Trials are reduced in fixed chunks and in trial order, so the sums
        // do not depend on the worker count.
        std::vector<Matrix2> avg_singles(n, Matrix2::Zero());
        std::vector<Eigen::Matrix4cd> avg_pairs(num_pairs, Eigen::Matrix4cd::Zero());
        CMatrix avg_block;
        const std::size_t chunk = static_cast<std::size_t>(std::max(1, workers));
        for (std::size_t c0 = 0; c0 < states.size(); c0 += chunk) {
            const std::size_t c1 = std::min(states.size(), c0 + chunk);
            std::vector<std::vector<Matrix2>> singles(c1 - c0);
            std::vector<std::vector<Eigen::Matrix4cd>> pairs(c1 - c0);
            std::vector<CMatrix> blocks(c1 - c0);
            parallel_for(c1 - c0, workers, [&](std::size_t i) {
                singles[i] = single_site_densities(states[c0 + i]);
                pairs[i] = pair_densities(states[c0 + i]);
                blocks[i] = left_block_density(states[c0 + i], cut);
            });
            for (std::size_t i = 0; i < c1 - c0; ++i) {
                for (int j = 0; j < n; ++j) avg_singles[j] += weight * singles[i][j];
                for (std::size_t p = 0; p < num_pairs; ++p) avg_pairs[p] += weight * pairs[i][p];
                if (avg_block.size() == 0) avg_block = CMatrix::Zero(blocks[i].rows(), blocks[i].cols());
                avg_block += weight * blocks[i];
            }
        }
        MeasurementRecord rec;
        rec.time = time;
        fill_network_metrics(rec, mutual_information_from_densities(avg_singles, avg_pairs, 1.0), threshold);
        const double purity = avg_block.cwiseAbs2().sum();
        append_metrics(out, time, rec, -std::log2(std::min(purity, 1.0)));
    }
    return out;
}

}  // namespace qca
