#include "qca/breather.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qca/parallel.hpp"

namespace qca {

namespace {

constexpr int kTauGridPoints = 240;
constexpr int kMaxGaussNewtonIterations = 200;

struct LinearPart {
    double a = 0.0;
    double b = 0.0;
    double rss = std::numeric_limits<double>::infinity();
};

// Best A, B for a fixed tau (closed-form 2x2 normal equations) on shifted
// times s = t - t0.
LinearPart solve_linear(std::span<const double> s, std::span<const double> y, double tau) {
    double n = 0, se = 0, see = 0, sy = 0, sey = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double e = std::exp(-s[i] / tau);
        n += 1;
        se += e;
        see += e * e;
        sy += y[i];
        sey += e * y[i];
    }
    LinearPart out;
    const double det = n * see - se * se;
    if (std::abs(det) < 1e-14 * n * see) {
        out.a = sy / n;
        out.b = 0.0;
    } else {
        out.a = (see * sy - se * sey) / det;
        out.b = (n * sey - se * sy) / det;
    }
    out.rss = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double r = y[i] - out.a - out.b * std::exp(-s[i] / tau);
        out.rss += r * r;
    }
    return out;
}

double rss_of(std::span<const double> s, std::span<const double> y, double a, double b, double tau) {
    double rss = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double r = y[i] - a - b * std::exp(-s[i] / tau);
        rss += r * r;
    }
    return rss;
}

}  // namespace

double LifetimeFit::evaluate(double t) const { return A + B * std::exp(-t / tau); }

LifetimeFit fit_exponential(std::span<const double> t, std::span<const double> y, double max_tau) {
    if (t.size() != y.size()) throw std::invalid_argument("fit_exponential: t and y lengths differ");
    if (t.size() < 8) throw std::invalid_argument("fit_exponential needs at least 8 points");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(y[i])) throw std::invalid_argument("fit_exponential: non-finite data");
    }
    const auto [tmin_it, tmax_it] = std::minmax_element(t.begin(), t.end());
    const double t0 = *tmin_it;
    const double span = *tmax_it - t0;
    if (!(span > 0.0)) throw std::invalid_argument("fit_exponential: times must not all coincide");
    if (max_tau <= 0.0) max_tau = span;
    const double min_tau = std::min(1.0, 0.5 * max_tau);

    std::vector<double> s(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) s[i] = t[i] - t0;

    // Grid seed over log tau.
    double best_tau = min_tau;
    LinearPart best;
    for (const double tau : log_spaced(min_tau, max_tau, kTauGridPoints)) {
        const auto lp = solve_linear(s, y, tau);
        if (lp.rss < best.rss) {
            best = lp;
            best_tau = tau;
        }
    }

    // Fit in shifted time: b is the decaying part's size at the first sample.
    auto pack = [&](double a, double b, double tau, double rss) {
        LifetimeFit f;
        f.A = a;
        f.B = b * std::exp(t0 / tau);
        f.tau = tau;
        f.residual = std::sqrt(rss / static_cast<double>(t.size()));
        f.decay_detected = b >= kDecayThreshold;
        f.span = span;
        return f;
    };
    if (std::abs(best.b) < kDecayThreshold) return pack(best.a, best.b, best_tau, best.rss);

    // Gauss-Newton on (a, b, log tau) with step halving.
    double a = best.a, b = best.b, u = std::log(best_tau);
    double rss = best.rss;
    const double scale = std::max(1e-300, std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
    for (int iter = 0; iter < kMaxGaussNewtonIterations; ++iter) {
        const double tau = std::exp(u);
        Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
        Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double e = std::exp(-s[i] / tau);
            const Eigen::Vector3d g(1.0, e, b * e * s[i] / tau);  // d model / d(a, b, u)
            const double r = y[i] - a - b * e;
            jtj += g * g.transpose();
            jtr += g * r;
        }
        const Eigen::Vector3d step = jtj.ldlt().solve(jtr);
        if (!step.allFinite()) break;
        double lambda = 1.0;
        bool improved = false;
        for (int h = 0; h < 40; ++h, lambda *= 0.5) {
            const double na = a + lambda * step[0], nb = b + lambda * step[1], nu = u + lambda * step[2];
            const double nrss = rss_of(s, y, na, nb, std::exp(nu));
            if (nrss <= rss) {
                const double change = rss - nrss;
                a = na;
                b = nb;
                u = nu;
                rss = nrss;
                improved = true;
                if (change <= 1e-15 * scale && std::abs(lambda * step[2]) < 1e-10) {
                    return pack(a, b, std::exp(u), rss);
                }
                break;
            }
        }
        if (!improved || std::abs(step[2]) < 1e-12) return pack(a, b, std::exp(u), rss);
    }
    throw FitError("fit_exponential did not converge", pack(a, b, std::exp(u), rss));
}

LifetimeFit fit_lifetime(std::span<const double> t, std::span<const double> y, double max_tau, int correlation) {
    if (correlation < 1) throw std::invalid_argument("correlation length must be positive");
    LifetimeFit fit;
    try {
        fit = fit_exponential(t, y, max_tau);
    } catch (const FitError& e) {
        fit = e.best_so_far();
    }
    const double n = static_cast<double>(y.size());
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double rss_const = 0.0;
    for (double v : y) rss_const += (v - mean) * (v - mean);
    const double rss_exp = fit.residual * fit.residual * n;
    const double n_eff = std::max(1.0, n / correlation);
    const bool supported = rss_exp > 0.0 ? n_eff * std::log(rss_const / rss_exp) > 2.0 * std::log(n_eff)
                                         : rss_const > 0.0;
    if (supported) return fit;
    LifetimeFit flat;
    flat.A = mean;
    flat.B = 0.0;
    flat.tau = std::numeric_limits<double>::infinity();
    flat.residual = std::sqrt(rss_const / n);
    flat.decay_detected = false;
    flat.span = fit.span;
    return flat;
}

PowerLawFit fit_powerlaw(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_powerlaw: x and y lengths differ");
    if (x.size() < 3) throw std::invalid_argument("fit_powerlaw needs at least 3 points");
    const std::size_t n = x.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::domain_error("fit_powerlaw needs positive inputs");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw std::domain_error("fit_powerlaw needs distinct x values");
    PowerLawFit f;
    f.exponent = sxy / sxx;
    f.prefactor = std::exp(my - f.exponent * mx);
    const double rss = std::max(0.0, syy - f.exponent * sxy);
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - rss / syy, 0.0, 1.0) : 1.0;
    f.exponent_stderr = n > 2 ? std::sqrt(rss / static_cast<double>(n - 2) / sxx) : 0.0;
    return f;
}

std::vector<double> fluctuation_profile(const Trajectory& traj, int window, double from, double to) {
    if (traj.records.empty() || traj.records.front().p1.empty()) {
        throw std::invalid_argument("fluctuation_profile needs p1 records");
    }
    if (traj.records.size() < static_cast<std::size_t>(window)) {
        throw std::invalid_argument("trajectory shorter than the rolling window");
    }
    const int n = static_cast<int>(traj.records.front().p1.size());
    std::vector<double> out(n, 0.0);
    for (int j = 0; j < n; ++j) {
        const auto series = traj.p1_series(j);
        const auto sd = rolling_std(series, window);
        double acc = 0.0;
        long count = 0;
        for (std::size_t i = 0; i < sd.size(); ++i) {
            const double t_end = traj.times[i + window - 1];
            if (t_end + 1e-9 >= from && t_end <= to + 1e-9) {
                acc += sd[i];
                ++count;
            }
        }
        if (count == 0) throw std::invalid_argument("no rolling window ends inside the averaging interval");
        out[j] = acc / count;
    }
    return out;
}

FluctuationSeries neighbor_fluctuations(const Trajectory& traj, int window) {
    if (traj.records.empty()) throw std::invalid_argument("empty trajectory");
    const int n = static_cast<int>(traj.records.front().p1.size());
    if (n < 3) throw std::invalid_argument("neighbor fluctuations need at least 3 sites");
    const auto left = rolling_std(traj.p1_series(n / 2 - 1), window);
    const auto right = rolling_std(traj.p1_series(n / 2 + 1), window);
    FluctuationSeries out;
    for (std::size_t i = 0; i < left.size(); ++i) {
        out.times.push_back(traj.times[i + window - 1]);
        out.values.push_back(0.5 * (left[i] + right[i]));
    }
    return out;
}

namespace {

Trajectory breather_trajectory(const BreatherConfig& config, double epsilon, const InitialState& init) {
    EvolutionConfig ev;
    ev.rule = config.base;
    ev.num_sites = config.num_sites;
    ev.total_time = config.total_time;
    ev.dt = config.dt;
    ev.initial_state = init;
    if (epsilon > 0.0) ev.perturbation = Perturbation{config.perturbation, epsilon};
    ev.measurement_stride = 1.0;
    return run(ev, MeasurementSet::one_point_only());
}

// Every output of the rolling std already spans one full window, so the
// partial-window transient never enters the fit.
LifetimeFit fit_fluctuations(const FluctuationSeries& f, int window, double total_time) {
    return fit_lifetime(f.times, f.values, total_time, window);
}

}  // namespace

ScanPoint breather_lifetime(const BreatherConfig& config, double epsilon) {
    if (epsilon < 0.0) throw std::domain_error("epsilon must be non-negative");
    const int w = config.effective_window();
    const auto traj = breather_trajectory(config, epsilon, InitialState::center_101(config.num_sites));
    ScanPoint p;
    p.epsilon = epsilon;
    p.fluctuations = neighbor_fluctuations(traj, w);
    p.fit = fit_fluctuations(p.fluctuations, w, config.total_time);
    return p;
}

std::vector<ScanPoint> perturbation_scan(std::span<const double> epsilons, const BreatherConfig& config, int workers) {
    std::vector<ScanPoint> out(epsilons.size());
    parallel_for(epsilons.size(), workers, [&](std::size_t i) { out[i] = breather_lifetime(config, epsilons[i]); });
    return out;
}

InitialState imperfect_breather(int num_sites, double delta, double phi) {
    if (!(delta > 0.0 && delta <= 1.0)) throw std::domain_error("delta must lie in (0, 1]");
    auto init = InitialState::center_101(num_sites);
    init.product[num_sites / 2 - 1] = QubitSpec{delta, phi};
    init.product[num_sites / 2 + 1] = QubitSpec{delta, phi};
    return init;
}

std::vector<InitScanPoint> init_perturbation_scan(std::span<const double> deltas, std::span<const double> phis,
                                                  const BreatherConfig& config, int workers) {
    std::vector<std::pair<double, double>> grid;
    for (double d : deltas) {
        for (double p : phis) grid.emplace_back(d, p);
    }
    const int w = config.effective_window();
    const double T = config.total_time;
    const double width = std::min(100.0, 0.1 * T);
    const double early_from = std::min(100.0, 0.1 * T);
    std::vector<InitScanPoint> out(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t i) {
        const auto [delta, phi] = grid[i];
        const auto traj = breather_trajectory(config, 0.0, imperfect_breather(config.num_sites, delta, phi));
        InitScanPoint p;
        p.delta = delta;
        p.phi = phi;
        p.fluctuations = neighbor_fluctuations(traj, w);
        p.fit = fit_fluctuations(p.fluctuations, w, T);
        p.amplitude_early = window_mean(p.fluctuations.times, p.fluctuations.values, early_from, early_from + width);
        p.amplitude_late = window_mean(p.fluctuations.times, p.fluctuations.values, T - width, T);
        out[i] = std::move(p);
    });
    return out;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log_spaced needs 0 < lo <= hi");
    if (n < 1) throw std::invalid_argument("log_spaced needs at least one point");
    if (n == 1) return {lo};
    std::vector<double> out(n);
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * i / (n - 1));
    out.back() = hi;
    return out;
}

double window_mean(std::span<const double> times, std::span<const double> values, double from, double to) {
    double acc = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < times.size() && i < values.size(); ++i) {
        if (times[i] + 1e-9 >= from && times[i] <= to + 1e-9) {
            acc += values[i];
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("no samples inside the averaging window");
    return acc / count;
}

}  // namespace qca
