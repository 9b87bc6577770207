#pragma once

// Entangled-breather experiments: localization profiles, lifetime fits and
// robustness scans under Hamiltonian and initialization perturbations.

#include <span>
#include <stdexcept>
#include <vector>

#include "qca/evolve.hpp"

namespace qca {

/// |B| below this means no measurable decay.
inline constexpr double kDecayThreshold = 1e-3;

/// y = A + B exp(-t / tau).
struct LifetimeFit {
    double A = 0.0;
    double B = 0.0;
    double tau = 0.0;
    double residual = 0.0;  // RMS
    bool decay_detected = false;
    double span = 0.0;  // t_max - t_min of the fitted data

    /// Lifetime beyond the fitted time span (or no decay at all).
    bool exceeds_span() const { return !decay_detected || tau > span; }
    double evaluate(double t) const;
};

/// tau = prefactor * x^exponent.
struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double r_squared = 0.0;
    double exponent_stderr = 0.0;
};

class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, LifetimeFit best) : std::runtime_error(what), best_(best) {}
    const LifetimeFit& best_so_far() const { return best_; }

private:
    LifetimeFit best_;
};

/// Least squares for A + B exp(-t/tau): log-spaced tau grid over
/// [1, max_tau] (default: the data's time span), then Gauss-Newton refinement.
LifetimeFit fit_exponential(std::span<const double> t, std::span<const double> y, double max_tau = 0.0);

/// fit_exponential followed by a model check against the constant fit y = A.
/// Neighboring points are treated as correlated over `correlation` samples, so
/// the Bayesian information criterion uses n / correlation effective points.
/// An unsupported decay is reported as B = 0 with an infinite tau.
LifetimeFit fit_lifetime(std::span<const double> t, std::span<const double> y, double max_tau, int correlation);

/// Linear regression of log(y) on log(x).
PowerLawFit fit_powerlaw(std::span<const double> x, std::span<const double> y);

/// Rolling standard deviation of the p1 series of every site (window in
/// samples), averaged over the windows that end inside [from, to].
std::vector<double> fluctuation_profile(const Trajectory& traj, int window, double from, double to);

struct BreatherConfig {
    int num_sites = 19;
    double total_time = 1000.0;
    double dt = 0.1;
    int window = 0;  // rolling window in time units; 0 means L
    RuleSpec base = make_analog_f_rule(4);
    RuleSpec perturbation = make_analog_f_rule(26);

    int effective_window() const { return window > 0 ? window : num_sites; }
};

/// Delta<P1> at the center's two neighbors: the rolling standard deviation
/// of each site's p1 series, averaged over the two sites. Element i covers
/// samples [i, i + window) and is stamped with the window's last time.
struct FluctuationSeries {
    std::vector<double> times;
    std::vector<double> values;
};

FluctuationSeries neighbor_fluctuations(const Trajectory& traj, int window);

struct ScanPoint {
    double epsilon = 0.0;
    LifetimeFit fit;
    FluctuationSeries fluctuations;
};

/// Evolves base + epsilon * perturbation from the central |101> state and
/// fits the neighbor fluctuations.
ScanPoint breather_lifetime(const BreatherConfig& config, double epsilon);

/// One point per epsilon; evaluated with the runner's worker count.
std::vector<ScanPoint> perturbation_scan(std::span<const double> epsilons, const BreatherConfig& config,
                                         int workers = 1);

/// Central |101> with the |1> sites replaced by (delta, phi) copies.
InitialState imperfect_breather(int num_sites, double delta, double phi);

struct InitScanPoint {
    double delta = 0.0;
    double phi = 0.0;
    double amplitude_early = 0.0;  // mean neighbor fluctuation in the first late window
    double amplitude_late = 0.0;   // ... in the final window
    LifetimeFit fit;
    FluctuationSeries fluctuations;
};

/// Evolves imperfect initial states under the unperturbed base rule. The
/// early/late amplitudes average the neighbor fluctuations over the windows
/// [100, 200] and [T - 100, T] (scaled down for shorter runs).
std::vector<InitScanPoint> init_perturbation_scan(std::span<const double> deltas, std::span<const double> phis,
                                                  const BreatherConfig& config, int workers = 1);

/// Log-spaced grid of n values over [lo, hi].
std::vector<double> log_spaced(double lo, double hi, int n);

/// Mean of `values` whose time lies in [from, to].
double window_mean(std::span<const double> times, std::span<const double> values, double from, double to);

}  // namespace qca
