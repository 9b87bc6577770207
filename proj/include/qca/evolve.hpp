#pragma once

// Time evolution: digital layered sweeps and analog layered Trotter
// propagation with exact in-layer exponentials.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qca/measures.hpp"
#include "qca/rules.hpp"
#include "qca/state.hpp"

namespace qca {

/// Neighbor legs of `site` for radius r, read left to right. Out-of-range legs
/// are pinned virtual sites for fixed boundaries and wrap for periodic ones.
std::vector<NeighborLeg> neighborhood_legs(int num_sites, int site, int radius, BoundarySpec boundary);

/// exp(-i theta h) for a Hermitian 2x2 h.
Matrix2 exp_hermitian2(const Matrix2& h, double theta);

class DigitalPropagator {
public:
    DigitalPropagator(const RuleSpec& rule, int num_sites);

    /// Even-site sweep, then odd-site sweep, each left to right.
    void step(StateVector& state) const;

private:
    struct Batch {
        std::vector<int> targets;
        std::vector<std::vector<NeighborLeg>> legs;
    };

    int num_sites_;
    ConditionedOp op_;
    std::vector<std::vector<NeighborLeg>> legs_;
    std::vector<Batch> sweeps_;  // mutually commuting runs, applied in order
};

void digital_step(StateVector& state, const RuleSpec& rule);

enum class Splitting { lie, strang };

struct Perturbation {
    RuleSpec rule;
    double epsilon = 0.0;
};

/// Per-configuration weights of base + epsilon * perturbation.
std::vector<double> perturbed_weights(const RuleSpec& base, const Perturbation& pert);

/// Layered propagator for H = sum_j h_j (x) sum_c w_c P_c(neighbors of j).
/// Sites are grouped into layers of mutually commuting neighborhood terms
/// (stride 2 for r = 1, stride 3 for r = 2; periodic leftovers get their own
/// layer). Strang splitting applies layers 0..n-2 for dt/2, layer n-1 for dt,
/// then layers n-2..0 for dt/2.
class AnalogPropagator {
public:
    AnalogPropagator(std::vector<double> weights, const Matrix2& activation, int radius, BoundarySpec boundary,
                     int num_sites, double dt, Splitting splitting = Splitting::strang);

    static AnalogPropagator from_rule(const RuleSpec& rule, int num_sites, double dt,
                                      Splitting splitting = Splitting::strang,
                                      const std::optional<Perturbation>& perturbation = std::nullopt);

    void step(StateVector& state) const { advance(state, 1); }
    /// `steps` consecutive steps; adjacent half-step layers are fused.
    void advance(StateVector& state, long steps) const;

    double dt() const { return dt_; }
    const std::vector<std::vector<int>>& layers() const { return layers_; }

private:
    void apply_layer(StateVector& state, std::size_t layer, const ConditionedOp& op) const;

    int num_sites_;
    double dt_;
    Splitting splitting_;
    std::vector<std::vector<int>> layers_;
    std::vector<std::vector<NeighborLeg>> legs_;  // per site
    std::vector<std::vector<std::vector<NeighborLeg>>> layer_legs_;  // per layer, per target
    ConditionedOp full_;  // exp(-i dt H_j)
    ConditionedOp half_;  // exp(-i dt/2 H_j)
};

void analog_step(StateVector& state, const RuleSpec& rule, double dt, Splitting splitting = Splitting::strang);

/// Commuting layers used by the analog propagator.
std::vector<std::vector<int>> commuting_layers(int num_sites, int radius, BoundarySpec boundary);

struct InitialState {
    std::vector<QubitSpec> product;            // used when random_seed is empty
    std::optional<std::uint64_t> random_seed;  // Gaussian random state

    StateVector build(int num_sites) const;

    static InitialState bits(const std::vector<int>& b);
    /// Single |1> at site floor(L/2), rest |0>.
    static InitialState single_center(int num_sites);
    /// |1> at floor(L/2) - 1 and floor(L/2) + 1, rest |0>.
    static InitialState center_101(int num_sites);
    static InitialState random(std::uint64_t seed) { return {{}, seed}; }
};

struct EvolutionConfig {
    RuleSpec rule;
    int num_sites = 19;
    double total_time = 0.0;   // time units
    double dt = 0.1;           // analog substep
    InitialState initial_state;
    std::optional<Perturbation> perturbation;
    double measurement_stride = 1.0;  // time units between samples
    double sample_from = 0.0;         // first sampled time (earlier samples skipped)
    Splitting splitting = Splitting::strang;

    /// Throws std::invalid_argument describing the first violated constraint.
    void validate() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<MeasurementRecord> records;

    /// Per-time series of p1 / sigma_z at one site.
    std::vector<double> p1_series(int site) const;
    std::vector<double> sigma_z_series(int site) const;
};

using SampleCallback = std::function<void(double time, const StateVector& state)>;

/// Evolves the initial state and calls `on_sample` at t = 0, stride, 2 stride,
/// ... up to total_time (skipping t < sample_from). Returns the final state.
StateVector evolve(const EvolutionConfig& config, const SampleCallback& on_sample);

Trajectory run(const EvolutionConfig& config, const MeasurementSet& what = {});

/// sum over bonds of <sigma^z sigma^z>, including bonds to pinned virtual
/// sites (fixed) or the wrap bond (periodic).
double zz_bond_sum(const StateVector& state, BoundarySpec boundary);

}  // namespace qca
