#pragma once

// State-derived observables: entropies, mutual-information networks and their
// complexity metrics, bond entropy, and rolling fluctuation statistics.
// Entropies use log base 2.

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "qca/state.hpp"

namespace qca {

/// Weighted adjacency matrix of pairwise mutual information, zero diagonal.
struct MINetwork {
    Eigen::MatrixXd weights;

    int size() const { return static_cast<int>(weights.rows()); }
    double operator()(int j, int k) const { return weights(j, k); }
    /// Throws unless symmetric, zero-diagonal and within [0, 1] (1e-10 slack).
    void validate() const;
};

/// Eigenvalues of a density matrix with [-1e-10, 0) clamped to 0; throws on
/// anything more negative.
std::vector<double> density_spectrum(const CMatrix& rho);

double von_neumann_entropy(const CMatrix& rho);
/// Order-alpha Renyi entropy; alpha == 1 is a domain error (use von Neumann).
double renyi_entropy(const CMatrix& rho, double alpha);
/// Dispatches to von Neumann for alpha == 1, Renyi otherwise.
double entropy(const CMatrix& rho, double alpha);

inline double von_neumann_entropy(const DensityMatrix& rho) { return von_neumann_entropy(rho.matrix); }
inline double renyi_entropy(const DensityMatrix& rho, double alpha) { return renyi_entropy(rho.matrix, alpha); }

/// M_jk = |s_j + s_k - s_jk| / 2 from precomputed one- and two-site densities
/// (pairs in the order produced by pair_densities). Values below 1e-12 are
/// reported as 0.
MINetwork mutual_information_from_densities(std::span<const Matrix2> singles,
                                            std::span<const Eigen::Matrix4cd> pairs, double alpha = 1.0);
MINetwork mutual_information_matrix(const StateVector& state, double alpha = 1.0);

/// Tr(M^3) / sum_{j != k} [M^2]_jk; 0 for a disconnected network.
double clustering(const MINetwork& net);

/// (1/L) sum_j sum_k M_jk^2 / (sum_k M_jk)^2 with the denominator regularized
/// by a 1e-16 imaginary part (real part taken).
double disparity(const MINetwork& net);

std::vector<double> node_strengths(const MINetwork& net);

struct Threshold {
    bool use_median = true;
    double value = 0.0;

    static Threshold median() { return {true, 0.0}; }
    static Threshold fixed(double q) { return {false, q}; }
};

struct PathLength {
    double average = std::numeric_limits<double>::infinity();
    double connected_fraction = 0.0;
    double threshold = 0.0;
};

/// Binarizes links with M_jk >= q (and M_jk > 0), then averages BFS distances
/// over connected ordered pairs. A fully disconnected graph reports +inf.
PathLength path_length(const MINetwork& net, Threshold threshold = Threshold::median());

/// Median of the upper-triangle link weights.
double median_link_weight(const MINetwork& net);

struct HistogramBin {
    double lower = 0.0;
    double upper = 0.0;
    long count = 0;
    double probability = 0.0;  // count / total positive samples
    double density = 0.0;      // per unit node strength
    double log_density = 0.0;  // per unit ln(node strength)
};

struct Histogram {
    std::vector<HistogramBin> bins;  // surviving bins only
    long total_samples = 0;
    bool empty = true;
};

/// Log-spaced bins over [min positive sample, max sample]; densities are
/// normalized over all positive samples before bins with <= min_count counts
/// are dropped.
Histogram node_strength_density(std::span<const double> samples, int num_bins = 32, long min_count = 75);

/// Sites [0, cut) form the left half; for odd L the cut sits between
/// (L-1)/2 and (L+1)/2.
int central_cut(int num_sites);

/// -log2 Tr(rho_left^2) at the central cut.
double bond_entropy_renyi2(const StateVector& state);

/// Sample (n-1) standard deviation over trailing windows of `window` samples.
/// Output element i covers input samples [i, i + window); the first full
/// window ends at input index window - 1.
std::vector<double> rolling_std(std::span<const double> series, int window);

struct MeasurementSet {
    bool one_point = true;     // sigma_z, sigma_x, p1
    bool site_entropy = true;
    bool network = false;      // MI network and derived metrics
    bool bond = false;
    double alpha = 1.0;
    Threshold path_threshold = Threshold::median();

    static MeasurementSet all() { return {true, true, true, true, 1.0, Threshold::median()}; }
    static MeasurementSet one_point_only() { return {true, false, false, false, 1.0, Threshold::median()}; }
};

struct MeasurementRecord {
    double time = 0.0;
    std::vector<double> sigma_z;
    std::vector<double> sigma_x;
    std::vector<double> p1;
    std::vector<double> site_entropy;
    std::optional<double> bond_entropy_renyi2;
    std::optional<MINetwork> mi_network;
    std::optional<double> clustering;
    std::optional<double> disparity;
    std::optional<PathLength> path_length;
    std::vector<double> node_strengths;
};

MeasurementRecord measure(const StateVector& state, double time, const MeasurementSet& what);

/// Network metrics filled in from a network (used by measure and by ensemble
/// averaging, which builds networks from averaged densities).
void fill_network_metrics(MeasurementRecord& record, MINetwork net, Threshold threshold);

}  // namespace qca
