#include "qca/measures.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qca {

namespace {

constexpr double kClampTolerance = 1e-10;
constexpr double kDisparityRegularizer = 1e-16;
// Links below this are rounding noise of the entropy sums and are set to zero.
constexpr double kMutualInformationFloor = 1e-12;

double xlog2x_sum(std::span<const double> lambdas) {
    double s = 0.0;
    for (double l : lambdas) {
        if (l > 0.0) s -= l * std::log2(l);
    }
    return s;
}

std::vector<double> spectrum2(const Matrix2& rho) {
    const double a = rho(0, 0).real();
    const double d = rho(1, 1).real();
    const double gap = std::sqrt((a - d) * (a - d) + 4.0 * std::norm(rho(0, 1)));
    std::vector<double> l{0.5 * (a + d - gap), 0.5 * (a + d + gap)};
    for (double& v : l) {
        if (v < -kClampTolerance) throw std::domain_error("density matrix has a negative eigenvalue");
        v = std::max(v, 0.0);
    }
    return l;
}

double entropy2x2(const Matrix2& rho, double alpha) {
    if (alpha == 2.0) return -std::log2(std::max(rho.cwiseAbs2().sum(), 1e-300));
    const auto l = spectrum2(rho);
    if (alpha == 1.0) return xlog2x_sum(l);
    return renyi_entropy(CMatrix(rho), alpha);
}

double entropy4x4(const Eigen::Matrix4cd& rho, double alpha) {
    if (alpha == 2.0) return -std::log2(std::max(rho.cwiseAbs2().sum(), 1e-300));
    return entropy(CMatrix(rho), alpha);
}

}  // namespace

void MINetwork::validate() const {
    const int n = size();
    if (weights.cols() != n) throw std::invalid_argument("MI network must be square");
    for (int j = 0; j < n; ++j) {
        if (weights(j, j) != 0.0) throw std::invalid_argument("MI network diagonal must be zero");
        for (int k = 0; k < n; ++k) {
            const double w = weights(j, k);
            if (w < -kClampTolerance || w > 1.0 + kClampTolerance) {
                throw std::invalid_argument("MI weight outside [0, 1]");
            }
            if (std::abs(w - weights(k, j)) > kClampTolerance) throw std::invalid_argument("MI network not symmetric");
        }
    }
}

std::vector<double> density_spectrum(const CMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(rho, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    std::vector<double> out(static_cast<std::size_t>(rho.rows()));
    for (Eigen::Index i = 0; i < rho.rows(); ++i) {
        double v = solver.eigenvalues()[i];
        if (v < -kClampTolerance) throw std::domain_error("density matrix has a negative eigenvalue");
        out[static_cast<std::size_t>(i)] = std::max(v, 0.0);
    }
    return out;
}

double von_neumann_entropy(const CMatrix& rho) { return xlog2x_sum(density_spectrum(rho)); }

double renyi_entropy(const CMatrix& rho, double alpha) {
    if (alpha < 0.0) throw std::domain_error("Renyi order must be non-negative");
    if (alpha == 1.0) throw std::domain_error("Renyi order 1 is the von Neumann entropy");
    const auto l = density_spectrum(rho);
    double tr = 0.0;
    for (double v : l) {
        if (v > 0.0) tr += std::pow(v, alpha);
    }
    return std::log2(tr) / (1.0 - alpha);
}

double entropy(const CMatrix& rho, double alpha) {
    return alpha == 1.0 ? von_neumann_entropy(rho) : renyi_entropy(rho, alpha);
}

MINetwork mutual_information_from_densities(std::span<const Matrix2> singles,
                                            std::span<const Eigen::Matrix4cd> pairs, double alpha) {
    const int n = static_cast<int>(singles.size());
    if (pairs.size() != static_cast<std::size_t>(n) * (n - 1) / 2) {
        throw std::invalid_argument("pair density count does not match the number of sites");
    }
    std::vector<double> s(n);
    for (int j = 0; j < n; ++j) s[j] = entropy2x2(singles[j], alpha);
    MINetwork net{Eigen::MatrixXd::Zero(n, n)};
    std::size_t p = 0;
    for (int j = 0; j < n; ++j) {
        for (int k = j + 1; k < n; ++k, ++p) {
            double m = 0.5 * std::abs(s[j] + s[k] - entropy4x4(pairs[p], alpha));
            if (m < kMutualInformationFloor) m = 0.0;
            net.weights(j, k) = m;
            net.weights(k, j) = m;
        }
    }
    return net;
}

MINetwork mutual_information_matrix(const StateVector& state, double alpha) {
    const auto singles = single_site_densities(state);
    const auto pairs = pair_densities(state);
    return mutual_information_from_densities(singles, pairs, alpha);
}

double clustering(const MINetwork& net) {
    const Eigen::MatrixXd m2 = net.weights * net.weights;
    const double numerator = (m2 * net.weights).trace();
    const double denominator = m2.sum() - m2.trace();
    if (denominator < 1e-300) return 0.0;
    return numerator / denominator;
}

double disparity(const MINetwork& net) {
    const int n = net.size();
    if (n == 0) return 0.0;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        const double strength = net.weights.row(j).sum();
        const double squares = net.weights.row(j).squaredNorm();
        const double denom = strength * strength;
        // Re(squares / (denom + i eps))
        acc += squares * denom / (denom * denom + kDisparityRegularizer * kDisparityRegularizer);
    }
    return acc / n;
}

std::vector<double> node_strengths(const MINetwork& net) {
    std::vector<double> g(net.size());
    for (int j = 0; j < net.size(); ++j) g[j] = net.weights.row(j).sum();
    return g;
}

double median_link_weight(const MINetwork& net) {
    const int n = net.size();
    std::vector<double> w;
    for (int j = 0; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) w.push_back(net.weights(j, k));
    }
    if (w.empty()) return 0.0;
    std::sort(w.begin(), w.end());
    const std::size_t mid = w.size() / 2;
    return w.size() % 2 ? w[mid] : 0.5 * (w[mid - 1] + w[mid]);
}

PathLength path_length(const MINetwork& net, Threshold threshold) {
    const int n = net.size();
    PathLength out;
    out.threshold = threshold.use_median ? median_link_weight(net) : threshold.value;
    std::vector<std::vector<int>> adj(n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            const double w = net.weights(j, k);
            if (j != k && w > 0.0 && w >= out.threshold) adj[j].push_back(k);
        }
    }
    long connected = 0;
    double total = 0.0;
    std::vector<int> dist(n);
    for (int src = 0; src < n; ++src) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[src] = 0;
        std::deque<int> queue{src};
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int v : adj[u]) {
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for (int dst = 0; dst < n; ++dst) {
            if (dst != src && dist[dst] > 0) {
                ++connected;
                total += dist[dst];
            }
        }
    }
    const long ordered_pairs = static_cast<long>(n) * (n - 1);
    if (connected > 0) {
        out.average = total / static_cast<double>(connected);
        out.connected_fraction = static_cast<double>(connected) / static_cast<double>(ordered_pairs);
    }
    return out;
}

Histogram node_strength_density(std::span<const double> samples, int num_bins, long min_count) {
    if (samples.empty()) throw std::invalid_argument("node_strength_density needs samples");
    if (num_bins < 1) throw std::invalid_argument("num_bins must be positive");
    std::vector<double> positive;
    for (double g : samples) {
        if (g < 0.0) throw std::domain_error("node strengths must be non-negative");
        if (g > 0.0) positive.push_back(g);
    }
    Histogram out;
    out.total_samples = static_cast<long>(positive.size());
    if (positive.empty()) return out;

    const auto [lo_it, hi_it] = std::minmax_element(positive.begin(), positive.end());
    const double lo = *lo_it, hi = *hi_it;
    const double total = static_cast<double>(positive.size());

    std::vector<HistogramBin> bins;
    if (lo == hi) {
        bins.push_back({lo, hi, out.total_samples, 1.0, 1.0, 1.0});
    } else {
        const double log_lo = std::log(lo), log_hi = std::log(hi);
        const double step = (log_hi - log_lo) / num_bins;
        bins.resize(num_bins);
        for (int b = 0; b < num_bins; ++b) {
            bins[b].lower = std::exp(log_lo + b * step);
            bins[b].upper = b + 1 == num_bins ? hi : std::exp(log_lo + (b + 1) * step);
        }
        bins.front().lower = lo;
        for (double g : positive) {
            int b = static_cast<int>((std::log(g) - log_lo) / step);
            b = std::clamp(b, 0, num_bins - 1);
            ++bins[b].count;
        }
        for (auto& bin : bins) {
            bin.probability = bin.count / total;
            bin.density = bin.probability / (bin.upper - bin.lower);
            bin.log_density = bin.probability / step;
        }
    }
    for (const auto& bin : bins) {
        if (bin.count > min_count) out.bins.push_back(bin);
    }
    out.empty = out.bins.empty();
    return out;
}

int central_cut(int num_sites) {
    if (num_sites < 2) throw std::invalid_argument("bond entropy needs at least two sites");
    return (num_sites + 1) / 2;
}

double bond_entropy_renyi2(const StateVector& state) {
    const double purity = left_block_purity(state, central_cut(state.num_sites()));
    return -std::log2(std::min(purity, 1.0));
}

std::vector<double> rolling_std(std::span<const double> series, int window) {
    if (window < 2) throw std::invalid_argument("rolling window needs at least two samples");
    std::vector<double> out;
    if (series.size() < static_cast<std::size_t>(window)) return out;
    out.reserve(series.size() - window + 1);
    for (std::size_t start = 0; start + window <= series.size(); ++start) {
        const auto win = series.subspan(start, window);
        const double mean = std::accumulate(win.begin(), win.end(), 0.0) / window;
        double ss = 0.0;
        for (double v : win) ss += (v - mean) * (v - mean);
        out.push_back(std::sqrt(ss / (window - 1)));
    }
    return out;
}

void fill_network_metrics(MeasurementRecord& record, MINetwork net, Threshold threshold) {
    record.clustering = clustering(net);
    record.disparity = disparity(net);
    record.path_length = path_length(net, threshold);
    record.node_strengths = node_strengths(net);
    record.mi_network = std::move(net);
}

MeasurementRecord measure(const StateVector& state, double time, const MeasurementSet& what) {
    MeasurementRecord rec;
    rec.time = time;
    const int n = state.num_sites();
    std::vector<Matrix2> singles;
    if (what.one_point || what.site_entropy || what.network) singles = single_site_densities(state);
    if (what.one_point) {
        rec.sigma_z.resize(n);
        rec.sigma_x.resize(n);
        rec.p1.resize(n);
        for (int j = 0; j < n; ++j) {
            const auto& rho = singles[j];
            rec.sigma_z[j] = (rho(0, 0) - rho(1, 1)).real();
            rec.sigma_x[j] = 2.0 * rho(0, 1).real();
            rec.p1[j] = std::clamp(rho(1, 1).real(), 0.0, 1.0);
        }
    }
    if (what.site_entropy) {
        rec.site_entropy.resize(n);
        for (int j = 0; j < n; ++j) rec.site_entropy[j] = von_neumann_entropy(CMatrix(singles[j]));
    }
    if (what.network) {
        const auto pairs = pair_densities(state);
        fill_network_metrics(rec, mutual_information_from_densities(singles, pairs, what.alpha), what.path_threshold);
    }
    if (what.bond && n >= 2) rec.bond_entropy_renyi2 = bond_entropy_renyi2(state);
    return rec;
}

}  // namespace qca
