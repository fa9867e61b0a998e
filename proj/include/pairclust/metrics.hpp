#ifndef PAIRCLUST_METRICS_HPP
#define PAIRCLUST_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace pairclust {

/// Cluster-by-class count matrix. Rows are clusters and may be entirely zero
/// (empty clusters); columns are ground-truth classes.
struct ContingencyTable {
    std::size_t k = 0; // clusters
    std::size_t c = 0; // classes
    std::vector<std::int64_t> counts; // row-major k x c
    std::int64_t n = 0;

    std::int64_t& at(std::size_t cluster, std::size_t cls) { return counts[cluster * c + cls]; }
    std::int64_t at(std::size_t cluster, std::size_t cls) const { return counts[cluster * c + cls]; }

    std::int64_t row_total(std::size_t cluster) const {
        std::int64_t s = 0;
        for (std::size_t b = 0; b < c; ++b) s += at(cluster, b);
        return s;
    }
    std::int64_t col_total(std::size_t cls) const {
        std::int64_t s = 0;
        for (std::size_t a = 0; a < k; ++a) s += at(a, cls);
        return s;
    }
};

inline ContingencyTable contingency(const std::vector<std::size_t>& assignments,
                                    const std::vector<std::size_t>& labels,
                                    std::size_t k, std::size_t c) {
    if (assignments.size() != labels.size())
        throw std::invalid_argument("contingency: length mismatch");
    ContingencyTable t;
    t.k = k;
    t.c = c;
    t.counts.assign(k * c, 0);
    for (std::size_t s = 0; s < assignments.size(); ++s) {
        if (assignments[s] >= k || labels[s] >= c)
            throw std::invalid_argument("contingency: index out of bounds");
        ++t.at(assignments[s], labels[s]);
        ++t.n;
    }
    return t;
}

/// Fraction of samples in the majority class of their cluster.
inline double purity(const ContingencyTable& t) {
    if (t.n < 1) throw std::invalid_argument("purity: empty table");
    std::int64_t correct = 0;
    for (std::size_t a = 0; a < t.k; ++a) {
        std::int64_t mx = 0;
        for (std::size_t b = 0; b < t.c; ++b) mx = std::max(mx, t.at(a, b));
        correct += mx;
    }
    return static_cast<double>(correct) / static_cast<double>(t.n);
}

/// I(clusters; classes) / sqrt(H(clusters) * H(classes)), natural logs,
/// 0*log0 := 0. Zero when either marginal entropy is zero.
inline double nmi(const ContingencyTable& t) {
    if (t.n < 1) throw std::invalid_argument("nmi: empty table");
    const double n = static_cast<double>(t.n);
    double h_cluster = 0.0, h_class = 0.0, mi = 0.0;
    std::vector<double> row(t.k), col(t.c);
    for (std::size_t a = 0; a < t.k; ++a) {
        row[a] = static_cast<double>(t.row_total(a));
        if (row[a] > 0) h_cluster -= (row[a] / n) * std::log(row[a] / n);
    }
    for (std::size_t b = 0; b < t.c; ++b) {
        col[b] = static_cast<double>(t.col_total(b));
        if (col[b] > 0) h_class -= (col[b] / n) * std::log(col[b] / n);
    }
    if (h_cluster <= 0.0 || h_class <= 0.0) return 0.0;
    for (std::size_t a = 0; a < t.k; ++a)
        for (std::size_t b = 0; b < t.c; ++b) {
            const auto nab = static_cast<double>(t.at(a, b));
            if (nab > 0) mi += (nab / n) * std::log(n * nab / (row[a] * col[b]));
        }
    double v = mi / std::sqrt(h_cluster * h_class);
    return std::min(1.0, std::max(0.0, v)); // clip rounding spill at the ends
}

/// Number of clusters holding at least threshold_fraction of all samples.
inline std::size_t dominant_clusters(const ContingencyTable& t, double threshold_fraction) {
    if (threshold_fraction <= 0.0 || threshold_fraction >= 1.0)
        throw std::invalid_argument("dominant_clusters: threshold must be in (0,1)");
    std::size_t count = 0;
    const double cutoff = threshold_fraction * static_cast<double>(t.n);
    for (std::size_t a = 0; a < t.k; ++a)
        if (static_cast<double>(t.row_total(a)) >= cutoff) ++count;
    return count;
}

namespace detail {

/// Hungarian algorithm (potential form) on a square cost matrix, minimizing.
/// Returns the column assigned to each row. O(n^3).
inline std::vector<std::size_t> hungarian_min(const std::vector<double>& cost, std::size_t n) {
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, INF);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = INF;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= n; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

} // namespace detail

struct AssignmentResult {
    /// cluster -> class; c (or more) means the cluster is unlabeled padding.
    std::vector<std::size_t> cluster_to_class;
    double accuracy = 0.0;
};

/// Injective cluster-to-class assignment maximizing the total assigned count
/// (Kuhn-Munkres on negated counts). Classes are zero-padded when k > c;
/// surplus clusters map to padding columns and contribute nothing.
inline AssignmentResult hungarian_accuracy(const ContingencyTable& t) {
    if (t.k < t.c)
        throw std::invalid_argument("hungarian_accuracy: requires k >= c");
    if (t.n < 1) throw std::invalid_argument("hungarian_accuracy: empty table");
    const std::size_t n = t.k; // square via zero-padded class columns
    std::vector<double> cost(n * n, 0.0);
    for (std::size_t a = 0; a < t.k; ++a)
        for (std::size_t b = 0; b < t.c; ++b)
            cost[a * n + b] = -static_cast<double>(t.at(a, b));
    AssignmentResult res;
    res.cluster_to_class = detail::hungarian_min(cost, n);
    std::int64_t assigned = 0;
    for (std::size_t a = 0; a < t.k; ++a)
        if (res.cluster_to_class[a] < t.c) assigned += t.at(a, res.cluster_to_class[a]);
    res.accuracy = static_cast<double>(assigned) / static_cast<double>(t.n);
    return res;
}

/// CSV layout matching the cluster-by-class table: header row of class ids,
/// one row per cluster.
inline void write_contingency_csv(const ContingencyTable& t, std::ostream& os) {
    os << "cluster";
    for (std::size_t b = 0; b < t.c; ++b) os << ",class" << b;
    os << "\n";
    for (std::size_t a = 0; a < t.k; ++a) {
        os << a;
        for (std::size_t b = 0; b < t.c; ++b) os << "," << t.at(a, b);
        os << "\n";
    }
}

} // namespace pairclust

#endif // PAIRCLUST_METRICS_HPP
