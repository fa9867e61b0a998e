#ifndef PAIRCLUST_KMEANS_HPP
#define PAIRCLUST_KMEANS_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pairclust/network.hpp"
#include "pairclust/numeric.hpp"

namespace pairclust {

enum class KmeansMetric { Euclidean, Cosine };

struct KmeansResult {
    Matrix centroids;                     // k x d
    std::vector<std::size_t> assignments; // length n
    double inertia = 0.0;                 // best restart's objective
    std::size_t restarts_run = 0;
};

namespace detail {

inline void normalize_rows_unit(Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double* p = m.row_ptr(r);
        double norm = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) norm += p[c] * p[c];
        norm = std::sqrt(norm);
        if (norm == 0.0) throw std::invalid_argument("kmeans: zero-length vector in cosine mode");
        for (std::size_t c = 0; c < m.cols(); ++c) p[c] /= norm;
    }
}

// Euclidean mode: squared distance (the Lloyd objective). Cosine mode:
// 1 - dot of unit vectors.
inline double point_dist(const double* a, const double* b, std::size_t d, KmeansMetric metric) {
    if (metric == KmeansMetric::Euclidean) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = a[c] - b[c];
            s += diff * diff;
        }
        return s;
    }
    double dot = 0.0;
    for (std::size_t c = 0; c < d; ++c) dot += a[c] * b[c];
    return 1.0 - dot;
}

struct LloydOutcome {
    Matrix centroids;
    std::vector<std::size_t> assignments;
    double inertia;
};

inline LloydOutcome lloyd_once(const Matrix& pts, std::size_t k, KmeansMetric metric,
                               Rng& rng, std::size_t max_iters) {
    const std::size_t n = pts.rows(), d = pts.cols();

    // Forgy init: k distinct data points.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t t = 0; t < k; ++t) std::swap(idx[t], idx[t + rng.below(n - t)]);
    Matrix centroids(k, d, 0.0);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t c = 0; c < d; ++c) centroids(a, c) = pts(idx[a], c);
    if (metric == KmeansMetric::Cosine) normalize_rows_unit(centroids);

    std::vector<std::size_t> assign(n, 0), prev(n, k);
    double inertia = 0.0;
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t a = 0; a < k; ++a) {
                const double dist = point_dist(pts.row_ptr(i), centroids.row_ptr(a), d, metric);
                if (dist < best) {
                    best = dist;
                    arg = a;
                }
            }
            assign[i] = arg;
            inertia += best;
        }
        if (assign == prev) break;
        prev = assign;

        Matrix sums(k, d, 0.0);
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            double* s = sums.row_ptr(assign[i]);
            const double* p = pts.row_ptr(i);
            for (std::size_t c = 0; c < d; ++c) s[c] += p[c];
            ++sizes[assign[i]];
        }
        for (std::size_t a = 0; a < k; ++a) {
            if (sizes[a] > 0) {
                for (std::size_t c = 0; c < d; ++c)
                    centroids(a, c) = sums(a, c) / static_cast<double>(sizes[a]);
            } else {
                // empty-cluster repair: reseed at the point farthest from its centroid
                double worst = -1.0;
                std::size_t far = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double dist =
                        point_dist(pts.row_ptr(i), centroids.row_ptr(assign[i]), d, metric);
                    if (dist > worst) {
                        worst = dist;
                        far = i;
                    }
                }
                for (std::size_t c = 0; c < d; ++c) centroids(a, c) = pts(far, c);
            }
        }
        if (metric == KmeansMetric::Cosine) normalize_rows_unit(centroids);
    }
    return {std::move(centroids), std::move(assign), inertia};
}

} // namespace detail

/// Lloyd k-means with random restarts; the restart with the lowest inertia
/// wins. Cosine mode works on unit-normalized points and renormalizes
/// centroids after every mean step.
inline KmeansResult kmeans(const Matrix& points, std::size_t k, KmeansMetric metric,
                           std::size_t restarts, Rng& rng, std::size_t max_iters = 300) {
    if (k == 0 || k > points.rows())
        throw std::invalid_argument("kmeans: need 1 <= k <= n");
    if (restarts == 0) throw std::invalid_argument("kmeans: restarts must be >= 1");

    Matrix pts = points;
    if (metric == KmeansMetric::Cosine) detail::normalize_rows_unit(pts);

    KmeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    best.restarts_run = restarts;
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng restart_rng = rng.spawn(r);
        auto out = detail::lloyd_once(pts, k, metric, restart_rng, max_iters);
        if (out.inertia < best.inertia) {
            best.inertia = out.inertia;
            best.centroids = std::move(out.centroids);
            best.assignments = std::move(out.assignments);
        }
    }
    return best;
}

/// Post-activation outputs of the chosen layer for all samples (e.g. the last
/// hidden layer as a learned feature space for k-means).
inline Matrix embed(const NetworkParams& params, const Matrix& x, std::size_t layer) {
    if (layer >= params.specs.size())
        throw std::invalid_argument("embed: layer index out of range");
    ForwardTrace t = forward(params, x);
    return t.post_activations[layer];
}

} // namespace pairclust

#endif // PAIRCLUST_KMEANS_HPP
