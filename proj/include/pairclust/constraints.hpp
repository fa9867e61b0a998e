#ifndef PAIRCLUST_CONSTRAINTS_HPP
#define PAIRCLUST_CONSTRAINTS_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pairclust/numeric.hpp"

namespace pairclust {

/// Pairwise relationship over sample indices, canonical form i < j.
struct ConstraintTuple {
    std::size_t i;
    std::size_t j;
    bool similar;

    ConstraintTuple(std::size_t a, std::size_t b, bool sim)
        : i(std::min(a, b)), j(std::max(a, b)), similar(sim) {
        if (a == b) throw std::invalid_argument("ConstraintTuple: i == j");
    }
    bool operator==(const ConstraintTuple& o) const {
        return i == o.i && j == o.j && similar == o.similar;
    }
};

struct ConstraintSet {
    std::vector<ConstraintTuple> tuples;
    std::size_t n_samples = 0;
};

/// All n(n-1)/2 pairs; similar iff the class labels agree.
inline ConstraintSet constraints_from_labels(const std::vector<std::size_t>& labels) {
    if (labels.empty())
        throw std::invalid_argument("constraints_from_labels: empty labels");
    ConstraintSet set;
    set.n_samples = labels.size();
    set.tuples.reserve(labels.size() * (labels.size() - 1) / 2);
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t j = i + 1; j < labels.size(); ++j)
            set.tuples.emplace_back(i, j, labels[i] == labels[j]);
    return set;
}

/// m tuples drawn uniformly without replacement (partial Fisher-Yates).
inline ConstraintSet sample_constraints(const ConstraintSet& full, std::size_t m, Rng& rng) {
    if (m > full.tuples.size())
        throw std::invalid_argument("sample_constraints: m exceeds set size");
    std::vector<std::size_t> idx(full.tuples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    ConstraintSet out;
    out.n_samples = full.n_samples;
    out.tuples.reserve(m);
    for (std::size_t t = 0; t < m; ++t) {
        std::size_t pick = t + rng.below(idx.size() - t);
        std::swap(idx[t], idx[pick]);
        out.tuples.push_back(full.tuples[idx[t]]);
    }
    return out;
}

/// Invert the relationship of exactly round(noise_rate * |set|) tuples,
/// chosen uniformly without replacement.
inline ConstraintSet flip_constraints(const ConstraintSet& set, double noise_rate, Rng& rng) {
    if (noise_rate < 0.0 || noise_rate > 1.0)
        throw std::invalid_argument("flip_constraints: rate must be in [0, 1]");
    ConstraintSet out = set;
    const std::size_t n = set.tuples.size();
    const auto n_flip = static_cast<std::size_t>(
        std::llround(noise_rate * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t t = 0; t < n_flip; ++t) {
        std::size_t pick = t + rng.below(n - t);
        std::swap(idx[t], idx[pick]);
        out.tuples[idx[t]].similar = !out.tuples[idx[t]].similar;
    }
    return out;
}

/// One mini-batch for the cost layer: the deduplicated samples it touches and
/// the tuples re-indexed into batch-local coordinates.
struct ConstraintBatch {
    std::vector<std::size_t> sample_indices; // dataset-global, sorted
    std::vector<ConstraintTuple> tuples;     // batch-local indices
};

/// Shuffle the tuples, cut into groups of <= batch_tuples, and gather each
/// group's touched samples once. Every sample is fed forward once per batch
/// no matter how many tuples reference it.
inline std::vector<ConstraintBatch> make_batches(const ConstraintSet& set,
                                                 std::size_t batch_tuples, Rng& rng) {
    if (batch_tuples == 0)
        throw std::invalid_argument("make_batches: batch_tuples must be >= 1");
    std::vector<std::size_t> order(set.tuples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    std::vector<ConstraintBatch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_tuples) {
        const std::size_t end = std::min(start + batch_tuples, order.size());
        ConstraintBatch batch;
        std::set<std::size_t> touched;
        for (std::size_t t = start; t < end; ++t) {
            touched.insert(set.tuples[order[t]].i);
            touched.insert(set.tuples[order[t]].j);
        }
        batch.sample_indices.assign(touched.begin(), touched.end());
        std::unordered_map<std::size_t, std::size_t> local;
        for (std::size_t l = 0; l < batch.sample_indices.size(); ++l)
            local[batch.sample_indices[l]] = l;
        for (std::size_t t = start; t < end; ++t) {
            const auto& tup = set.tuples[order[t]];
            batch.tuples.emplace_back(local[tup.i], local[tup.j], tup.similar);
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

// --- constraint file format ---
// One tuple per line: "i,j,r" with r = +1 (similar) or -1 (dissimilar).
// Lines starting with '#' are comments. Indices are zero-based, dataset-global.

inline void save_constraints(const ConstraintSet& set, std::ostream& os) {
    os << "# n_samples=" << set.n_samples << "\n";
    for (const auto& t : set.tuples)
        os << t.i << "," << t.j << "," << (t.similar ? "+1" : "-1") << "\n";
}

inline void save_constraints(const ConstraintSet& set, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_constraints: cannot open " + path);
    save_constraints(set, os);
}

inline ConstraintSet parse_constraints(std::istream& is) {
    ConstraintSet set;
    std::string line;
    std::size_t max_idx = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("n_samples=");
            if (pos != std::string::npos)
                set.n_samples = std::stoull(line.substr(pos + 10));
            continue;
        }
        std::istringstream ls(line);
        std::size_t i, j;
        int r;
        char c1, c2;
        if (!(ls >> i >> c1 >> j >> c2 >> r) || c1 != ',' || c2 != ',' ||
            (r != 1 && r != -1))
            throw std::runtime_error("parse_constraints: malformed line: " + line);
        set.tuples.emplace_back(i, j, r == 1);
        max_idx = std::max({max_idx, i, j});
    }
    if (set.n_samples == 0 && !set.tuples.empty()) set.n_samples = max_idx + 1;
    return set;
}

inline ConstraintSet load_constraints(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_constraints: cannot open " + path);
    return parse_constraints(is);
}

} // namespace pairclust

#endif // PAIRCLUST_CONSTRAINTS_HPP
