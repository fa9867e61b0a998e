#ifndef PAIRCLUST_DATAIO_HPP
#define PAIRCLUST_DATAIO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pairclust/numeric.hpp"

namespace pairclust {

struct Dataset {
    Matrix features;                 // n x d
    std::vector<std::size_t> labels; // empty when unlabeled
    std::size_t class_count = 0;
    // per-feature standardization stats of the split they were fitted on
    std::vector<double> feature_mean;
    std::vector<double> feature_std;

    std::size_t size() const { return features.rows(); }
    bool labeled() const { return !labels.empty(); }
};

namespace detail {

inline std::uint32_t read_be32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("idx: truncated file while reading " + what);
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

inline void write_be32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace detail

/// Parse the standard big-endian IDX pair: images (magic 2051, dims n, rows,
/// cols, unsigned bytes scaled to [0,1]) and labels (magic 2049, n bytes).
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("idx: cannot open image file: " + images_path);
    const std::uint32_t img_magic = detail::read_be32(img, "image magic");
    if (img_magic != 2051)
        throw std::runtime_error("idx: wrong magic in image file (expected 2051, got " +
                                 std::to_string(img_magic) + ")");
    const std::uint32_t n = detail::read_be32(img, "image count");
    const std::uint32_t rows = detail::read_be32(img, "image rows");
    const std::uint32_t cols = detail::read_be32(img, "image cols");
    const std::size_t d = static_cast<std::size_t>(rows) * cols;

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("idx: cannot open label file: " + labels_path);
    const std::uint32_t lab_magic = detail::read_be32(lab, "label magic");
    if (lab_magic != 2049)
        throw std::runtime_error("idx: wrong magic in label file (expected 2049, got " +
                                 std::to_string(lab_magic) + ")");
    const std::uint32_t n_lab = detail::read_be32(lab, "label count");
    if (n != n_lab)
        throw std::runtime_error("idx: image/label count mismatch (" + std::to_string(n) +
                                 " vs " + std::to_string(n_lab) + ")");

    Dataset ds;
    ds.features = Matrix(n, d, 0.0);
    std::vector<unsigned char> buf(d);
    for (std::uint32_t i = 0; i < n; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(d));
        if (!img) throw std::runtime_error("idx: truncated image data");
        double* row = ds.features.row_ptr(i);
        for (std::size_t c = 0; c < d; ++c) row[c] = buf[c] / 255.0;
    }
    ds.labels.resize(n);
    std::size_t max_label = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        const int b = lab.get();
        if (b == EOF) throw std::runtime_error("idx: truncated label data");
        ds.labels[i] = static_cast<std::size_t>(b);
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.class_count = max_label + 1;
    return ds;
}

/// Re-serialize a dataset whose features are byte-exact multiples of 1/255
/// (round-trip counterpart of load_idx). rows*cols must equal the feature dim.
inline void save_idx(const Dataset& ds, std::uint32_t rows, std::uint32_t cols,
                     const std::string& images_path, const std::string& labels_path) {
    if (static_cast<std::size_t>(rows) * cols != ds.features.cols())
        throw std::invalid_argument("save_idx: rows*cols does not match feature dim");
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("idx: cannot open for writing: " + images_path);
    detail::write_be32(img, 2051);
    detail::write_be32(img, static_cast<std::uint32_t>(ds.size()));
    detail::write_be32(img, rows);
    detail::write_be32(img, cols);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double* row = ds.features.row_ptr(i);
        for (std::size_t c = 0; c < ds.features.cols(); ++c)
            img.put(static_cast<char>(static_cast<unsigned char>(std::lround(row[c] * 255.0))));
    }
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("idx: cannot open for writing: " + labels_path);
    detail::write_be32(lab, 2049);
    detail::write_be32(lab, static_cast<std::uint32_t>(ds.size()));
    for (std::size_t l : ds.labels) lab.put(static_cast<char>(static_cast<unsigned char>(l)));
}

/// Isotropic Gaussian samples around each center row; labels follow the
/// generating center.
inline Dataset gen_blobs(const Matrix& centers, double sigma, std::size_t per_class, Rng& rng) {
    if (sigma <= 0.0) throw std::invalid_argument("gen_blobs: sigma must be > 0");
    if (per_class == 0) throw std::invalid_argument("gen_blobs: per_class must be >= 1");
    const std::size_t c = centers.rows(), d = centers.cols();
    Dataset ds;
    ds.features = Matrix(c * per_class, d, 0.0);
    ds.labels.resize(c * per_class);
    ds.class_count = c;
    std::size_t row = 0;
    for (std::size_t cls = 0; cls < c; ++cls) {
        for (std::size_t s = 0; s < per_class; ++s, ++row) {
            double* out = ds.features.row_ptr(row);
            const double* ctr = centers.row_ptr(cls);
            for (std::size_t f = 0; f < d; ++f) out[f] = ctr[f] + sigma * rng.normal();
            ds.labels[row] = cls;
        }
    }
    return ds;
}

/// Standardize apply_to with per-feature mean/std fitted on fit_on. Features
/// whose std is below 1e-8 are centered but not scaled.
inline Dataset normalize(const Dataset& fit_on, const Dataset& apply_to) {
    const std::size_t d = fit_on.features.cols();
    if (apply_to.features.cols() != d)
        throw std::invalid_argument("normalize: feature dims differ");
    const std::size_t n = fit_on.size();
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = fit_on.features.row_ptr(i);
        for (std::size_t c = 0; c < d; ++c) mean[c] += row[c];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = fit_on.features.row_ptr(i);
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = row[c] - mean[c];
            sd[c] += diff * diff;
        }
    }
    for (double& s : sd) s = std::sqrt(s / static_cast<double>(n));

    Dataset out = apply_to;
    out.feature_mean = mean;
    out.feature_std = sd;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double* row = out.features.row_ptr(i);
        for (std::size_t c = 0; c < d; ++c) {
            row[c] -= mean[c];
            if (sd[c] >= 1e-8) row[c] /= sd[c];
        }
    }
    return out;
}

/// Deterministic subset: permute indices with the given seed, then take the
/// first per_class samples of each class in permuted order.
inline Dataset subset_per_class(const Dataset& ds, std::size_t per_class, std::uint64_t seed) {
    if (!ds.labeled()) throw std::invalid_argument("subset_per_class: dataset has no labels");
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::map<std::size_t, std::size_t> taken;
    std::vector<std::size_t> keep;
    for (std::size_t i : order)
        if (taken[ds.labels[i]]++ < per_class) keep.push_back(i);
    std::sort(keep.begin(), keep.end());
    Dataset out;
    out.class_count = ds.class_count;
    out.features = Matrix(keep.size(), ds.features.cols(), 0.0);
    out.labels.resize(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const double* src = ds.features.row_ptr(keep[r]);
        std::copy(src, src + ds.features.cols(), out.features.row_ptr(r));
        out.labels[r] = ds.labels[keep[r]];
    }
    return out;
}

// --- blob dataset CSV: one sample per line, "label,f1,...,fd" ---

inline void save_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_dataset_csv: cannot open " + path);
    os.precision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        os << (ds.labeled() ? static_cast<long long>(ds.labels[i]) : -1LL);
        const double* row = ds.features.row_ptr(i);
        for (std::size_t c = 0; c < ds.features.cols(); ++c) os << "," << row[c];
        os << "\n";
    }
}

inline Dataset load_dataset_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_dataset_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::vector<long long> labels;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string cell;
        if (!std::getline(ls, cell, ',')) continue;
        labels.push_back(std::stoll(cell));
        std::vector<double> feat;
        while (std::getline(ls, cell, ',')) feat.push_back(std::stod(cell));
        rows.push_back(std::move(feat));
    }
    if (rows.empty()) throw std::runtime_error("load_dataset_csv: no samples in " + path);
    const std::size_t d = rows[0].size();
    Dataset ds;
    ds.features = Matrix(rows.size(), d, 0.0);
    bool labeled = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != d)
            throw std::runtime_error("load_dataset_csv: ragged row in " + path);
        std::copy(rows[i].begin(), rows[i].end(), ds.features.row_ptr(i));
        if (labels[i] < 0) labeled = false;
    }
    if (labeled) {
        std::size_t mx = 0;
        ds.labels.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            ds.labels[i] = static_cast<std::size_t>(labels[i]);
            mx = std::max(mx, ds.labels[i]);
        }
        ds.class_count = mx + 1;
    }
    return ds;
}

} // namespace pairclust

#endif // PAIRCLUST_DATAIO_HPP
