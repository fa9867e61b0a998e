#ifndef PAIRCLUST_NUMERIC_HPP
#define PAIRCLUST_NUMERIC_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pairclust {

/// Dense row-major matrix of doubles. All vector quantities in the library
/// are 1xN or Nx1 matrices.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0)
            throw std::invalid_argument("Matrix: dimensions must be >= 1");
    }
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (rows == 0 || cols == 0)
            throw std::invalid_argument("Matrix: dimensions must be >= 1");
        if (data_.size() != rows * cols)
            throw std::invalid_argument("Matrix: data size does not match dimensions");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

/// Seeded random source. Built on mt19937_64 (whose output sequence is fixed
/// by the standard) with hand-rolled uniform/normal transforms, so identical
/// seeds replay identical draws on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection sampling, unbiased.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be > 0");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = next_u64(); } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller. One spare value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do { u1 = uniform(); } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

    /// Derive an independent stream (restart / epoch / sweep-point seeds).
    Rng spawn(std::uint64_t stream) {
        std::uint64_t s = next_u64() ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        return Rng(s);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions differ (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
    Matrix c(a.rows(), b.cols(), 0.0);
    const std::size_t n = a.rows(), m = a.cols(), p = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double* ci = c.row_ptr(i);
        const double* ai = a.row_ptr(i);
        for (std::size_t k = 0; k < m; ++k) {
            const double aik = ai[k];
            const double* bk = b.row_ptr(k);
            for (std::size_t j = 0; j < p; ++j)
                ci[j] += aik * bk[j];
        }
    }
    return c;
}

/// a * b^T. Dot-product kernel; both operands stream row-major.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw std::invalid_argument("matmul_nt: inner dimensions differ");
    Matrix c(a.rows(), b.rows(), 0.0);
    const std::size_t n = a.rows(), m = a.cols(), p = b.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a.row_ptr(i);
        double* ci = c.row_ptr(i);
        for (std::size_t j = 0; j < p; ++j) {
            const double* bj = b.row_ptr(j);
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) s += ai[k] * bj[k];
            ci[j] = s;
        }
    }
    return c;
}

/// a^T * b. Rank-1 accumulation over the shared leading dimension.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw std::invalid_argument("matmul_tn: inner dimensions differ");
    Matrix c(a.cols(), b.cols(), 0.0);
    const std::size_t n = a.rows(), m = a.cols(), p = b.cols();
    for (std::size_t k = 0; k < n; ++k) {
        const double* ak = a.row_ptr(k);
        const double* bk = b.row_ptr(k);
        for (std::size_t i = 0; i < m; ++i) {
            const double aki = ak[i];
            double* ci = c.row_ptr(i);
            for (std::size_t j = 0; j < p; ++j)
                ci[j] += aki * bk[j];
        }
    }
    return c;
}

/// Row-wise softmax with max subtraction. Every output row sums to 1 and all
/// entries are strictly positive for finite input.
inline Matrix softmax_rows(const Matrix& z) {
    Matrix out(z.rows(), z.cols(), 0.0);
    for (std::size_t r = 0; r < z.rows(); ++r) {
        const double* zr = z.row_ptr(r);
        double* o = out.row_ptr(r);
        double mx = zr[0];
        for (std::size_t c = 1; c < z.cols(); ++c) mx = std::max(mx, zr[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < z.cols(); ++c) {
            o[c] = std::exp(zr[c] - mx);
            sum += o[c];
        }
        for (std::size_t c = 0; c < z.cols(); ++c) o[c] /= sum;
    }
    return out;
}

/// Index of the maximum entry in row r. Ties break to the lowest index.
inline std::size_t argmax_row(const Matrix& m, std::size_t r) {
    if (m.cols() == 0 || r >= m.rows())
        throw std::invalid_argument("argmax_row: empty row or index out of range");
    const double* p = m.row_ptr(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols(); ++c)
        if (p[c] > p[best]) best = c;
    return best;
}

} // namespace pairclust

#endif // PAIRCLUST_NUMERIC_HPP
