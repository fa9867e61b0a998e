#ifndef PAIRCLUST_NETWORK_HPP
#define PAIRCLUST_NETWORK_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pairclust/numeric.hpp"

namespace pairclust {

enum class Activation : std::uint8_t { Relu = 0, Identity = 1 };

struct LayerSpec {
    std::size_t input_dim;
    std::size_t output_dim;
    Activation activation;
};

/// Fully connected backbone parameters. Weights are (output_dim x input_dim),
/// biases are (1 x output_dim). Momentum buffers mirror the shapes.
struct NetworkParams {
    std::vector<LayerSpec> specs;
    std::vector<Matrix> weights;
    std::vector<Matrix> biases;
    std::vector<Matrix> weight_momentum;
    std::vector<Matrix> bias_momentum;
};

/// Per-layer intermediates kept for manual backprop.
struct ForwardTrace {
    Matrix input;                       // n x d
    std::vector<Matrix> pre_activations;
    std::vector<Matrix> post_activations;
    const Matrix& logits() const { return post_activations.back(); }
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Matrix> biases;
};

inline void validate_chain(const std::vector<LayerSpec>& specs) {
    if (specs.empty()) throw std::invalid_argument("network: empty layer spec");
    for (std::size_t l = 0; l + 1 < specs.size(); ++l)
        if (specs[l].output_dim != specs[l + 1].input_dim)
            throw std::invalid_argument("network: layer chain dims incompatible at layer " +
                                        std::to_string(l));
    for (const auto& s : specs)
        if (s.input_dim == 0 || s.output_dim == 0)
            throw std::invalid_argument("network: layer dims must be >= 1");
}

/// Zero-mean uniform init with half-width sqrt(2/fan_in); biases zero.
inline NetworkParams init_params(const std::vector<LayerSpec>& specs, Rng& rng) {
    validate_chain(specs);
    NetworkParams p;
    p.specs = specs;
    for (const auto& s : specs) {
        const double scale = std::sqrt(2.0 / static_cast<double>(s.input_dim));
        Matrix w(s.output_dim, s.input_dim, 0.0);
        for (double& x : w.data()) x = rng.uniform(-scale, scale);
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(1, s.output_dim, 0.0);
        p.weight_momentum.emplace_back(s.output_dim, s.input_dim, 0.0);
        p.bias_momentum.emplace_back(1, s.output_dim, 0.0);
    }
    return p;
}

inline ForwardTrace forward(const NetworkParams& params, const Matrix& x) {
    if (x.cols() != params.specs.front().input_dim)
        throw std::invalid_argument("forward: input dim " + std::to_string(x.cols()) +
                                    " does not match first layer " +
                                    std::to_string(params.specs.front().input_dim));
    ForwardTrace t;
    t.input = x;
    const Matrix* cur = &t.input;
    for (std::size_t l = 0; l < params.specs.size(); ++l) {
        Matrix z = matmul_nt(*cur, params.weights[l]);
        const double* b = params.biases[l].row_ptr(0);
        for (std::size_t r = 0; r < z.rows(); ++r) {
            double* zr = z.row_ptr(r);
            for (std::size_t c = 0; c < z.cols(); ++c) zr[c] += b[c];
        }
        t.pre_activations.push_back(z);
        if (params.specs[l].activation == Activation::Relu)
            for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
        t.post_activations.push_back(std::move(z));
        cur = &t.post_activations.back();
    }
    return t;
}

/// Backprop a gradient at the logits through the trace. Relu backward is the
/// 0/1 gate on pre-activations.
inline Gradients backward(const NetworkParams& params, const ForwardTrace& trace,
                          const Matrix& dlogits) {
    const std::size_t L = params.specs.size();
    const Matrix& logits = trace.logits();
    if (dlogits.rows() != logits.rows() || dlogits.cols() != logits.cols())
        throw std::invalid_argument("backward: dlogits shape mismatch");
    Gradients g;
    g.weights.resize(L);
    g.biases.resize(L);
    Matrix dpost = dlogits;
    for (std::size_t l = L; l-- > 0;) {
        Matrix dpre = std::move(dpost);
        if (params.specs[l].activation == Activation::Relu) {
            const Matrix& pre = trace.pre_activations[l];
            for (std::size_t i = 0; i < dpre.data().size(); ++i)
                if (pre.data()[i] <= 0.0) dpre.data()[i] = 0.0;
        }
        const Matrix& layer_in = (l == 0) ? trace.input : trace.post_activations[l - 1];
        g.weights[l] = matmul_tn(dpre, layer_in);
        Matrix db(1, dpre.cols(), 0.0);
        for (std::size_t r = 0; r < dpre.rows(); ++r) {
            const double* dr = dpre.row_ptr(r);
            for (std::size_t c = 0; c < dpre.cols(); ++c) db(0, c) += dr[c];
        }
        g.biases[l] = std::move(db);
        if (l > 0) dpost = matmul(dpre, params.weights[l]);
    }
    return g;
}

/// buffer <- momentum*buffer + grad; params <- params - lr*buffer.
/// Non-finite gradients abort the step (divergence signal).
inline void sgd_step(NetworkParams& params, const Gradients& grads, double lr,
                     double momentum) {
    if (lr <= 0.0) throw std::invalid_argument("sgd_step: lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0)
        throw std::invalid_argument("sgd_step: momentum must be in [0, 1)");
    for (std::size_t l = 0; l < params.specs.size(); ++l) {
        for (double v : grads.weights[l].data())
            if (!std::isfinite(v)) throw std::runtime_error("sgd_step: non-finite gradient");
        for (double v : grads.biases[l].data())
            if (!std::isfinite(v)) throw std::runtime_error("sgd_step: non-finite gradient");
        auto update = [&](Matrix& buf, Matrix& p, const Matrix& g) {
            for (std::size_t i = 0; i < p.data().size(); ++i) {
                buf.data()[i] = momentum * buf.data()[i] + g.data()[i];
                p.data()[i] -= lr * buf.data()[i];
            }
        };
        update(params.weight_momentum[l], params.weights[l], grads.weights[l]);
        update(params.bias_momentum[l], params.biases[l], grads.biases[l]);
    }
}

// --- checkpoint file ---
// Layout (little-endian):
//   magic "PCNN"  (4 bytes)
//   u32 version (= 1)
//   u32 layer count
//   per layer: u32 input_dim, u32 output_dim, u8 activation (0 relu, 1 identity)
//   per layer: f64 weights row-major (output_dim x input_dim), f64 biases (output_dim)

namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
inline void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}
inline double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}
} // namespace detail

inline void save_checkpoint(const NetworkParams& p, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    os.write("PCNN", 4);
    detail::put_u32(os, 1);
    detail::put_u32(os, static_cast<std::uint32_t>(p.specs.size()));
    for (const auto& s : p.specs) {
        detail::put_u32(os, static_cast<std::uint32_t>(s.input_dim));
        detail::put_u32(os, static_cast<std::uint32_t>(s.output_dim));
        os.put(static_cast<char>(s.activation));
    }
    for (std::size_t l = 0; l < p.specs.size(); ++l) {
        for (double v : p.weights[l].data()) detail::put_f64(os, v);
        for (double v : p.biases[l].data()) detail::put_f64(os, v);
    }
}

inline NetworkParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "PCNN", 4) != 0)
        throw std::runtime_error("checkpoint: bad magic");
    if (detail::get_u32(is) != 1) throw std::runtime_error("checkpoint: unsupported version");
    const std::uint32_t nlayers = detail::get_u32(is);
    NetworkParams p;
    for (std::uint32_t l = 0; l < nlayers; ++l) {
        LayerSpec s;
        s.input_dim = detail::get_u32(is);
        s.output_dim = detail::get_u32(is);
        int a = is.get();
        if (a != 0 && a != 1) throw std::runtime_error("checkpoint: bad activation code");
        s.activation = static_cast<Activation>(a);
        p.specs.push_back(s);
    }
    validate_chain(p.specs);
    for (const auto& s : p.specs) {
        Matrix w(s.output_dim, s.input_dim, 0.0);
        for (double& v : w.data()) v = detail::get_f64(is);
        Matrix b(1, s.output_dim, 0.0);
        for (double& v : b.data()) v = detail::get_f64(is);
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
        p.weight_momentum.emplace_back(s.output_dim, s.input_dim, 0.0);
        p.bias_momentum.emplace_back(1, s.output_dim, 0.0);
    }
    return p;
}

} // namespace pairclust

#endif // PAIRCLUST_NETWORK_HPP
