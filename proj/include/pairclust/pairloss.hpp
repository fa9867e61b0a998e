#ifndef PAIRCLUST_PAIRLOSS_HPP
#define PAIRCLUST_PAIRLOSS_HPP

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pairclust/constraints.hpp"
#include "pairclust/numeric.hpp"

namespace pairclust {

/// Contrastive KL cost configuration. The margin is in nats.
struct LossConfig {
    double margin = 2.0;
    double epsilon = 1e-7;   // probability clamp floor before kl / division
    bool mean_normalize = false; // divide batch loss and gradient by tuple count
};

inline void validate_loss_config(const LossConfig& cfg, std::size_t k) {
    if (cfg.margin <= 0.0) throw std::invalid_argument("LossConfig: margin must be > 0");
    if (cfg.epsilon <= 0.0 || (k > 0 && cfg.epsilon >= 1.0 / static_cast<double>(k)))
        throw std::invalid_argument("LossConfig: epsilon must be in (0, 1/k)");
}

inline double clamp_prob(double p, double eps) {
    return p < eps ? eps : (p > 1.0 ? 1.0 : p);
}

/// KL(p || q) = sum_i p_i ln(p_i / q_i), natural log.
inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size())
        throw std::invalid_argument("kl: distribution lengths differ");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        d += p[i] * std::log(p[i] / q[i]);
    return d;
}

/// Symmetric contrastive pair cost: similar pairs pay KL both ways, dissimilar
/// pairs pay the hinge on each direction.
inline double pair_loss(const std::vector<double>& p, const std::vector<double>& q,
                        bool similar, const LossConfig& cfg) {
    const double kl_pq = kl(p, q);
    const double kl_qp = kl(q, p);
    if (similar) return kl_pq + kl_qp;
    return std::max(0.0, cfg.margin - kl_pq) + std::max(0.0, cfg.margin - kl_qp);
}

/// Piecewise gradients with the constant-side convention: each directional KL
/// term contributes gradient only to the distribution it diverges toward.
inline std::pair<std::vector<double>, std::vector<double>>
pair_grad(const std::vector<double>& p, const std::vector<double>& q, bool similar,
          const LossConfig& cfg) {
    const std::size_t k = p.size();
    if (q.size() != k) throw std::invalid_argument("pair_grad: distribution lengths differ");
    std::vector<double> dp(k, 0.0), dq(k, 0.0);
    const double kl_pq = kl(p, q);
    const double kl_qp = kl(q, p);
    for (std::size_t i = 0; i < k; ++i) {
        if (similar) {
            dq[i] = -p[i] / q[i];
            dp[i] = -q[i] / p[i];
        } else {
            if (kl_pq < cfg.margin) dq[i] = p[i] / q[i];
            if (kl_qp < cfg.margin) dp[i] = q[i] / p[i];
        }
    }
    return {std::move(dp), std::move(dq)};
}

namespace detail {

/// Push a per-sample distribution-space gradient g through the softmax
/// Jacobian: dL/dz_j = p_j * (g_j - sum_i g_i p_i).
inline void softmax_backward_row(const double* probs, const double* g, double* dz,
                                 std::size_t k) {
    double dot = 0.0;
    for (std::size_t i = 0; i < k; ++i) dot += g[i] * probs[i];
    for (std::size_t j = 0; j < k; ++j) dz[j] = probs[j] * (g[j] - dot);
}

} // namespace detail

/// Dense in-batch contrastive cost. One softmax per sample; every tuple's
/// contribution is accumulated in distribution space and pushed through the
/// softmax Jacobian once per sample.
inline std::pair<double, Matrix>
batch_loss_and_logit_grad(const Matrix& logits, const std::vector<ConstraintTuple>& tuples,
                          const LossConfig& cfg) {
    const std::size_t n = logits.rows(), k = logits.cols();
    validate_loss_config(cfg, k);
    Matrix dlogits(n, k, 0.0);
    if (tuples.empty()) return {0.0, dlogits};

    const Matrix probs = softmax_rows(logits);
    Matrix clamped = probs;
    for (double& v : clamped.data()) v = clamp_prob(v, cfg.epsilon);

    Matrix dist_grad(n, k, 0.0); // accumulated dL/d(prob)
    double loss = 0.0;
    std::vector<double> p(k), q(k);
    for (const auto& t : tuples) {
        if (t.i >= n || t.j >= n)
            throw std::invalid_argument("batch_loss_and_logit_grad: tuple index out of range");
        const double* pi = clamped.row_ptr(t.i);
        const double* pj = clamped.row_ptr(t.j);
        p.assign(pi, pi + k);
        q.assign(pj, pj + k);
        loss += pair_loss(p, q, t.similar, cfg);
        auto [dp, dq] = pair_grad(p, q, t.similar, cfg);
        double* gi = dist_grad.row_ptr(t.i);
        double* gj = dist_grad.row_ptr(t.j);
        for (std::size_t c = 0; c < k; ++c) {
            gi[c] += dp[c];
            gj[c] += dq[c];
        }
    }
    const double scale = cfg.mean_normalize ? 1.0 / static_cast<double>(tuples.size()) : 1.0;
    loss *= scale;
    for (std::size_t r = 0; r < n; ++r) {
        detail::softmax_backward_row(probs.row_ptr(r), dist_grad.row_ptr(r),
                                     dlogits.row_ptr(r), k);
        if (scale != 1.0)
            for (std::size_t c = 0; c < k; ++c) dlogits(r, c) *= scale;
    }
    return {loss, dlogits};
}

/// Mean negative log softmax probability of the true class;
/// gradient (softmax - onehot) / n.
inline std::pair<double, Matrix>
cross_entropy_loss_and_grad(const Matrix& logits, const std::vector<std::size_t>& labels) {
    const std::size_t n = logits.rows(), k = logits.cols();
    if (labels.size() != n)
        throw std::invalid_argument("cross_entropy: label count does not match batch");
    const Matrix probs = softmax_rows(logits);
    Matrix dlogits(n, k, 0.0);
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        if (labels[r] >= k)
            throw std::invalid_argument("cross_entropy: label out of range");
        const double* pr = probs.row_ptr(r);
        loss -= std::log(std::max(pr[labels[r]], 1e-300));
        double* dr = dlogits.row_ptr(r);
        for (std::size_t c = 0; c < k; ++c)
            dr[c] = (pr[c] - (c == labels[r] ? 1.0 : 0.0)) / static_cast<double>(n);
    }
    return {loss / static_cast<double>(n), dlogits};
}

/// Siamese-style metric-learning baseline cost on raw embeddings:
/// similar pairs pay squared Euclidean distance, dissimilar pairs pay the
/// squared hinge max(0, margin - dist)^2. Summed over tuples.
inline std::pair<double, Matrix>
hinge_embedding_loss_and_grad(const Matrix& embeddings,
                              const std::vector<ConstraintTuple>& tuples, double margin) {
    const std::size_t n = embeddings.rows(), d = embeddings.cols();
    Matrix demb(n, d, 0.0);
    double loss = 0.0;
    for (const auto& t : tuples) {
        if (t.i >= n || t.j >= n)
            throw std::invalid_argument("hinge_embedding: tuple index out of range");
        const double* ei = embeddings.row_ptr(t.i);
        const double* ej = embeddings.row_ptr(t.j);
        double d2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = ei[c] - ej[c];
            d2 += diff * diff;
        }
        double* gi = demb.row_ptr(t.i);
        double* gj = demb.row_ptr(t.j);
        if (t.similar) {
            loss += d2;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = ei[c] - ej[c];
                gi[c] += 2.0 * diff;
                gj[c] -= 2.0 * diff;
            }
        } else {
            const double dist = std::sqrt(d2);
            if (dist < margin) {
                const double gap = margin - dist;
                loss += gap * gap;
                if (dist > 0.0) {
                    const double coef = -2.0 * gap / dist;
                    for (std::size_t c = 0; c < d; ++c) {
                        const double diff = ei[c] - ej[c];
                        gi[c] += coef * diff;
                        gj[c] -= coef * diff;
                    }
                }
                // dist == 0: subgradient 0
            }
        }
    }
    return {loss, demb};
}

} // namespace pairclust

#endif // PAIRCLUST_PAIRLOSS_HPP
