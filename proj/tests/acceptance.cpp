// Acceptance suite, self-contained part: gradient correctness, Siamese
// equivalence, metric oracles, separable-blobs end-to-end, determinism.
// Each criterion prints one PASS/FAIL line.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pairclust/runner.hpp"

using namespace pairclust;
namespace fs = std::filesystem;

namespace {

void report_line(const char* id, bool ok) {
    std::printf("[criterion %s] %s\n", id, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
}

Matrix random_logits(std::size_t n, std::size_t k, Rng& rng) {
    Matrix m(n, k, 0.0);
    for (double& v : m.data()) v = rng.uniform(-3.0, 3.0);
    return m;
}

std::vector<ConstraintTuple> random_tuples(std::size_t n, std::size_t max_m, Rng& rng) {
    std::vector<ConstraintTuple> tuples;
    const std::size_t m = 1 + rng.below(max_m);
    for (std::size_t t = 0; t < m; ++t) {
        std::size_t i = rng.below(n), j = rng.below(n);
        if (i != j) tuples.emplace_back(i, j, rng.uniform() < 0.5);
    }
    return tuples;
}

template <typename LossFn>
double max_rel_error_vs_fd(const Matrix& input, const Matrix& analytic, LossFn loss) {
    const double step = 1e-5;
    double worst = 0.0;
    Matrix work = input;
    for (std::size_t i = 0; i < work.data().size(); ++i) {
        const double orig = work.data()[i];
        work.data()[i] = orig + step;
        const double lp = loss(work);
        work.data()[i] = orig - step;
        const double lm = loss(work);
        work.data()[i] = orig;
        const double fd = (lp - lm) / (2.0 * step);
        const double g = analytic.data()[i];
        const double scale = std::max({std::abs(fd), std::abs(g), 1e-3});
        worst = std::max(worst, std::abs(g - fd) / scale);
    }
    return worst;
}

double directional_term(const std::vector<double>& ref, const std::vector<double>& var,
                        bool similar, const LossConfig& cfg) {
    const double d = kl(ref, var);
    return similar ? d : std::max(0.0, cfg.margin - d);
}

// Batch loss with the constant side of each directional KL frozen at the
// baseline distributions: the function the convention gradient actually
// differentiates (the reference side of every KL term carries no gradient).
double convention_batch_loss(const Matrix& logits, const Matrix& frozen,
                             const std::vector<ConstraintTuple>& tuples,
                             const LossConfig& cfg) {
    Matrix probs = softmax_rows(logits);
    for (double& v : probs.data()) v = clamp_prob(v, cfg.epsilon);
    const std::size_t k = probs.cols();
    double total = 0.0;
    std::vector<double> ref(k), var(k);
    for (const auto& t : tuples) {
        ref.assign(frozen.row_ptr(t.i), frozen.row_ptr(t.i) + k);
        var.assign(probs.row_ptr(t.j), probs.row_ptr(t.j) + k);
        total += directional_term(ref, var, t.similar, cfg);
        ref.assign(frozen.row_ptr(t.j), frozen.row_ptr(t.j) + k);
        var.assign(probs.row_ptr(t.i), probs.row_ptr(t.i) + k);
        total += directional_term(ref, var, t.similar, cfg);
    }
    return total;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
}

} // namespace

TEST_CASE("criterion 1: analytic gradients match finite differences") {
    Rng rng(10001);
    LossConfig cfg;
    const std::size_t k_choices[] = {3, 5, 10};
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.below(7); // <= 8
        const std::size_t k = k_choices[rng.below(3)];
        Matrix logits = random_logits(n, k, rng);
        auto tuples = random_tuples(n, 20, rng);
        if (tuples.empty()) tuples.emplace_back(0, 1, true);

        // contrastive KL batch loss; the reference side of each directional
        // KL is held constant by construction, so the oracle freezes it too
        auto [l1, g1] = batch_loss_and_logit_grad(logits, tuples, cfg);
        Matrix frozen = softmax_rows(logits);
        for (double& v : frozen.data()) v = clamp_prob(v, cfg.epsilon);
        worst = std::max(worst, max_rel_error_vs_fd(logits, g1, [&](const Matrix& z) {
                             return convention_batch_loss(z, frozen, tuples, cfg);
                         }));

        // cross-entropy
        std::vector<std::size_t> labels(n);
        for (auto& l : labels) l = rng.below(k);
        auto [l2, g2] = cross_entropy_loss_and_grad(logits, labels);
        worst = std::max(worst, max_rel_error_vs_fd(logits, g2, [&](const Matrix& z) {
                             return cross_entropy_loss_and_grad(z, labels).first;
                         }));

        // hinge embedding on the raw matrix as embeddings
        auto [l3, g3] = hinge_embedding_loss_and_grad(logits, tuples, 2.0);
        worst = std::max(worst, max_rel_error_vs_fd(logits, g3, [&](const Matrix& e) {
                             return hinge_embedding_loss_and_grad(e, tuples, 2.0).first;
                         }));
    }
    const bool ok = worst < 1e-4;
    report_line("1 gradient-correctness", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 2: dense batch equals independent Siamese forwards") {
    Rng rng(10002);
    LossConfig cfg;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 2 + rng.below(5), h = 2 + rng.below(8),
                          k = 2 + rng.below(9), n = 2 + rng.below(7);
        std::vector<LayerSpec> specs{{d, h, Activation::Relu}, {h, k, Activation::Identity}};
        NetworkParams params = init_params(specs, rng);
        Matrix x(n, d, 0.0);
        for (double& v : x.data()) v = rng.uniform(-2.0, 2.0);
        auto tuples = random_tuples(n, 20, rng);
        if (tuples.empty()) tuples.emplace_back(0, 1, false);

        // dense path: one forward for the whole batch
        ForwardTrace trace = forward(params, x);
        const double dense = batch_loss_and_logit_grad(trace.logits(), tuples, cfg).first;

        // oracle: feed each pair through the network independently
        double siamese = 0.0;
        for (const auto& t : tuples) {
            Matrix pair_x(2, d, 0.0);
            for (std::size_t c = 0; c < d; ++c) {
                pair_x(0, c) = x(t.i, c);
                pair_x(1, c) = x(t.j, c);
            }
            ForwardTrace pt = forward(params, pair_x);
            Matrix probs = softmax_rows(pt.logits());
            std::vector<double> p(probs.row_ptr(0), probs.row_ptr(0) + k);
            std::vector<double> q(probs.row_ptr(1), probs.row_ptr(1) + k);
            for (double& v : p) v = clamp_prob(v, cfg.epsilon);
            for (double& v : q) v = clamp_prob(v, cfg.epsilon);
            siamese += pair_loss(p, q, t.similar, cfg);
        }
        worst = std::max(worst, std::abs(dense - siamese));
    }
    const bool ok = worst < 1e-12;
    report_line("2 siamese-equivalence", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 3: metric oracles") {
    Rng rng(10003);
    bool ok = true;

    // purity / NMI against direct entropy computations
    int done = 0;
    while (done < 20) {
        const std::size_t k = 2 + rng.below(5), c = 2 + rng.below(5);
        ContingencyTable t;
        t.k = k;
        t.c = c;
        t.counts.assign(k * c, 0);
        t.n = 0;
        for (auto& cell : t.counts) {
            cell = static_cast<std::int64_t>(rng.below(10));
            t.n += cell;
        }
        if (t.n == 0) continue;
        ++done;

        const double n = static_cast<double>(t.n);
        std::vector<double> rows(k, 0), cols(c, 0);
        std::int64_t purity_sum = 0;
        for (std::size_t a = 0; a < k; ++a) {
            std::int64_t mx = 0;
            for (std::size_t b = 0; b < c; ++b) {
                rows[a] += static_cast<double>(t.at(a, b));
                cols[b] += static_cast<double>(t.at(a, b));
                mx = std::max(mx, t.at(a, b));
            }
            purity_sum += mx;
        }
        double hr = 0, hc = 0, mi = 0;
        for (double f : rows)
            if (f > 0) hr -= (f / n) * std::log(f / n);
        for (double f : cols)
            if (f > 0) hc -= (f / n) * std::log(f / n);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < c; ++b) {
                const auto nab = static_cast<double>(t.at(a, b));
                if (nab > 0) mi += (nab / n) * std::log(nab * n / (rows[a] * cols[b]));
            }
        const double nmi_expected =
            (hr == 0 || hc == 0) ? 0.0 : std::clamp(mi / std::sqrt(hr * hc), 0.0, 1.0);
        if (std::abs(purity(t) - static_cast<double>(purity_sum) / n) > 1e-12) ok = false;
        if (std::abs(nmi(t) - nmi_expected) > 1e-12) ok = false;
    }

    // hungarian vs exhaustive permutation search, all k <= 6
    done = 0;
    while (done < 200) {
        const std::size_t c = 2 + rng.below(4);
        const std::size_t k = c + rng.below(7 - c); // k in [c, 6]
        ContingencyTable t;
        t.k = k;
        t.c = c;
        t.counts.assign(k * c, 0);
        t.n = 0;
        for (auto& cell : t.counts) {
            cell = static_cast<std::int64_t>(rng.below(10));
            t.n += cell;
        }
        if (t.n == 0) continue;
        ++done;
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        std::int64_t best = 0;
        do {
            std::int64_t total = 0;
            for (std::size_t a = 0; a < k; ++a)
                if (perm[a] < c) total += t.at(a, perm[a]);
            best = std::max(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
        const double expected = static_cast<double>(best) / static_cast<double>(t.n);
        if (std::abs(hungarian_accuracy(t).accuracy - expected) > 1e-12) ok = false;
    }

    report_line("3 metric-oracles", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 4: separable-blobs end-to-end") {
    // 4 gaussian blobs in 2D, inter-center distance >= 5 sigma
    Matrix centers(4, 2, {5, 5, 5, -5, -5, 5, -5, -5});
    const double sigma = 0.5; // nearest centers 10 apart = 20 sigma
    Rng train_rng(20244), test_rng(20245);
    Dataset train = gen_blobs(centers, sigma, 100, train_rng); // 400 points
    Dataset test = gen_blobs(centers, sigma, 50, test_rng);    // 200 points

    ExperimentConfig cfg;
    cfg.mode = TrainMode::ClusterKL;
    cfg.constraint_source = ConstraintSource::SampledFromLabels;
    cfg.constraint_count = 200;
    cfg.hidden = {16};
    cfg.k = 8;
    cfg.epochs = 60;
    cfg.restarts = 5;
    cfg.batch_tuples = 64;
    cfg.lr = 0.02; // the batch cost is an unnormalized sum over 64 tuples
    cfg.momentum = 0.9;
    cfg.normalize_features = false;

    RunReport report = train_on(cfg, train, &test);
    REQUIRE(report.test_metrics.has_value());
    const bool ok =
        report.test_metrics->purity >= 0.95 && report.test_metrics->dominant == 4;
    std::printf("  blobs test purity=%.4f dominant=%zu\n", report.test_metrics->purity,
                report.test_metrics->dominant);
    report_line("4 separable-blobs", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 9: byte-identical report.csv under identical config") {
    const fs::path dir = fs::temp_directory_path() / "pairclust_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);

    Matrix centers(3, 2, {0, 0, 6, 0, 0, 6});
    Rng gen(991);
    Dataset blobs = gen_blobs(centers, 0.4, 60, gen);
    const fs::path csv = dir / "blobs.csv";
    save_dataset_csv(blobs, csv.string());

    ExperimentConfig cfg;
    cfg.data_csv = csv.string();
    cfg.mode = TrainMode::ClusterKL;
    cfg.constraint_source = ConstraintSource::SampledFromLabels;
    cfg.constraint_count = 150;
    cfg.hidden = {16};
    cfg.k = 6;
    cfg.epochs = 12;
    cfg.restarts = 3;
    cfg.batch_tuples = 64;
    cfg.normalize_features = false;

    cfg.out_dir = (dir / "run_a").string();
    train(cfg);
    cfg.out_dir = (dir / "run_b").string();
    train(cfg);

    const bool ok = slurp(dir / "run_a" / "report.csv") == slurp(dir / "run_b" / "report.csv");
    report_line("9 determinism", ok);
    fs::remove_all(dir);
    REQUIRE(ok);
}
