#ifndef PAIRCLUST_RUNNER_HPP
#define PAIRCLUST_RUNNER_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pairclust/constraints.hpp"
#include "pairclust/dataio.hpp"
#include "pairclust/kmeans.hpp"
#include "pairclust/metrics.hpp"
#include "pairclust/network.hpp"
#include "pairclust/numeric.hpp"
#include "pairclust/pairloss.hpp"

namespace pairclust {

enum class TrainMode { ClusterKL, ClassifyXent, EmbedHinge };

enum class ConstraintSource {
    SampledFromLabels, // sample m pairs from the full label-derived set
    File,              // load tuples from a constraint file
    FullInBatch        // full pairwise relationships, enumerated inside each
                       // sample mini-batch from labels
};

struct ExperimentConfig {
    // data
    std::string data_images, data_labels; // IDX pair
    std::string data_csv;                 // or CSV dataset
    std::string test_images, test_labels, test_csv;
    std::size_t per_class = 0; // 0 = use all samples
    std::uint64_t data_seed = 1;
    bool normalize_features = true;

    // backbone: input -> hidden... (relu) -> k (identity)
    std::vector<std::size_t> hidden = {500};
    std::size_t k = 10;

    TrainMode mode = TrainMode::ClusterKL;
    LossConfig loss;

    // optimizer
    double lr = 0.05;
    double momentum = 0.9;
    std::size_t batch_tuples = 256; // cluster/embed modes with explicit tuples
    std::size_t batch_size = 64;    // classification and full-in-batch modes
    std::size_t epochs = 100;

    // constraints
    ConstraintSource constraint_source = ConstraintSource::SampledFromLabels;
    std::string constraints_file;
    std::size_t constraint_count = 0;
    double noise_rate = 0.0;
    std::uint64_t constraint_seed = 2;

    // run
    std::size_t restarts = 5;
    std::uint64_t seed = 42;
    std::size_t kmeans_restarts = 50; // embedding-mode evaluation
    std::size_t eval_k = 0;           // clusters for embedding eval; 0 = k
    std::string out_dir;
    double dominant_threshold = 0.01;
};

struct EvalMetrics {
    double purity = 0.0;
    double nmi = 0.0;
    double hungarian_acc = 0.0;
    double argmax_acc = 0.0; // node index taken as label directly
    std::size_t dominant = 0;
    ContingencyTable table;
};

struct RestartRecord {
    std::vector<double> epoch_losses;
    double final_loss = std::numeric_limits<double>::infinity();
    bool diverged = false;
};

struct RunReport {
    std::vector<RestartRecord> restarts;
    std::size_t chosen_restart = 0;
    EvalMetrics train_metrics;
    std::optional<EvalMetrics> test_metrics;
    NetworkParams params;
    double wall_seconds = 0.0; // manifest only, never report.csv
};

/// Stateless seed derivation so every stream (restart, epoch shuffle, sweep
/// point) is independent of draw order elsewhere. Splitmix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), m.cols(), 0.0);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const double* src = m.row_ptr(idx[r]);
        std::copy(src, src + m.cols(), out.row_ptr(r));
    }
    return out;
}

namespace detail {

inline std::vector<LayerSpec> build_specs(std::size_t input_dim,
                                          const std::vector<std::size_t>& hidden,
                                          std::size_t k) {
    std::vector<LayerSpec> specs;
    std::size_t in = input_dim;
    for (std::size_t h : hidden) {
        specs.push_back({in, h, Activation::Relu});
        in = h;
    }
    specs.push_back({in, k, Activation::Identity});
    return specs;
}

struct ConstraintBundle {
    ConstraintSet set;           // empty in FullInBatch / ClassifyXent
    bool in_batch_full = false;
};

inline ConstraintBundle prepare_constraints(const ExperimentConfig& cfg, const Dataset& train) {
    ConstraintBundle b;
    if (cfg.mode == TrainMode::ClassifyXent) return b;
    if (cfg.constraint_source == ConstraintSource::FullInBatch) {
        b.in_batch_full = true;
        return b;
    }
    if (cfg.constraint_source == ConstraintSource::File) {
        b.set = load_constraints(cfg.constraints_file);
        if (b.set.n_samples > train.size())
            throw std::runtime_error("constraints reference more samples than the dataset");
        b.set.n_samples = train.size();
    } else {
        if (!train.labeled())
            throw std::runtime_error("sampled constraints require a labeled dataset");
        ConstraintSet full = constraints_from_labels(train.labels);
        Rng crng(mix_seed(cfg.constraint_seed, 0));
        b.set = sample_constraints(full, cfg.constraint_count, crng);
    }
    if (cfg.noise_rate > 0.0) {
        Rng nrng(mix_seed(cfg.constraint_seed, 1));
        b.set = flip_constraints(b.set, cfg.noise_rate, nrng);
    }
    return b;
}

/// One training pass of a single restart. Returns the record; params are the
/// trained state on success. Divergence is recorded, not thrown.
inline RestartRecord run_restart(const ExperimentConfig& cfg, const Dataset& train,
                                 const ConstraintBundle& cons, std::size_t restart,
                                 NetworkParams& params) {
    Rng init_rng(mix_seed(cfg.seed, restart * 2));
    Rng batch_rng(mix_seed(cfg.seed, restart * 2 + 1));
    params = init_params(build_specs(train.features.cols(), cfg.hidden, cfg.k), init_rng);

    RestartRecord rec;
    const std::size_t n = train.size();
    try {
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            double epoch_loss = 0.0;
            if (cfg.mode == TrainMode::ClassifyXent || cons.in_batch_full) {
                std::vector<std::size_t> order(n);
                for (std::size_t i = 0; i < n; ++i) order[i] = i;
                batch_rng.shuffle(order);
                for (std::size_t start = 0; start < n; start += cfg.batch_size) {
                    const std::size_t end = std::min(start + cfg.batch_size, n);
                    std::vector<std::size_t> idx(order.begin() + static_cast<long>(start),
                                                 order.begin() + static_cast<long>(end));
                    Matrix x = gather_rows(train.features, idx);
                    ForwardTrace trace = forward(params, x);
                    double loss;
                    Matrix dlogits;
                    if (cfg.mode == TrainMode::ClassifyXent) {
                        std::vector<std::size_t> y(idx.size());
                        for (std::size_t i = 0; i < idx.size(); ++i) y[i] = train.labels[idx[i]];
                        std::tie(loss, dlogits) = cross_entropy_loss_and_grad(trace.logits(), y);
                    } else {
                        // dense enumeration of all in-batch pairs from labels
                        std::vector<ConstraintTuple> tuples;
                        tuples.reserve(idx.size() * (idx.size() - 1) / 2);
                        for (std::size_t a = 0; a < idx.size(); ++a)
                            for (std::size_t b = a + 1; b < idx.size(); ++b)
                                tuples.emplace_back(a, b,
                                                    train.labels[idx[a]] == train.labels[idx[b]]);
                        std::tie(loss, dlogits) =
                            batch_loss_and_logit_grad(trace.logits(), tuples, cfg.loss);
                    }
                    Gradients g = backward(params, trace, dlogits);
                    sgd_step(params, g, cfg.lr, cfg.momentum);
                    epoch_loss += loss;
                }
            } else {
                auto batches = make_batches(cons.set, cfg.batch_tuples, batch_rng);
                for (const auto& batch : batches) {
                    Matrix x = gather_rows(train.features, batch.sample_indices);
                    ForwardTrace trace = forward(params, x);
                    double loss;
                    Matrix dgrad;
                    if (cfg.mode == TrainMode::ClusterKL) {
                        std::tie(loss, dgrad) =
                            batch_loss_and_logit_grad(trace.logits(), batch.tuples, cfg.loss);
                    } else { // EmbedHinge: raw outputs are the embedding
                        std::tie(loss, dgrad) = hinge_embedding_loss_and_grad(
                            trace.logits(), batch.tuples, cfg.loss.margin);
                    }
                    Gradients g = backward(params, trace, dgrad);
                    sgd_step(params, g, cfg.lr, cfg.momentum);
                    epoch_loss += loss;
                }
            }
            if (!std::isfinite(epoch_loss)) throw std::runtime_error("non-finite epoch loss");
            rec.epoch_losses.push_back(epoch_loss);
        }
        rec.final_loss = rec.epoch_losses.empty() ? 0.0 : rec.epoch_losses.back();
    } catch (const std::runtime_error&) {
        rec.diverged = true;
        rec.final_loss = std::numeric_limits<double>::infinity();
    }
    return rec;
}

} // namespace detail

/// Feed-forward assignments and the full metrics bundle for one labeled split.
inline EvalMetrics evaluate(const NetworkParams& params, const Dataset& data, std::size_t k,
                            double dominant_threshold = 0.01) {
    if (!data.labeled()) throw std::invalid_argument("evaluate: dataset has no labels");
    ForwardTrace trace = forward(params, data.features);
    std::vector<std::size_t> assign(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) assign[i] = argmax_row(trace.logits(), i);
    EvalMetrics m;
    m.table = contingency(assign, data.labels, k, data.class_count);
    m.purity = purity(m.table);
    m.nmi = nmi(m.table);
    m.dominant = dominant_clusters(m.table, dominant_threshold);
    if (k >= data.class_count) m.hungarian_acc = hungarian_accuracy(m.table).accuracy;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (assign[i] == data.labels[i]) ++hits;
    m.argmax_acc = static_cast<double>(hits) / static_cast<double>(data.size());
    return m;
}

/// Metrics for the embedding baseline: k-means on the network outputs, then
/// the same bundle on the resulting cluster assignments.
inline EvalMetrics evaluate_embedding(const NetworkParams& params, const Dataset& data,
                                      std::size_t k, std::size_t kmeans_restarts,
                                      std::uint64_t seed, double dominant_threshold = 0.01) {
    if (!data.labeled()) throw std::invalid_argument("evaluate_embedding: dataset has no labels");
    ForwardTrace trace = forward(params, data.features);
    Rng rng(mix_seed(seed, 0xE1));
    KmeansResult km =
        kmeans(trace.logits(), k, KmeansMetric::Euclidean, kmeans_restarts, rng);
    EvalMetrics m;
    m.table = contingency(km.assignments, data.labels, k, data.class_count);
    m.purity = purity(m.table);
    m.nmi = nmi(m.table);
    m.dominant = dominant_clusters(m.table, dominant_threshold);
    if (k >= data.class_count) m.hungarian_acc = hungarian_accuracy(m.table).accuracy;
    m.argmax_acc = m.hungarian_acc;
    return m;
}

/// Train on in-memory datasets: per-restart init + epoch loop + SGD, then one
/// extra feed-forward of the training data for cluster collection, keeping
/// the restart with the lowest final training loss.
inline RunReport train_on(const ExperimentConfig& cfg, const Dataset& train,
                          const Dataset* test) {
    if (cfg.mode == TrainMode::ClassifyXent && !train.labeled())
        throw std::invalid_argument("classify mode requires labels");
    const auto t0 = std::chrono::steady_clock::now();
    detail::ConstraintBundle cons = detail::prepare_constraints(cfg, train);

    RunReport report;
    NetworkParams best_params;
    double best_loss = std::numeric_limits<double>::infinity();
    bool any_ok = false;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        NetworkParams params;
        RestartRecord rec = detail::run_restart(cfg, train, cons, r, params);
        // selection by training loss only; ties keep the earliest restart
        if (!rec.diverged && rec.final_loss < best_loss) {
            best_loss = rec.final_loss;
            best_params = std::move(params);
            report.chosen_restart = r;
            any_ok = true;
        }
        report.restarts.push_back(std::move(rec));
    }
    if (!any_ok) throw std::runtime_error("train: every restart diverged");
    report.params = std::move(best_params);

    const std::size_t eval_k = cfg.eval_k ? cfg.eval_k : cfg.k;
    if (cfg.mode == TrainMode::EmbedHinge) {
        report.train_metrics = evaluate_embedding(report.params, train, eval_k,
                                                  cfg.kmeans_restarts, cfg.seed,
                                                  cfg.dominant_threshold);
        if (test)
            report.test_metrics = evaluate_embedding(report.params, *test, eval_k,
                                                     cfg.kmeans_restarts, cfg.seed + 1,
                                                     cfg.dominant_threshold);
    } else {
        report.train_metrics = evaluate(report.params, train, cfg.k, cfg.dominant_threshold);
        if (test)
            report.test_metrics = evaluate(report.params, *test, cfg.k, cfg.dominant_threshold);
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// --- dataset loading per config ---

inline Dataset load_train_dataset(const ExperimentConfig& cfg) {
    Dataset ds;
    if (!cfg.data_csv.empty())
        ds = load_dataset_csv(cfg.data_csv);
    else if (!cfg.data_images.empty())
        ds = load_idx(cfg.data_images, cfg.data_labels);
    else
        throw std::runtime_error("config: no training data source given");
    if (cfg.per_class > 0) ds = subset_per_class(ds, cfg.per_class, cfg.data_seed);
    return ds;
}

inline std::optional<Dataset> load_test_dataset(const ExperimentConfig& cfg) {
    if (!cfg.test_csv.empty()) return load_dataset_csv(cfg.test_csv);
    if (!cfg.test_images.empty()) return load_idx(cfg.test_images, cfg.test_labels);
    return std::nullopt;
}

/// Load data per config, apply train-fitted normalization, train, and (when
/// out_dir is set) write report.csv / contingency.csv / manifest / checkpoint.
inline RunReport train(const ExperimentConfig& cfg);

// --- report files ---

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline void write_report_csv(const RunReport& report, std::ostream& os) {
    os << "kind,restart,epoch,split,metric,value\n";
    for (std::size_t r = 0; r < report.restarts.size(); ++r) {
        const auto& rec = report.restarts[r];
        for (std::size_t e = 0; e < rec.epoch_losses.size(); ++e)
            os << "loss," << r << "," << e << ",,," << detail::fmt_double(rec.epoch_losses[e])
               << "\n";
        if (rec.diverged) os << "diverged," << r << ",,,,1\n";
    }
    os << "meta,,,,chosen_restart," << report.chosen_restart << "\n";
    auto emit = [&](const char* split, const EvalMetrics& m) {
        os << "metric,,," << split << ",purity," << detail::fmt_double(m.purity) << "\n";
        os << "metric,,," << split << ",nmi," << detail::fmt_double(m.nmi) << "\n";
        os << "metric,,," << split << ",hungarian_accuracy,"
           << detail::fmt_double(m.hungarian_acc) << "\n";
        os << "metric,,," << split << ",argmax_accuracy," << detail::fmt_double(m.argmax_acc)
           << "\n";
        os << "metric,,," << split << ",dominant_clusters," << m.dominant << "\n";
    };
    emit("train", report.train_metrics);
    if (report.test_metrics) emit("test", *report.test_metrics);
}

inline void write_manifest(const ExperimentConfig& cfg, const RunReport& report,
                           std::ostream& os) {
    auto mode_name = [](TrainMode m) {
        switch (m) {
        case TrainMode::ClusterKL: return "cluster_kl";
        case TrainMode::ClassifyXent: return "classify_xent";
        default: return "embed_hinge";
        }
    };
    auto source_name = [](ConstraintSource s) {
        switch (s) {
        case ConstraintSource::SampledFromLabels: return "sampled";
        case ConstraintSource::File: return "file";
        default: return "full";
        }
    };
    os << "mode=" << mode_name(cfg.mode) << "\n";
    os << "data_images=" << cfg.data_images << "\n";
    os << "data_labels=" << cfg.data_labels << "\n";
    os << "data_csv=" << cfg.data_csv << "\n";
    os << "test_images=" << cfg.test_images << "\n";
    os << "test_labels=" << cfg.test_labels << "\n";
    os << "test_csv=" << cfg.test_csv << "\n";
    os << "per_class=" << cfg.per_class << "\n";
    os << "data_seed=" << cfg.data_seed << "\n";
    os << "normalize=" << (cfg.normalize_features ? 1 : 0) << "\n";
    os << "hidden=";
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i)
        os << (i ? "," : "") << cfg.hidden[i];
    os << "\n";
    os << "k=" << cfg.k << "\n";
    os << "margin=" << detail::fmt_double(cfg.loss.margin) << "\n";
    os << "epsilon=" << detail::fmt_double(cfg.loss.epsilon) << "\n";
    os << "mean_normalize=" << (cfg.loss.mean_normalize ? 1 : 0) << "\n";
    os << "lr=" << detail::fmt_double(cfg.lr) << "\n";
    os << "momentum=" << detail::fmt_double(cfg.momentum) << "\n";
    os << "batch_tuples=" << cfg.batch_tuples << "\n";
    os << "batch_size=" << cfg.batch_size << "\n";
    os << "epochs=" << cfg.epochs << "\n";
    os << "constraint_source=" << source_name(cfg.constraint_source) << "\n";
    os << "constraints_file=" << cfg.constraints_file << "\n";
    os << "constraint_count=" << cfg.constraint_count << "\n";
    os << "noise_rate=" << detail::fmt_double(cfg.noise_rate) << "\n";
    os << "constraint_seed=" << cfg.constraint_seed << "\n";
    os << "restarts=" << cfg.restarts << "\n";
    os << "seed=" << cfg.seed << "\n";
    os << "kmeans_restarts=" << cfg.kmeans_restarts << "\n";
    os << "chosen_restart=" << report.chosen_restart << "\n";
    os << "wall_seconds=" << detail::fmt_double(report.wall_seconds) << "\n";
}

inline void write_run_outputs(const ExperimentConfig& cfg, const RunReport& report) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream os(fs::path(cfg.out_dir) / "report.csv");
        write_report_csv(report, os);
    }
    {
        std::ofstream os(fs::path(cfg.out_dir) / "contingency.csv");
        write_contingency_csv(report.train_metrics.table, os);
    }
    if (report.test_metrics) {
        std::ofstream os(fs::path(cfg.out_dir) / "contingency_test.csv");
        write_contingency_csv(report.test_metrics->table, os);
    }
    {
        std::ofstream os(fs::path(cfg.out_dir) / "manifest");
        write_manifest(cfg, report, os);
    }
    save_checkpoint(report.params, (fs::path(cfg.out_dir) / "checkpoint.bin").string());
}

inline RunReport train(const ExperimentConfig& cfg) {
    Dataset train_ds = load_train_dataset(cfg);
    std::optional<Dataset> test_ds = load_test_dataset(cfg);
    if (cfg.normalize_features) {
        Dataset fit = train_ds;
        if (test_ds) test_ds = normalize(fit, *test_ds);
        train_ds = normalize(fit, fit);
    }
    RunReport report = train_on(cfg, train_ds, test_ds ? &*test_ds : nullptr);
    if (!cfg.out_dir.empty()) write_run_outputs(cfg, report);
    return report;
}

// --- sweeps ---

enum class SweepAxis { ConstraintCount, NoiseRate, K };

/// One train+evaluate per axis value, shared seeds elsewhere. Long-format CSV:
/// axis,value,split,metric,metric_value,error.
inline void sweep(const ExperimentConfig& base, SweepAxis axis,
                  const std::vector<double>& values, std::ostream& os) {
    if (values.empty()) throw std::invalid_argument("sweep: values must be nonempty");
    const char* axis_name = axis == SweepAxis::ConstraintCount ? "constraint_count"
                            : axis == SweepAxis::NoiseRate     ? "noise_rate"
                                                               : "k";
    os << "axis,value,split,metric,metric_value,error\n";
    for (double v : values) {
        ExperimentConfig cfg = base;
        cfg.out_dir.clear();
        switch (axis) {
        case SweepAxis::ConstraintCount: cfg.constraint_count = static_cast<std::size_t>(v); break;
        case SweepAxis::NoiseRate: cfg.noise_rate = v; break;
        case SweepAxis::K: cfg.k = static_cast<std::size_t>(v); break;
        }
        try {
            RunReport report = train(cfg);
            auto emit = [&](const char* split, const EvalMetrics& m) {
                os << axis_name << "," << detail::fmt_double(v) << "," << split << ",purity,"
                   << detail::fmt_double(m.purity) << ",\n";
                os << axis_name << "," << detail::fmt_double(v) << "," << split << ",nmi,"
                   << detail::fmt_double(m.nmi) << ",\n";
                os << axis_name << "," << detail::fmt_double(v) << "," << split
                   << ",hungarian_accuracy," << detail::fmt_double(m.hungarian_acc) << ",\n";
                os << axis_name << "," << detail::fmt_double(v) << "," << split
                   << ",dominant_clusters," << m.dominant << ",\n";
            };
            emit("train", report.train_metrics);
            if (report.test_metrics) emit("test", *report.test_metrics);
        } catch (const std::exception& e) {
            os << axis_name << "," << detail::fmt_double(v) << ",,,," << e.what() << "\n";
        }
    }
}

/// Clustering (full in-batch constraints) vs classification with identical
/// backbone, data, and seeds. Accuracy is hungarian for clustering and plain
/// argmax for classification, as in the paper's comparison.
inline void compare_modes(const ExperimentConfig& base, std::ostream& os) {
    os << "mode,split,accuracy\n";
    for (int m = 0; m < 2; ++m) {
        ExperimentConfig cfg = base;
        cfg.out_dir.clear();
        cfg.mode = m == 0 ? TrainMode::ClassifyXent : TrainMode::ClusterKL;
        if (cfg.mode == TrainMode::ClusterKL)
            cfg.constraint_source = ConstraintSource::FullInBatch;
        RunReport report = train(cfg);
        const char* name = m == 0 ? "classification" : "clustering";
        auto acc = [&](const EvalMetrics& e) {
            return cfg.mode == TrainMode::ClassifyXent ? e.argmax_acc : e.hungarian_acc;
        };
        os << name << ",train," << detail::fmt_double(acc(report.train_metrics)) << "\n";
        if (report.test_metrics)
            os << name << ",test," << detail::fmt_double(acc(*report.test_metrics)) << "\n";
    }
}

} // namespace pairclust

#endif // PAIRCLUST_RUNNER_HPP
