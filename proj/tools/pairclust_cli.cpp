// Command-line front end: training, evaluation, sweeps, mode comparison,
// constraint/blob generation, gradient checking, and the k-means baseline.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pairclust/runner.hpp"

using namespace pairclust;

namespace {

struct CliOptions {
    ExperimentConfig cfg;
    std::string mode = "cluster_kl";
    std::string constraint_source = "sampled";
    std::string hidden = "500";
};

void apply_string_options(CliOptions& o) {
    if (o.mode == "cluster_kl")
        o.cfg.mode = TrainMode::ClusterKL;
    else if (o.mode == "classify_xent")
        o.cfg.mode = TrainMode::ClassifyXent;
    else if (o.mode == "embed_hinge")
        o.cfg.mode = TrainMode::EmbedHinge;
    else
        throw CLI::ValidationError("--mode must be cluster_kl, classify_xent, or embed_hinge");

    if (o.constraint_source == "sampled")
        o.cfg.constraint_source = ConstraintSource::SampledFromLabels;
    else if (o.constraint_source == "file")
        o.cfg.constraint_source = ConstraintSource::File;
    else if (o.constraint_source == "full")
        o.cfg.constraint_source = ConstraintSource::FullInBatch;
    else
        throw CLI::ValidationError("--constraint-source must be sampled, file, or full");

    o.cfg.hidden.clear();
    std::stringstream ss(o.hidden);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) o.cfg.hidden.push_back(std::stoull(tok));
}

void add_train_options(CLI::App* app, CliOptions& o) {
    app->set_config("--config", "", "key=value config file; command line overrides it");
    app->add_option("--data-images", o.cfg.data_images, "training images, IDX format");
    app->add_option("--data-labels", o.cfg.data_labels, "training labels, IDX format");
    app->add_option("--data-csv", o.cfg.data_csv, "training dataset, CSV (label,f1,...,fd)");
    app->add_option("--test-images", o.cfg.test_images, "test images, IDX format");
    app->add_option("--test-labels", o.cfg.test_labels, "test labels, IDX format");
    app->add_option("--test-csv", o.cfg.test_csv, "test dataset, CSV");
    app->add_option("--per-class", o.cfg.per_class, "subset size per class (0 = all)");
    app->add_option("--data-seed", o.cfg.data_seed, "subset permutation seed");
    app->add_flag("--no-normalize", [&](std::int64_t) { o.cfg.normalize_features = false; },
                  "skip zero-mean unit-variance normalization");
    app->add_option("--hidden", o.hidden, "hidden layer widths, comma separated");
    app->add_option("--k", o.cfg.k, "output cluster nodes");
    app->add_option("--mode", o.mode, "cluster_kl | classify_xent | embed_hinge");
    app->add_option("--margin", o.cfg.loss.margin, "hinge margin (nats)");
    app->add_option("--epsilon", o.cfg.loss.epsilon, "probability clamp floor");
    app->add_flag("--mean-loss", o.cfg.loss.mean_normalize, "average loss over tuples");
    app->add_option("--lr", o.cfg.lr, "learning rate");
    app->add_option("--momentum", o.cfg.momentum, "SGD momentum");
    app->add_option("--batch-tuples", o.cfg.batch_tuples, "tuples per batch (constraint modes)");
    app->add_option("--batch-size", o.cfg.batch_size, "samples per batch (classify/full modes)");
    app->add_option("--epochs", o.cfg.epochs, "training epochs");
    app->add_option("--constraint-source", o.constraint_source, "sampled | file | full");
    app->add_option("--constraints-file", o.cfg.constraints_file, "constraint tuple file");
    app->add_option("--constraint-count", o.cfg.constraint_count, "sampled constraints m");
    app->add_option("--noise", o.cfg.noise_rate, "fraction of flipped constraints");
    app->add_option("--constraint-seed", o.cfg.constraint_seed, "constraint sampling seed");
    app->add_option("--restarts", o.cfg.restarts, "random restarts");
    app->add_option("--seed", o.cfg.seed, "master init seed");
    app->add_option("--kmeans-restarts", o.cfg.kmeans_restarts, "k-means restarts (embed eval)");
    app->add_option("--eval-k", o.cfg.eval_k, "clusters for embedding eval (0 = k)");
    app->add_option("--out", o.cfg.out_dir, "output directory");
}

Dataset load_eval_dataset(const std::string& images, const std::string& labels,
                          const std::string& csv) {
    if (!csv.empty()) return load_dataset_csv(csv);
    if (!images.empty()) return load_idx(images, labels);
    throw std::runtime_error("no dataset given (use --data-images/--data-labels or --data-csv)");
}

void print_metrics(const char* split, const EvalMetrics& m) {
    std::printf("%s: purity=%.4f nmi=%.4f hungarian_acc=%.4f argmax_acc=%.4f dominant=%zu\n",
                split, m.purity, m.nmi, m.hungarian_acc, m.argmax_acc, m.dominant);
}

int run_gradcheck() {
    Rng rng(7777);
    LossConfig cfg;
    const double step = 1e-5;
    double worst_kl = 0, worst_xent = 0, worst_hinge = 0, worst_net = 0;

    auto fd_check = [&](const Matrix& input, const Matrix& analytic, auto loss) {
        Matrix work = input;
        double worst = 0;
        for (std::size_t i = 0; i < work.data().size(); ++i) {
            const double orig = work.data()[i];
            work.data()[i] = orig + step;
            const double lp = loss(work);
            work.data()[i] = orig - step;
            const double lm = loss(work);
            work.data()[i] = orig;
            const double fd = (lp - lm) / (2 * step);
            const double g = analytic.data()[i];
            worst = std::max(worst, std::abs(g - fd) / std::max({std::abs(fd), std::abs(g), 1e-3}));
        }
        return worst;
    };

    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 2 + rng.below(7), k = 2 + rng.below(9);
        Matrix logits(n, k, 0.0);
        for (double& v : logits.data()) v = rng.uniform(-3.0, 3.0);
        std::vector<ConstraintTuple> tuples;
        for (std::size_t t = 0; t < 1 + rng.below(15); ++t) {
            std::size_t i = rng.below(n), j = rng.below(n);
            if (i != j) tuples.emplace_back(i, j, rng.uniform() < 0.5);
        }
        if (tuples.empty()) tuples.emplace_back(0, 1, true);

        auto [l1, g1] = batch_loss_and_logit_grad(logits, tuples, cfg);
        worst_kl = std::max(worst_kl, fd_check(logits, g1, [&](const Matrix& z) {
                                return batch_loss_and_logit_grad(z, tuples, cfg).first;
                            }));
        std::vector<std::size_t> labels(n);
        for (auto& l : labels) l = rng.below(k);
        auto [l2, g2] = cross_entropy_loss_and_grad(logits, labels);
        worst_xent = std::max(worst_xent, fd_check(logits, g2, [&](const Matrix& z) {
                                  return cross_entropy_loss_and_grad(z, labels).first;
                              }));
        auto [l3, g3] = hinge_embedding_loss_and_grad(logits, tuples, 2.0);
        worst_hinge = std::max(worst_hinge, fd_check(logits, g3, [&](const Matrix& e) {
                                   return hinge_embedding_loss_and_grad(e, tuples, 2.0).first;
                               }));

        // whole-network check through a 2-layer MLP
        std::vector<LayerSpec> specs{{3, 6, Activation::Relu}, {6, k, Activation::Identity}};
        NetworkParams params = init_params(specs, rng);
        Matrix x(n, 3, 0.0);
        for (double& v : x.data()) v = rng.uniform(-2.0, 2.0);
        ForwardTrace trace = forward(params, x);
        auto [loss, dlogits] = batch_loss_and_logit_grad(trace.logits(), tuples, cfg);
        Gradients grads = backward(params, trace, dlogits);
        for (std::size_t l = 0; l < specs.size(); ++l) {
            worst_net = std::max(
                worst_net, fd_check(params.weights[l], grads.weights[l], [&](const Matrix& w) {
                    NetworkParams probe = params;
                    probe.weights[l] = w;
                    ForwardTrace t2 = forward(probe, x);
                    return batch_loss_and_logit_grad(t2.logits(), tuples, cfg).first;
                }));
        }
    }
    std::printf("contrastive-kl  max relative error: %.3g\n", worst_kl);
    std::printf("cross-entropy   max relative error: %.3g\n", worst_xent);
    std::printf("hinge-embedding max relative error: %.3g\n", worst_hinge);
    std::printf("through-network max relative error: %.3g\n", worst_net);
    const bool ok = worst_kl < 1e-4 && worst_xent < 1e-4 && worst_hinge < 1e-4 && worst_net < 1e-3;
    std::printf("gradcheck: %s\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pairwise-constraint clustering networks"};
    app.require_subcommand(1);

    CliOptions train_opts;
    CLI::App* cmd_train = app.add_subcommand("train", "train a network and write reports");
    add_train_options(cmd_train, train_opts);

    // eval
    std::string eval_checkpoint, eval_images, eval_labels, eval_csv;
    std::size_t eval_k = 0;
    CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on a labeled dataset");
    cmd_eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
    cmd_eval->add_option("--data-images", eval_images, "images, IDX");
    cmd_eval->add_option("--data-labels", eval_labels, "labels, IDX");
    cmd_eval->add_option("--data-csv", eval_csv, "dataset CSV");
    cmd_eval->add_option("--k", eval_k, "cluster count (0 = network output dim)");

    // sweep
    CliOptions sweep_opts;
    std::string sweep_axis, sweep_values, sweep_out;
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a train+eval sweep over one axis");
    add_train_options(cmd_sweep, sweep_opts);
    cmd_sweep->add_option("--axis", sweep_axis, "constraint_count | noise_rate | k")->required();
    cmd_sweep->add_option("--values", sweep_values, "comma-separated axis values")->required();
    cmd_sweep->add_option("--sweep-out", sweep_out, "output CSV path")->required();

    // compare
    CliOptions compare_opts;
    std::string compare_out;
    CLI::App* cmd_compare =
        app.add_subcommand("compare", "clustering vs classification with shared seeds");
    add_train_options(cmd_compare, compare_opts);
    cmd_compare->add_option("--compare-out", compare_out, "output CSV path")->required();

    // gen-constraints
    std::string gc_images, gc_labels, gc_csv, gc_out;
    std::size_t gc_count = 0;
    double gc_noise = 0.0;
    std::uint64_t gc_seed = 2;
    CLI::App* cmd_genc = app.add_subcommand("gen-constraints", "sample a constraint file");
    cmd_genc->add_option("--data-images", gc_images, "images, IDX");
    cmd_genc->add_option("--data-labels", gc_labels, "labels, IDX");
    cmd_genc->add_option("--data-csv", gc_csv, "dataset CSV");
    cmd_genc->add_option("--count", gc_count, "constraints to sample")->required();
    cmd_genc->add_option("--noise", gc_noise, "fraction of flipped relationships");
    cmd_genc->add_option("--seed", gc_seed, "sampling seed");
    cmd_genc->add_option("--out", gc_out, "output constraint file")->required();

    // gen-blobs
    std::size_t gb_classes = 4, gb_dim = 2, gb_per_class = 100;
    double gb_sigma = 0.5, gb_separation = 5.0;
    std::uint64_t gb_seed = 1;
    std::string gb_out;
    CLI::App* cmd_genb = app.add_subcommand("gen-blobs", "generate a gaussian-blob CSV dataset");
    cmd_genb->add_option("--classes", gb_classes, "number of blobs");
    cmd_genb->add_option("--dim", gb_dim, "feature dimension");
    cmd_genb->add_option("--per-class", gb_per_class, "samples per blob");
    cmd_genb->add_option("--sigma", gb_sigma, "blob standard deviation");
    cmd_genb->add_option("--separation", gb_separation, "center scale");
    cmd_genb->add_option("--seed", gb_seed, "generation seed");
    cmd_genb->add_option("--out", gb_out, "output CSV path")->required();

    // gradcheck
    app.add_subcommand("gradcheck", "finite-difference check of every loss gradient");

    // kmeans-baseline
    std::string km_images, km_labels, km_csv, km_metric = "euclidean", km_checkpoint;
    std::size_t km_k = 10, km_restarts = 50, km_layer = 0;
    bool km_use_embedding = false;
    std::uint64_t km_seed = 1;
    CLI::App* cmd_km = app.add_subcommand("kmeans-baseline", "k-means on raw or embedded data");
    cmd_km->add_option("--data-images", km_images, "images, IDX");
    cmd_km->add_option("--data-labels", km_labels, "labels, IDX");
    cmd_km->add_option("--data-csv", km_csv, "dataset CSV");
    cmd_km->add_option("--k", km_k, "clusters");
    cmd_km->add_option("--metric", km_metric, "euclidean | cosine");
    cmd_km->add_option("--restarts", km_restarts, "random restarts");
    cmd_km->add_option("--seed", km_seed, "seed");
    cmd_km->add_option("--checkpoint", km_checkpoint, "embed through this checkpoint first");
    cmd_km->add_option("--layer", km_layer, "embedding layer index (with --checkpoint)");
    cmd_km->add_flag("--embed", km_use_embedding, "use checkpoint embeddings");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_train->parsed()) {
            apply_string_options(train_opts);
            RunReport report = train(train_opts.cfg);
            print_metrics("train", report.train_metrics);
            if (report.test_metrics) print_metrics("test", *report.test_metrics);
            std::printf("chosen restart: %zu (final loss %.6g)\n", report.chosen_restart,
                        report.restarts[report.chosen_restart].final_loss);
            return 0;
        }
        if (cmd_eval->parsed()) {
            NetworkParams params = load_checkpoint(eval_checkpoint);
            Dataset data = load_eval_dataset(eval_images, eval_labels, eval_csv);
            const std::size_t k = eval_k ? eval_k : params.specs.back().output_dim;
            EvalMetrics m = evaluate(params, data, k);
            print_metrics("eval", m);
            return 0;
        }
        if (cmd_sweep->parsed()) {
            apply_string_options(sweep_opts);
            SweepAxis axis;
            if (sweep_axis == "constraint_count")
                axis = SweepAxis::ConstraintCount;
            else if (sweep_axis == "noise_rate")
                axis = SweepAxis::NoiseRate;
            else if (sweep_axis == "k")
                axis = SweepAxis::K;
            else
                throw std::runtime_error("--axis must be constraint_count, noise_rate, or k");
            std::vector<double> values;
            std::stringstream ss(sweep_values);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) values.push_back(std::stod(tok));
            std::ofstream os(sweep_out);
            if (!os) throw std::runtime_error("cannot open " + sweep_out);
            sweep(sweep_opts.cfg, axis, values, os);
            std::printf("sweep written to %s\n", sweep_out.c_str());
            return 0;
        }
        if (cmd_compare->parsed()) {
            apply_string_options(compare_opts);
            std::ofstream os(compare_out);
            if (!os) throw std::runtime_error("cannot open " + compare_out);
            compare_modes(compare_opts.cfg, os);
            std::printf("comparison written to %s\n", compare_out.c_str());
            return 0;
        }
        if (cmd_genc->parsed()) {
            Dataset data = load_eval_dataset(gc_images, gc_labels, gc_csv);
            ConstraintSet full = constraints_from_labels(data.labels);
            Rng rng(mix_seed(gc_seed, 0));
            ConstraintSet set = sample_constraints(full, gc_count, rng);
            if (gc_noise > 0.0) {
                Rng nrng(mix_seed(gc_seed, 1));
                set = flip_constraints(set, gc_noise, nrng);
            }
            save_constraints(set, gc_out);
            std::printf("%zu constraints written to %s\n", set.tuples.size(), gc_out.c_str());
            return 0;
        }
        if (cmd_genb->parsed()) {
            Rng center_rng(mix_seed(gb_seed, 0));
            Matrix centers(gb_classes, gb_dim, 0.0);
            if (gb_dim == 2) {
                for (std::size_t c = 0; c < gb_classes; ++c) {
                    const double a = 2.0 * M_PI * static_cast<double>(c) /
                                     static_cast<double>(gb_classes);
                    centers(c, 0) = gb_separation * std::cos(a);
                    centers(c, 1) = gb_separation * std::sin(a);
                }
            } else {
                for (double& v : centers.data()) v = gb_separation * center_rng.normal();
            }
            Rng rng(mix_seed(gb_seed, 1));
            Dataset ds = gen_blobs(centers, gb_sigma, gb_per_class, rng);
            save_dataset_csv(ds, gb_out);
            std::printf("%zu samples written to %s\n", ds.size(), gb_out.c_str());
            return 0;
        }
        if (app.get_subcommand("gradcheck")->parsed()) return run_gradcheck();
        if (cmd_km->parsed()) {
            Dataset data = load_eval_dataset(km_images, km_labels, km_csv);
            Matrix points = data.features;
            if (km_use_embedding || !km_checkpoint.empty()) {
                NetworkParams params = load_checkpoint(km_checkpoint);
                points = embed(params, data.features, km_layer);
            }
            const KmeansMetric metric =
                km_metric == "cosine" ? KmeansMetric::Cosine : KmeansMetric::Euclidean;
            Rng rng(km_seed);
            KmeansResult r = kmeans(points, km_k, metric, km_restarts, rng);
            std::printf("inertia=%.6g restarts=%zu\n", r.inertia, r.restarts_run);
            if (data.labeled()) {
                ContingencyTable t = contingency(r.assignments, data.labels, km_k,
                                                 data.class_count);
                std::printf("purity=%.4f nmi=%.4f dominant=%zu\n", purity(t), nmi(t),
                            dominant_clusters(t, 0.01));
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
