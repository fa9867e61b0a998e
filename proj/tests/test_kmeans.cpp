#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "pairclust/dataio.hpp"
#include "pairclust/kmeans.hpp"
#include "pairclust/metrics.hpp"

using namespace pairclust;

TEST_CASE("n == k puts each point in its own cluster with zero inertia") {
    Matrix pts(4, 2, {0, 0, 5, 0, 0, 5, 5, 5});
    Rng rng(1);
    KmeansResult r = kmeans(pts, 4, KmeansMetric::Euclidean, 3, rng);
    CHECK(r.inertia == Catch::Approx(0.0).margin(1e-12));
    std::set<std::size_t> distinct(r.assignments.begin(), r.assignments.end());
    CHECK(distinct.size() == 4);
}

TEST_CASE("two duplicate-pair clusters are found exactly") {
    Matrix pts(4, 2, {0, 0, 0, 0, 10, 10, 10, 10});
    Rng rng(2);
    KmeansResult r = kmeans(pts, 2, KmeansMetric::Euclidean, 5, rng);
    CHECK(r.inertia == Catch::Approx(0.0).margin(1e-12));
    CHECK(r.assignments[0] == r.assignments[1]);
    CHECK(r.assignments[2] == r.assignments[3]);
    CHECK(r.assignments[0] != r.assignments[2]);
}

TEST_CASE("separable gaussian blobs reach purity 1") {
    Matrix centers(3, 2, {0, 0, 5, 0, 0, 5});
    Rng gen(42);
    Dataset blobs = gen_blobs(centers, 0.1, 40, gen);
    Rng rng(7);
    KmeansResult r = kmeans(blobs.features, 3, KmeansMetric::Euclidean, 10, rng);
    ContingencyTable t = contingency(r.assignments, blobs.labels, 3, 3);
    CHECK(purity(t) == 1.0);
}

TEST_CASE("kmeans argument validation") {
    Matrix pts(3, 2, {1, 0, 0, 1, 1, 1});
    Rng rng(1);
    CHECK_THROWS(kmeans(pts, 5, KmeansMetric::Euclidean, 1, rng));
    CHECK_THROWS(kmeans(pts, 2, KmeansMetric::Euclidean, 0, rng));
    Matrix with_zero(3, 2, {1, 0, 0, 0, 1, 1});
    CHECK_THROWS(kmeans(with_zero, 2, KmeansMetric::Cosine, 1, rng));
}

TEST_CASE("cosine mode clusters by direction, not magnitude") {
    // two directions, scattered magnitudes
    Matrix pts(6, 2, {1, 0.01, 5, 0.02, 10, 0.0, 0.01, 1, 0.0, 7, 0.02, 2});
    Rng rng(3);
    KmeansResult r = kmeans(pts, 2, KmeansMetric::Cosine, 10, rng);
    CHECK(r.assignments[0] == r.assignments[1]);
    CHECK(r.assignments[1] == r.assignments[2]);
    CHECK(r.assignments[3] == r.assignments[4]);
    CHECK(r.assignments[4] == r.assignments[5]);
    CHECK(r.assignments[0] != r.assignments[3]);
}

TEST_CASE("kmeans with a fixed seed is deterministic") {
    Matrix centers(4, 3, {0, 0, 0, 5, 0, 0, 0, 5, 0, 0, 0, 5});
    Rng gen(11);
    Dataset blobs = gen_blobs(centers, 0.5, 25, gen);
    Rng a(99), b(99);
    KmeansResult ra = kmeans(blobs.features, 4, KmeansMetric::Euclidean, 5, a);
    KmeansResult rb = kmeans(blobs.features, 4, KmeansMetric::Euclidean, 5, b);
    CHECK(ra.assignments == rb.assignments);
    CHECK(ra.inertia == rb.inertia);
}

TEST_CASE("lloyd iterations never increase inertia") {
    // run single restarts and compare: more iterations can only improve
    Matrix centers(3, 2, {0, 0, 4, 0, 0, 4});
    Rng gen(5);
    Dataset blobs = gen_blobs(centers, 1.0, 30, gen);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t iters = 1; iters <= 16; iters *= 2) {
            Rng rng(seed);
            KmeansResult r = kmeans(blobs.features, 3, KmeansMetric::Euclidean, 1, rng, iters);
            CHECK(r.inertia <= prev + 1e-9);
            prev = r.inertia;
        }
    }
}

TEST_CASE("restart selection returns the minimum-inertia restart") {
    Matrix centers(5, 2, {0, 0, 9, 0, 0, 9, 9, 9, 4, 4});
    Rng gen(17);
    Dataset blobs = gen_blobs(centers, 0.8, 20, gen);
    Rng multi(23);
    KmeansResult best = kmeans(blobs.features, 5, KmeansMetric::Euclidean, 20, multi);
    // 20 restarts never lose to 1 restart from the same seed (restart 0 is shared)
    Rng one(23);
    KmeansResult single = kmeans(blobs.features, 5, KmeansMetric::Euclidean, 1, one);
    CHECK(best.inertia <= single.inertia + 1e-12);
    CHECK(best.restarts_run == 20);
}

TEST_CASE("embed returns the chosen layer's activations") {
    Rng rng(3);
    std::vector<LayerSpec> specs{{4, 6, Activation::Relu}, {6, 2, Activation::Identity}};
    NetworkParams p = init_params(specs, rng);
    Matrix x(3, 4, {1, 2, 3, 4, 0, 0, 0, 0, -1, -2, -3, -4});

    Matrix last = embed(p, x, 1);
    CHECK(last == forward(p, x).logits());

    Matrix hidden = embed(p, x, 0);
    CHECK(hidden.rows() == 3);
    CHECK(hidden.cols() == 6);

    for (auto& w : p.weights)
        for (double& v : w.data()) v = 0.0;
    Matrix zero = embed(p, x, 1);
    for (double v : zero.data()) CHECK(v == 0.0);

    CHECK_THROWS(embed(p, x, 2));
}
