#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "pairclust/constraints.hpp"

using namespace pairclust;

namespace {

std::set<std::tuple<std::size_t, std::size_t, bool>>
as_set(const ConstraintSet& s) {
    std::set<std::tuple<std::size_t, std::size_t, bool>> out;
    for (const auto& t : s.tuples) out.insert({t.i, t.j, t.similar});
    return out;
}

} // namespace

TEST_CASE("tuples canonicalize and reject self-pairs") {
    ConstraintTuple t(5, 2, true);
    CHECK(t.i == 2);
    CHECK(t.j == 5);
    CHECK_THROWS(ConstraintTuple(3, 3, false));
}

TEST_CASE("constraints_from_labels exhaustive cases") {
    ConstraintSet s = constraints_from_labels({0, 0, 1});
    REQUIRE(s.tuples.size() == 3);
    CHECK(as_set(s) == std::set<std::tuple<std::size_t, std::size_t, bool>>{
                           {0, 1, true}, {0, 2, false}, {1, 2, false}});

    ConstraintSet all_same = constraints_from_labels({2, 2, 2, 2});
    CHECK(all_same.tuples.size() == 6);
    for (const auto& t : all_same.tuples) CHECK(t.similar);

    CHECK_THROWS(constraints_from_labels({}));
}

TEST_CASE("balanced 10-class labels give roughly 1:9 similar:dissimilar") {
    std::vector<std::size_t> labels;
    for (std::size_t cls = 0; cls < 10; ++cls)
        for (int s = 0; s < 100; ++s) labels.push_back(cls);
    ConstraintSet full = constraints_from_labels(labels);
    std::size_t sim = 0;
    for (const auto& t : full.tuples)
        if (t.similar) ++sim;
    const std::size_t dis = full.tuples.size() - sim;
    CHECK(sim == 10 * (100 * 99) / 2);       // 49500
    CHECK(dis == full.tuples.size() - sim);  // 450000
    const double ratio = static_cast<double>(dis) / static_cast<double>(sim);
    CHECK(ratio == Catch::Approx(9.0).epsilon(0.02));
}

TEST_CASE("sample_constraints edge cases and determinism") {
    ConstraintSet full = constraints_from_labels({0, 0, 1, 1, 2});
    Rng rng(5);
    ConstraintSet all = sample_constraints(full, full.tuples.size(), rng);
    CHECK(as_set(all) == as_set(full));

    Rng rng2(5);
    ConstraintSet none = sample_constraints(full, 0, rng2);
    CHECK(none.tuples.empty());

    Rng a(9), b(9);
    ConstraintSet sa = sample_constraints(full, 4, a);
    ConstraintSet sb = sample_constraints(full, 4, b);
    CHECK(sa.tuples == sb.tuples);

    // no duplicates in the draw
    CHECK(as_set(sa).size() == 4);

    Rng c(1);
    CHECK_THROWS(sample_constraints(full, full.tuples.size() + 1, c));
}

TEST_CASE("flip_constraints exact count contract") {
    std::vector<std::size_t> labels;
    for (int i = 0; i < 50; ++i) labels.push_back(static_cast<std::size_t>(i % 5));
    ConstraintSet full = constraints_from_labels(labels);
    Rng srng(3);
    ConstraintSet set = sample_constraints(full, 1000, srng);

    Rng r0(7);
    ConstraintSet same = flip_constraints(set, 0.0, r0);
    CHECK(same.tuples == set.tuples);

    Rng r1(7);
    ConstraintSet inverted = flip_constraints(set, 1.0, r1);
    for (std::size_t i = 0; i < set.tuples.size(); ++i)
        CHECK(inverted.tuples[i].similar == !set.tuples[i].similar);

    Rng r2(7);
    ConstraintSet noisy = flip_constraints(set, 0.1, r2);
    std::size_t flipped = 0;
    for (std::size_t i = 0; i < set.tuples.size(); ++i)
        if (noisy.tuples[i].similar != set.tuples[i].similar) ++flipped;
    CHECK(flipped == 100);

    Rng r3(1);
    CHECK_THROWS(flip_constraints(set, 1.5, r3));
}

TEST_CASE("make_batches figure-2 scenario") {
    ConstraintSet set;
    set.n_samples = 5;
    set.tuples = {{1, 2, true}, {1, 3, false}, {3, 4, true}};
    Rng rng(1);
    auto batches = make_batches(set, 10, rng);
    REQUIRE(batches.size() == 1);
    CHECK(batches[0].sample_indices == std::vector<std::size_t>{1, 2, 3, 4});
    // each touched sample appears once; tuples remap into local coordinates
    std::set<std::tuple<std::size_t, std::size_t, bool>> locals;
    for (const auto& t : batches[0].tuples) locals.insert({t.i, t.j, t.similar});
    CHECK(locals == std::set<std::tuple<std::size_t, std::size_t, bool>>{
                        {0, 1, true}, {0, 2, false}, {2, 3, true}});
}

TEST_CASE("make_batches single tuple and dense dedup counting") {
    ConstraintSet single;
    single.n_samples = 10;
    single.tuples = {{7, 2, true}};
    Rng rng(2);
    auto b = make_batches(single, 4, rng);
    REQUIRE(b.size() == 1);
    CHECK(b[0].sample_indices.size() == 2);
    CHECK(b[0].tuples.size() == 1);

    // fully connected tuples over n samples: one batch of n samples
    const std::size_t n = 6;
    std::vector<std::size_t> labels(n, 0);
    ConstraintSet full = constraints_from_labels(labels);
    Rng rng2(3);
    auto dense = make_batches(full, full.tuples.size(), rng2);
    REQUIRE(dense.size() == 1);
    CHECK(dense[0].sample_indices.size() == n);
    CHECK(dense[0].tuples.size() == n * (n - 1) / 2);
}

TEST_CASE("make_batches covers every tuple exactly once per epoch") {
    std::vector<std::size_t> labels;
    for (int i = 0; i < 30; ++i) labels.push_back(static_cast<std::size_t>(i % 3));
    ConstraintSet full = constraints_from_labels(labels);
    Rng srng(11);
    ConstraintSet set = sample_constraints(full, 120, srng);

    Rng brng(13);
    auto batches = make_batches(set, 16, brng);
    std::multiset<std::tuple<std::size_t, std::size_t, bool>> covered;
    for (const auto& batch : batches) {
        CHECK(batch.sample_indices.size() <= 2 * batch.tuples.size());
        std::set<std::size_t> used;
        for (const auto& t : batch.tuples) {
            CHECK(t.i < batch.sample_indices.size());
            CHECK(t.j < batch.sample_indices.size());
            used.insert(t.i);
            used.insert(t.j);
            covered.insert({batch.sample_indices[t.i], batch.sample_indices[t.j], t.similar});
        }
        // every local index is referenced by at least one tuple
        CHECK(used.size() == batch.sample_indices.size());
    }
    std::multiset<std::tuple<std::size_t, std::size_t, bool>> expected;
    for (const auto& t : set.tuples) expected.insert({t.i, t.j, t.similar});
    CHECK(covered == expected);
}

TEST_CASE("similar-component majority vote recovers the label partition") {
    // union-find over similar edges of the full constraint set reconstructs
    // the label partition on small instances
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.below(9);
        std::vector<std::size_t> labels(n);
        for (auto& l : labels) l = rng.below(3);
        ConstraintSet full = constraints_from_labels(labels);

        std::vector<std::size_t> parent(n);
        for (std::size_t i = 0; i < n; ++i) parent[i] = i;
        std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
            return parent[x] == x ? x : parent[x] = find(parent[x]);
        };
        for (const auto& t : full.tuples)
            if (t.similar) parent[find(t.i)] = find(t.j);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                CHECK((find(i) == find(j)) == (labels[i] == labels[j]));
    }
}

TEST_CASE("constraint file round trip") {
    ConstraintSet set;
    set.n_samples = 12;
    set.tuples = {{0, 3, true}, {2, 7, false}, {1, 11, true}};
    std::stringstream ss;
    save_constraints(set, ss);
    ConstraintSet back = parse_constraints(ss);
    CHECK(back.n_samples == 12);
    CHECK(back.tuples == set.tuples);
}

TEST_CASE("constraint parser accepts comments and rejects junk") {
    std::stringstream ok("# comment\n0,1,+1\n2,3,-1\n");
    ConstraintSet s = parse_constraints(ok);
    REQUIRE(s.tuples.size() == 2);
    CHECK(s.tuples[0].similar);
    CHECK(!s.tuples[1].similar);

    std::stringstream bad("0,1,2\n");
    CHECK_THROWS(parse_constraints(bad));
}
