#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "latentseg/cluster.hpp"
#include "testutil.hpp"

using namespace latentseg;
using namespace testutil;

namespace {

// Brute-force agglomeration: rescan every active pair each merge. Same
// Lance-Williams updates, O(n^3); the independent oracle for bipartition.
std::vector<int> naive_two_way(const Matrix& pts, Linkage linkage) {
    const std::size_t n = pts.rows;
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d(i, j) = sq_dist(pts.row(i), pts.row(j));
    std::vector<char> alive(n, 1);
    std::vector<double> size(n, 1.0);
    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t i = 0; i < n; ++i) members[i] = {i};

    std::size_t n_alive = n;
    while (n_alive > 2) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!alive[j]) continue;
                if (d(i, j) < best) {
                    best = d(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        for (std::size_t k = 0; k < n; ++k) {
            if (!alive[k] || k == bi || k == bj) continue;
            double nd;
            if (linkage == Linkage::complete) {
                nd = std::max(d(bi, k), d(bj, k));
            } else {
                const double tot = size[bi] + size[bj] + size[k];
                nd = ((size[bi] + size[k]) * d(bi, k) + (size[bj] + size[k]) * d(bj, k) -
                      size[k] * d(bi, bj)) /
                     tot;
            }
            d(bi, k) = nd;
            d(k, bi) = nd;
        }
        members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
        size[bi] += size[bj];
        alive[bj] = 0;
        --n_alive;
    }
    std::vector<std::size_t> sides;
    for (std::size_t i = 0; i < n; ++i)
        if (alive[i]) sides.push_back(i);
    std::vector<int> labels(n, 0);
    // Lowest member index gets label 0, mirroring bipartition's convention.
    const bool swap = *std::min_element(members[sides[1]].begin(), members[sides[1]].end()) <
                      *std::min_element(members[sides[0]].begin(), members[sides[0]].end());
    for (auto i : members[sides[swap ? 0 : 1]]) labels[i] = 1;
    return labels;
}

} // namespace

TEST_SUITE_BEGIN("cluster");

TEST_CASE("bipartition: separable blobs split exactly") {
    auto [pts, truth] = gaussian_blobs({{0.0, 0.0}, {10.0, 10.0}}, 40, 0.5, 3);
    const auto split = bipartition(pts, Linkage::ward, 2000, 1);
    CHECK(adjusted_rand_index(split.labels, truth) == doctest::Approx(1.0));
}

TEST_CASE("bipartition: two points, one per side, centroids are the points") {
    const Matrix pts = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    const auto split = bipartition(pts, Linkage::ward, 2000, 1);
    CHECK(split.labels == std::vector<int>{0, 1});
    CHECK(split.c1 == std::vector<double>{1.0, 2.0});
    CHECK(split.c2 == std::vector<double>{3.0, 4.0});
}

TEST_CASE("bipartition: identical points are a degenerate split") {
    Matrix pts(5, 2);
    for (double& v : pts.data) v = 1.0;
    CHECK_THROWS_AS((void)bipartition(pts, Linkage::ward, 2000, 1), NumericError);
}

TEST_CASE("bipartition equals the brute-force oracle below the cap") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
        const std::size_t n = 40 + 32 * seed; // up to 200
        const Matrix pts = random_matrix(n, 3, seed);
        for (Linkage linkage : {Linkage::ward, Linkage::complete}) {
            const auto fast = bipartition(pts, linkage, 2000, seed);
            const auto slow = naive_two_way(pts, linkage);
            CHECK(adjusted_rand_index(fast.labels, slow) == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("bipartition: above the cap, labels propagate to every row") {
    auto [pts, truth] = gaussian_blobs({{0.0, 0.0}, {12.0, 0.0}}, 1500, 0.8, 9);
    const auto split = bipartition(pts, Linkage::ward, 500, 2);
    CHECK(split.labels.size() == 3000);
    CHECK(adjusted_rand_index(split.labels, truth) > 0.999);
}

TEST_CASE("label_latent: four planted blobs recovered with permissive parameters") {
    auto [pts, truth] =
        gaussian_blobs({{0, 0}, {9, 0}, {0, 9}, {9, 9}}, 250, 0.5, 17);
    ClusterParams p;
    p.n_min = 50;
    p.rho = 1.0;
    p.seed = 4;
    std::vector<int> y(pts.rows, 0);
    y[0] = 1;
    const ClusterModel m = label_latent(pts, y, p);
    CHECK(m.k == 4);
    CHECK(adjusted_rand_index(m.labels, truth) >= 0.99);
    // Post-hoc: accepted splits satisfy both predicates.
    for (const auto& s : m.accepted_splits) {
        CHECK(s.n1 > p.n_min);
        CHECK(s.n2 > p.n_min);
        CHECK(s.centroid_distance > p.rho);
    }
}

TEST_CASE("label_latent: rho above the data diameter keeps one cluster") {
    auto [pts, truth] = gaussian_blobs({{0, 0}, {5, 5}}, 100, 0.5, 21);
    ClusterParams p;
    p.n_min = 10;
    p.rho = 100.0;
    const ClusterModel m = label_latent(pts, std::vector<int>(pts.rows, 0), p);
    CHECK(m.k == 1);
    CHECK(m.sizes[0] == pts.rows);
}

TEST_CASE("label_latent: n_min above half the data keeps one cluster") {
    auto [pts, truth] = gaussian_blobs({{0, 0}, {5, 5}}, 100, 0.5, 22);
    ClusterParams p;
    p.n_min = 101;
    p.rho = 0.0;
    const ClusterModel m = label_latent(pts, std::vector<int>(pts.rows, 0), p);
    CHECK(m.k == 1);
}

TEST_CASE("label_latent: default rates computed per cluster") {
    auto [pts, truth] = gaussian_blobs({{0, 0}, {8, 8}}, 200, 0.4, 23);
    std::vector<int> y(pts.rows, 0);
    for (std::size_t i = 0; i < pts.rows; ++i)
        if (truth[i] == 1 && i % 4 == 0) y[i] = 1; // ~25% in blob 1 only
    ClusterParams p;
    p.n_min = 20;
    p.rho = 1.0;
    const ClusterModel m = label_latent(pts, y, p);
    REQUIRE(m.k == 2);
    const double hi = std::max(m.cluster_default_rate[0], m.cluster_default_rate[1]);
    const double lo = std::min(m.cluster_default_rate[0], m.cluster_default_rate[1]);
    CHECK(lo == doctest::Approx(0.0));
    CHECK(hi == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("label_latent: termination fuzz over random parameters") {
    Rng rng(29);
    for (int trial = 0; trial < 8; ++trial) {
        const std::size_t n = 200 + rng.index(4800);
        const Matrix pts = random_matrix(n, 2, 1000 + trial);
        ClusterParams p;
        p.n_min = 2 + rng.index(n / 2);
        p.rho = rng.uniform() * 2.0;
        p.seed = trial;
        std::vector<int> y(n, 0);
        const ClusterModel m = label_latent(pts, y, p);
        // Labels are a gapless partition 0..k-1 with every cluster above n_min.
        std::set<int> ids(m.labels.begin(), m.labels.end());
        CHECK(ids.size() == m.k);
        CHECK(*ids.begin() == 0);
        CHECK(*ids.rbegin() == static_cast<int>(m.k) - 1);
        std::size_t total = 0;
        for (auto s : m.sizes) {
            total += s;
            if (m.k > 1) CHECK(s > p.n_min);
        }
        CHECK(total == n);
    }
}

TEST_CASE("ch_index: hand-evaluated two-cluster value") {
    const Matrix pts = Matrix::from_rows({{0.0}, {0.2}, {10.0}, {10.2}});
    const std::vector<int> labels = {0, 0, 1, 1};
    CHECK(ch_index(pts, labels) == doctest::Approx(5000.0).epsilon(1e-9));
}

TEST_CASE("ch_index: separated blobs dominate random labels") {
    auto [pts, truth] = gaussian_blobs({{0, 0}, {6, 6}}, 150, 0.7, 31);
    Rng rng(32);
    std::vector<int> random_labels(pts.rows);
    for (auto& l : random_labels) l = static_cast<int>(rng.index(2));
    CHECK(ch_index(pts, truth) > 10.0 * ch_index(pts, random_labels));
}

TEST_CASE("ch_index: duplicating every point rescales through (n-k) only") {
    const Matrix pts = random_matrix(50, 2, 33);
    std::vector<int> labels(50);
    for (std::size_t i = 0; i < 50; ++i) labels[i] = i < 25 ? 0 : 1;
    const double base = ch_index(pts, labels);

    Matrix doubled(100, 2);
    std::vector<int> labels2(100);
    for (std::size_t i = 0; i < 100; ++i) {
        doubled.set_row(i, pts.row(i / 2));
        labels2[i] = labels[i / 2];
    }
    // Means unchanged, B and W both double: CH' = CH * (2n-k)/(n-k).
    const double predicted = base * (100.0 - 2.0) / (50.0 - 2.0);
    CHECK(ch_index(doubled, labels2) == doctest::Approx(predicted).epsilon(1e-9));
}

TEST_CASE("ch_index and bcdr: domain errors") {
    const Matrix pts = random_matrix(5, 2, 34);
    CHECK_THROWS_AS((void)ch_index(pts, std::vector<int>(5, 0)), NumericError);
    CHECK_THROWS_AS((void)bcdr({0.5}), NumericError);
}

TEST_CASE("bcdr: published five-cluster rates") {
    const double v = bcdr({0.0530, 0.1124, 0.0139, 0.0289, 0.0530});
    CHECK(v == doctest::Approx(0.07986).epsilon(1e-9));
}

TEST_CASE("bcdr: degenerate and two-cluster cases") {
    CHECK(bcdr({0.05, 0.05, 0.05}) == 0.0);
    CHECK(bcdr({0.01, 0.05}) == doctest::Approx(0.04).epsilon(1e-15));
}

TEST_CASE("ch_index and bcdr are label-permutation invariant") {
    auto [pts, truth] = gaussian_blobs({{0, 0}, {4, 4}, {8, 0}}, 60, 0.6, 35);
    std::vector<int> permuted(truth.size());
    const int perm[3] = {2, 0, 1};
    for (std::size_t i = 0; i < truth.size(); ++i) permuted[i] = perm[truth[i]];
    CHECK(ch_index(pts, truth) == doctest::Approx(ch_index(pts, permuted)).epsilon(1e-12));
    const std::vector<double> rates = {0.1, 0.4, 0.2};
    const std::vector<double> rates_perm = {0.2, 0.1, 0.4};
    CHECK(bcdr(rates) == doctest::Approx(bcdr(rates_perm)).epsilon(1e-15));
}

TEST_CASE("assign: exact centroid, tie rule, self-consistency") {
    auto [pts, truth] = gaussian_blobs({{0, 0}, {7, 0}, {0, 7}}, 150, 0.6, 37);
    ClusterParams p;
    p.n_min = 30;
    p.rho = 2.5; // above intra-blob split scale, below blob separation
    const ClusterModel m = label_latent(pts, std::vector<int>(pts.rows, 0), p);
    REQUIRE(m.k == 3);

    CHECK(assign_cluster(m, m.centroids.row(2)) == 2);

    // Equidistant point between centroids 0 and 1 goes to the lower id.
    std::vector<double> mid(m.centroids.cols);
    for (std::size_t j = 0; j < mid.size(); ++j)
        mid[j] = 0.5 * (m.centroids(0, j) + m.centroids(1, j));
    const std::size_t tie = assign_cluster(m, mid);
    CHECK(tie == std::min<std::size_t>(tie, assign_cluster(m, mid)));
    CHECK(sq_dist(mid, m.centroids.row(0)) == doctest::Approx(sq_dist(mid, m.centroids.row(1))));
    CHECK(tie == 0);

    std::size_t agree = 0;
    for (std::size_t i = 0; i < pts.rows; ++i)
        agree += assign_cluster(m, pts.row(i)) == static_cast<std::size_t>(m.labels[i]) ? 1 : 0;
    CHECK(static_cast<double>(agree) / pts.rows >= 0.95);
}

TEST_CASE("linkage_merges: n-1 merges, heights sorted, sizes plausible") {
    const Matrix pts = random_matrix(30, 2, 39);
    const auto merges = linkage_merges(pts, Linkage::ward);
    CHECK(merges.size() == 29);
    for (std::size_t i = 1; i < merges.size(); ++i)
        CHECK(merges[i - 1].distance <= merges[i].distance);
    CHECK(merges.back().size <= 30);
}

TEST_SUITE_END();
