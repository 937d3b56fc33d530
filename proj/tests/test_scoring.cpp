#include <doctest.h>

#include <cmath>
#include <set>

#include "latentseg/scoring.hpp"
#include "testutil.hpp"

using namespace latentseg;
using namespace testutil;

namespace {

// Two planted clusters with different risk drivers plus label noise.
struct ToyExperiment {
    Matrix x;
    std::vector<int> y;
    std::vector<int> clusters;
};

ToyExperiment toy_experiment(std::size_t n, std::uint64_t seed) {
    ToyExperiment t;
    t.x = Matrix(n, 4);
    t.y.resize(n);
    t.clusters.resize(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(rng.index(2));
        t.clusters[i] = c;
        for (std::size_t j = 0; j < 4; ++j) t.x(i, j) = rng.normal();
        const double driver = c == 0 ? t.x(i, 0) : t.x(i, 1);
        const double p = 1.0 / (1.0 + std::exp(-(driver * 1.5 - 2.0)));
        t.y[i] = rng.uniform() < p ? 1 : 0;
    }
    return t;
}

} // namespace

TEST_SUITE_BEGIN("scoring");

TEST_CASE("train_classifier: separable data reaches AUC >= 0.99") {
    Rng rng(1);
    const std::size_t n = 400;
    Matrix x(n, 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y[i] = x(i, 0) - x(i, 1) > 0.3 ? 1 : 0;
    }
    ClassifierArch arch;
    arch.epochs = 300;
    ResampleConfig rc;
    const Classifier c = train_classifier(x, y, arch, rc, 7);
    const auto scores = classifier_scores(c, x);
    CHECK(auc(scores, y) >= 0.99);
    for (double s : scores) {
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
}

TEST_CASE("train_classifier: deterministic per seed") {
    auto t = toy_experiment(300, 2);
    ClassifierArch arch;
    arch.epochs = 30;
    ResampleConfig rc;
    const Classifier a = train_classifier(t.x, t.y, arch, rc, 11);
    const Classifier b = train_classifier(t.x, t.y, arch, rc, 11);
    for (std::size_t li = 0; li < a.net.layers.size(); ++li)
        CHECK(bitwise_equal(a.net.layers[li].w, b.net.layers[li].w));
    CHECK(a.beta == b.beta);
}

TEST_CASE("train_classifier: single-class data rejected") {
    Matrix x(20, 2);
    ClassifierArch arch;
    ResampleConfig rc;
    CHECK_THROWS_AS((void)train_classifier(x, std::vector<int>(20, 0), arch, rc, 1),
                    ValidationError);
}

TEST_CASE("classifier_pd applies the bias correction") {
    auto t = toy_experiment(400, 3);
    ClassifierArch arch;
    arch.epochs = 30;
    ResampleConfig rc;
    const Classifier c = train_classifier(t.x, t.y, arch, rc, 5);
    CHECK(c.beta < 1.0); // balanced training raised the minority prior
    const auto raw = classifier_scores(c, t.x);
    const auto pd = classifier_pd(c, t.x);
    for (std::size_t i = 0; i < raw.size(); ++i) CHECK(pd[i] <= raw[i] + 1e-12);
    CHECK(auc(raw, t.y) == doctest::Approx(auc(pd, t.y)).epsilon(1e-12));
}

TEST_CASE("unpaired_ttest: identical samples give p = 1") {
    const std::vector<double> a = {0.2, 0.3, 0.25, 0.28};
    CHECK(unpaired_ttest(a, a) == doctest::Approx(1.0));
}

TEST_CASE("unpaired_ttest: well-separated samples give p < 0.001") {
    std::vector<double> a, b;
    for (int i = 0; i < 10; ++i) {
        a.push_back(1.0 + 0.01 * (i % 3));
        b.push_back(0.0 + 0.01 * (i % 3));
    }
    CHECK(unpaired_ttest(a, b) < 0.001);
}

TEST_CASE("unpaired_ttest: matches an independently computed Welch p-value") {
    const std::vector<double> a = {0.5, 0.6, 0.7};
    const std::vector<double> b = {0.55, 0.62, 0.66};
    CHECK(unpaired_ttest(a, b) == doctest::Approx(0.8889430659318134).epsilon(1e-9));
}

TEST_CASE("unpaired_ttest: permutation within a sample changes nothing") {
    const std::vector<double> a = {0.4, 0.1, 0.9, 0.3};
    const std::vector<double> b = {0.2, 0.8, 0.5, 0.6};
    const std::vector<double> a_perm = {0.9, 0.4, 0.3, 0.1};
    CHECK(unpaired_ttest(a, b) == doctest::Approx(unpaired_ttest(a_perm, b)).epsilon(1e-15));
}

TEST_CASE("unpaired_ttest: zero variance in both") {
    const std::vector<double> same = {0.5, 0.5, 0.5};
    const std::vector<double> other = {0.6, 0.6, 0.6};
    CHECK(unpaired_ttest(same, same) == 1.0);
    CHECK(unpaired_ttest(same, other) == 0.0);
}

TEST_CASE("run_experiment: two-fold smoke emits a complete table") {
    auto t = toy_experiment(1200, 4);
    ExperimentConfig cfg;
    cfg.folds = 2;
    cfg.seed = 5;
    cfg.grid[0].epochs = 20;
    const PerformanceTable table = run_experiment(t.x, t.y, t.clusters, cfg);
    REQUIRE(table.clusters.size() == 2);
    for (const auto& c : table.clusters) {
        REQUIRE(c.feasible);
        CHECK(c.segment_folds.size() == 2);
        CHECK(c.portfolio_folds.size() == 2);
        CHECK(c.p_value_h >= 0.0);
        CHECK(c.p_value_h <= 1.0);
        for (const auto& r : c.segment_folds) {
            CHECK(r.auc >= 0.0);
            CHECK(r.auc <= 1.0);
            CHECK(r.h >= 0.0);
            CHECK(r.h <= 1.0);
            CHECK(r.ks >= 0.0);
            CHECK(r.ks <= 1.0);
            CHECK(r.gini >= -1.0);
            CHECK(r.gini <= 1.0);
        }
    }
}

TEST_CASE("run_experiment: fold splits never leak and stay stratified") {
    auto t = toy_experiment(1500, 6);
    ExperimentConfig cfg;
    cfg.folds = 3;
    cfg.seed = 7;
    cfg.grid[0].epochs = 10;

    std::size_t calls = 0;
    FoldObserver obs = [&](std::size_t, const std::vector<std::size_t>& train,
                           const std::vector<std::size_t>& test) {
        ++calls;
        std::set<std::size_t> tr(train.begin(), train.end());
        for (auto i : test) CHECK(tr.count(i) == 0);
        CHECK(train.size() + test.size() == 1500);

        // The portfolio training rows per cluster equal the segment models'
        // training rows exactly (a shared stratified split).
        std::vector<std::size_t> per_cluster(2, 0);
        for (auto i : train) per_cluster[t.clusters[i]] += 1;
        std::vector<std::size_t> cluster_total(2, 0);
        for (int c : t.clusters) cluster_total[c] += 1;
        for (int c = 0; c < 2; ++c) {
            const double expected = 0.7 * static_cast<double>(cluster_total[c]);
            CHECK(std::fabs(static_cast<double>(per_cluster[c]) - expected) <= 2.0);
        }
    };
    const PerformanceTable table = run_experiment(t.x, t.y, t.clusters, cfg, &obs);
    CHECK(calls == 3);

    // Reported means are the arithmetic fold means.
    for (const auto& c : table.clusters) {
        double h = 0.0;
        for (const auto& r : c.segment_folds) h += r.h;
        CHECK(c.segment_mean.h == doctest::Approx(h / c.segment_folds.size()).epsilon(1e-12));
    }
}

TEST_CASE("run_experiment: infeasible cluster excluded with a note") {
    auto t = toy_experiment(900, 8);
    // Starve cluster 2: only 6 rows, 3 events.
    for (std::size_t i = 0; i < 6; ++i) {
        t.clusters[i] = 2;
        t.y[i] = i % 2;
    }
    ExperimentConfig cfg;
    cfg.folds = 2;
    cfg.seed = 9;
    cfg.grid[0].epochs = 10;
    const PerformanceTable table = run_experiment(t.x, t.y, t.clusters, cfg);
    REQUIRE(table.clusters.size() == 3);
    CHECK_FALSE(table.clusters[2].feasible);
    CHECK(table.clusters[2].note.find("excluded") != std::string::npos);
    CHECK(table.clusters[2].segment_folds.empty());
}

TEST_SUITE_END();
