#include <doctest.h>

#include <cmath>

#include "latentseg/imbalance.hpp"
#include "latentseg/metrics.hpp"
#include "testutil.hpp"

using namespace latentseg;
using namespace testutil;

namespace {

std::pair<Matrix, std::vector<int>> imbalanced_data(std::size_t n_maj, std::size_t n_min,
                                                    std::uint64_t seed) {
    Matrix x(n_maj + n_min, 3);
    std::vector<int> y(n_maj + n_min, 0);
    Rng rng(seed);
    for (std::size_t i = 0; i < x.rows; ++i) {
        y[i] = i >= n_maj ? 1 : 0;
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal() + (y[i] ? 2.0 : 0.0);
    }
    return {x, y};
}

} // namespace

TEST_SUITE_BEGIN("imbalance");

TEST_CASE("oversample: ratio arithmetic reaches 900/900") {
    auto [x, y] = imbalanced_data(900, 100, 1);
    ResampleConfig cfg;
    cfg.ratio = 1.0;
    cfg.seed = 2;
    const Resampled r = oversample(x, y, cfg);
    std::size_t ev = 0, ne = 0;
    for (int v : r.y) (v ? ev : ne) += 1;
    CHECK(ne == 900);
    CHECK(ev == 900);
    CHECK(r.n_original == 1000);
}

TEST_CASE("oversample: originals are untouched and lead the output") {
    auto [x, y] = imbalanced_data(200, 40, 3);
    ResampleConfig cfg;
    cfg.ratio = 0.5;
    cfg.seed = 4;
    const Resampled r = oversample(x, y, cfg);
    for (std::size_t i = 0; i < x.rows; ++i) {
        CHECK(r.y[i] == y[i]);
        for (std::size_t j = 0; j < x.cols; ++j) CHECK(r.x(i, j) == x(i, j));
    }
    for (std::size_t i = x.rows; i < r.x.rows; ++i) CHECK(r.y[i] == 1);
}

TEST_CASE("oversample: synthetic rows lie between two original minority rows") {
    auto [x, y] = imbalanced_data(300, 25, 5);
    ResampleConfig cfg;
    cfg.ratio = 0.5;
    cfg.neighbors = 5;
    cfg.seed = 6;
    const Resampled r = oversample(x, y, cfg);

    std::vector<std::size_t> minority;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == 1) minority.push_back(i);

    for (std::size_t s = x.rows; s < r.x.rows; ++s) {
        bool on_some_segment = false;
        for (std::size_t a : minority) {
            for (std::size_t b : minority) {
                if (a == b) continue;
                // s = a + u (b - a) for one common u in [0,1] across coordinates
                double u = -1.0;
                bool ok = true;
                for (std::size_t j = 0; j < x.cols && ok; ++j) {
                    const double den = x(b, j) - x(a, j);
                    const double num = r.x(s, j) - x(a, j);
                    if (std::fabs(den) < 1e-12) {
                        ok = std::fabs(num) < 1e-9;
                        continue;
                    }
                    const double uj = num / den;
                    if (u < 0.0)
                        u = uj;
                    else
                        ok = std::fabs(uj - u) < 1e-9;
                }
                if (ok && u >= -1e-12 && u <= 1.0 + 1e-12) {
                    on_some_segment = true;
                    break;
                }
            }
            if (on_some_segment) break;
        }
        CHECK(on_some_segment);
    }
}

TEST_CASE("oversample: no-op when the ratio is already met") {
    auto [x, y] = imbalanced_data(100, 60, 7);
    ResampleConfig cfg;
    cfg.ratio = 0.5; // target 50 < current 60
    const Resampled r = oversample(x, y, cfg);
    CHECK(r.x.rows == x.rows);
    CHECK(r.y == y);
}

TEST_CASE("oversample: deterministic per seed, different across seeds") {
    auto [x, y] = imbalanced_data(400, 50, 8);
    ResampleConfig cfg;
    cfg.ratio = 1.0;
    cfg.seed = 9;
    const Resampled a = oversample(x, y, cfg);
    const Resampled b = oversample(x, y, cfg);
    CHECK(bitwise_equal(a.x, b.x));
    cfg.seed = 10;
    const Resampled c = oversample(x, y, cfg);
    CHECK_FALSE(bitwise_equal(a.x, c.x));
}

TEST_CASE("oversample: too few minority rows") {
    auto [x, y] = imbalanced_data(50, 4, 11); // neighbors default 5 needs 6
    ResampleConfig cfg;
    cfg.ratio = 1.0;
    CHECK_THROWS_AS((void)oversample(x, y, cfg), NumericError);
    cfg.duplicate = true; // duplication fallback has no neighbor requirement
    const Resampled r = oversample(x, y, cfg);
    std::size_t ev = 0;
    for (int v : r.y) ev += v;
    CHECK(ev == 50);
}

TEST_CASE("oversample: class ratio lands within one row of the target") {
    auto [x, y] = imbalanced_data(777, 33, 12);
    ResampleConfig cfg;
    cfg.ratio = 0.63;
    cfg.seed = 13;
    const Resampled r = oversample(x, y, cfg);
    std::size_t ev = 0, ne = 0;
    for (int v : r.y) (v ? ev : ne) += 1;
    CHECK(std::fabs(static_cast<double>(ev) - 0.63 * static_cast<double>(ne)) <= 1.0);
}

TEST_CASE("calibrate: identity, endpoints, and the worked value") {
    CHECK(calibrate(0.37, 1.0) == doctest::Approx(0.37));
    CHECK(calibrate(0.0, 0.3) == 0.0);
    CHECK(calibrate(1.0, 0.3) == doctest::Approx(1.0));
    CHECK(calibrate(0.5, 0.1) == doctest::Approx(0.1 / 1.1).epsilon(1e-12));
}

TEST_CASE("calibrate: strictly increasing, hence rank metrics invariant") {
    Rng rng(14);
    const double beta = 0.12;
    std::vector<double> scores(300);
    std::vector<int> y(300);
    for (std::size_t i = 0; i < 300; ++i) {
        scores[i] = rng.uniform();
        y[i] = rng.uniform() < scores[i] ? 1 : 0;
    }
    std::vector<double> cal(300);
    for (std::size_t i = 0; i < 300; ++i) cal[i] = calibrate(scores[i], beta);
    for (std::size_t i = 1; i < 300; ++i)
        if (scores[i] > scores[i - 1]) CHECK(cal[i] > cal[i - 1]);

    CHECK(auc(scores, y) == doctest::Approx(auc(cal, y)).epsilon(1e-12));
    CHECK(ks(scores, y) == doctest::Approx(ks(cal, y)).epsilon(1e-12));
    CHECK(h_measure(scores, y) == doctest::Approx(h_measure(cal, y)).epsilon(1e-9));
}

TEST_CASE("calibration_beta: prior ratio") {
    CHECK(calibration_beta(0.05, 0.5) == doctest::Approx(0.1));
    CHECK_THROWS_AS(calibration_beta(0.05, 0.0), ValidationError);
}

TEST_SUITE_END();
