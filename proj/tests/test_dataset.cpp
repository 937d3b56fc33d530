#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "latentseg/dataset.hpp"
#include "testutil.hpp"

using namespace latentseg;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

CsvSchema small_schema() {
    CsvSchema s;
    SchemaColumn label;
    label.name = "bad";
    label.role = SchemaColumn::Role::label;
    SchemaColumn age;
    age.name = "age";
    age.meta.name = "age";
    SchemaColumn region;
    region.name = "region";
    region.meta.name = "region";
    region.meta.kind = FeatureKind::categorical;
    region.meta.categories = {"north", "south"};
    s.columns = {label, age, region};
    return s;
}

SyntheticSpec three_segment_spec(std::size_t n, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.n_rows = n;
    spec.d_x = 4;
    spec.seed = seed;
    for (std::size_t s = 0; s < 3; ++s) {
        SegmentSpec seg;
        seg.weight = s == 0 ? 0.5 : 0.25;
        seg.base_pd = s == 0 ? 0.01 : (s == 1 ? 0.05 : 0.30);
        seg.mean.assign(4, static_cast<double>(s));
        seg.dispersion.assign(4, 1.0);
        seg.risk_coeff.assign(4, 0.3);
        spec.segments.push_back(seg);
    }
    return spec;
}

} // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("load_csv parses a well-formed file") {
    const auto path = write_temp("ls_ok.csv", "bad,age,region\n0,31,north\n1,45,south\n0,22,north\n");
    const Dataset ds = load_csv(path, small_schema());
    CHECK(ds.n() == 3);
    CHECK(ds.d() == 2);
    CHECK(ds.y == std::vector<int>{0, 1, 0});
    CHECK(ds.rows(1, 0) == doctest::Approx(45.0));
    CHECK(ds.rows(1, 1) == doctest::Approx(1.0)); // south
}

TEST_CASE("load_csv: header-only file yields zero rows") {
    const auto path = write_temp("ls_empty.csv", "bad,age,region\n");
    const Dataset ds = load_csv(path, small_schema());
    CHECK(ds.n() == 0);
    CHECK(ds.d() == 2);
}

TEST_CASE("load_csv: bad label cites the row") {
    std::string body = "bad,age,region\n";
    for (int i = 0; i < 6; ++i) body += "0,30,north\n";
    body += "2,30,north\n"; // row 7
    const auto path = write_temp("ls_badlabel.csv", body);
    CHECK_THROWS_WITH_AS(load_csv(path, small_schema()),
                         doctest::Contains("row 7"), ValidationError);
}

TEST_CASE("load_csv: unknown category is a schema error") {
    const auto path = write_temp("ls_badcat.csv", "bad,age,region\n0,30,east\n");
    CHECK_THROWS_WITH_AS(load_csv(path, small_schema()), doctest::Contains("unknown category"),
                         ValidationError);
}

TEST_CASE("load_csv: missing numeric cells rejected by default, imputed behind the flag") {
    const auto path = write_temp("ls_missing.csv", "bad,age,region\n0,30,north\n1,,south\n0,50,north\n");
    CHECK_THROWS_WITH_AS(load_csv(path, small_schema()), doctest::Contains("missing"),
                         ValidationError);
    CsvSchema schema = small_schema();
    schema.impute_missing = true;
    std::vector<std::string> warnings;
    const Dataset ds = load_csv(path, schema, &warnings);
    CHECK(ds.rows(1, 0) == doctest::Approx(40.0)); // mean of 30 and 50
    CHECK(warnings.size() == 1);
}

TEST_CASE("load_csv: wrong field count cites the row") {
    const auto path = write_temp("ls_short.csv", "bad,age,region\n0,30\n");
    CHECK_THROWS_WITH_AS(load_csv(path, small_schema()), doctest::Contains("row 1"),
                         ValidationError);
}

TEST_CASE("gen_synthetic: per-segment default rates track the base PDs") {
    const Dataset ds = gen_synthetic(three_segment_spec(50000, 7));
    REQUIRE(ds.segment.size() == ds.n());
    const double pds[3] = {0.01, 0.05, 0.30};
    double counts[3] = {0, 0, 0}, events[3] = {0, 0, 0};
    for (std::size_t i = 0; i < ds.n(); ++i) {
        counts[ds.segment[i]] += 1.0;
        events[ds.segment[i]] += ds.y[i];
    }
    for (int s = 0; s < 3; ++s) CHECK(std::fabs(events[s] / counts[s] - pds[s]) < 0.01);
}

TEST_CASE("gen_synthetic: zero base PD yields no events") {
    SyntheticSpec spec;
    spec.n_rows = 2000;
    spec.d_x = 2;
    spec.seed = 3;
    SegmentSpec seg;
    seg.weight = 1.0;
    seg.base_pd = 0.0;
    seg.mean = {0.0, 0.0};
    seg.dispersion = {1.0, 1.0};
    spec.segments = {seg};
    const Dataset ds = gen_synthetic(spec);
    for (int v : ds.y) CHECK(v == 0);
}

TEST_CASE("gen_synthetic: same spec and seed is byte-identical") {
    const auto spec = three_segment_spec(3000, 11);
    const Dataset a = gen_synthetic(spec);
    const Dataset b = gen_synthetic(spec);
    CHECK(testutil::bitwise_equal(a.rows, b.rows));
    CHECK(a.y == b.y);
    CHECK(a.segment == b.segment);
}

TEST_CASE("gen_synthetic: overall rate converges to the weighted mix") {
    const auto spec = three_segment_spec(100000, 5);
    const Dataset ds = gen_synthetic(spec);
    const double expect = 0.5 * 0.01 + 0.25 * 0.05 + 0.25 * 0.30;
    CHECK(std::fabs(default_rate(ds) - expect) < 0.005);
}

TEST_CASE("default_rate reproduces the published cluster ratios") {
    Dataset ds;
    ds.rows = Matrix(774, 1);
    ds.y.assign(774, 0);
    for (int i = 0; i < 87; ++i) ds.y[i] = 1;
    ds.feature_meta.resize(1);
    CHECK(std::fabs(default_rate(ds) - 0.1124) < 5e-5);

    Dataset ds2;
    ds2.rows = Matrix(2427, 1);
    ds2.y.assign(2427, 0);
    for (int i = 0; i < 1543; ++i) ds2.y[i] = 1;
    ds2.feature_meta.resize(1);
    CHECK(std::fabs(default_rate(ds2) - 0.6358) < 5e-5);
}

TEST_CASE("default_rate: all-zero labels and empty input") {
    Dataset ds;
    ds.rows = Matrix(10, 1);
    ds.y.assign(10, 0);
    ds.feature_meta.resize(1);
    CHECK(default_rate(ds) == 0.0);
    Dataset empty;
    CHECK_THROWS_AS(default_rate(empty), NumericError);
}

TEST_CASE("split_fig2: exact majority count, no minority in the VAE sample") {
    Dataset ds;
    ds.rows = Matrix(1050, 1);
    ds.y.assign(1050, 0);
    for (std::size_t i = 1000; i < 1050; ++i) ds.y[i] = 1;
    ds.feature_meta.resize(1);
    for (std::size_t i = 0; i < ds.n(); ++i) ds.rows(i, 0) = static_cast<double>(i);

    const Fig2Split parts = split_fig2(ds, {0.30, 0.70, 21});
    CHECK(parts.vae_train.n() == 300);
    for (int v : parts.vae_train.y) CHECK(v == 0);
    CHECK(parts.development.n() == 750);
    int minority = 0;
    for (int v : parts.development.y) minority += v;
    CHECK(minority == 50);

    // Partition property: exhaustive and disjoint via the feature value as id.
    std::set<double> seen;
    for (std::size_t i = 0; i < parts.vae_train.n(); ++i) seen.insert(parts.vae_train.rows(i, 0));
    for (std::size_t i = 0; i < parts.development.n(); ++i) seen.insert(parts.development.rows(i, 0));
    CHECK(seen.size() == 1050);
}

TEST_CASE("split_fig2: all-majority degenerate case warns and splits 30/70") {
    Dataset ds;
    ds.rows = Matrix(100, 1);
    ds.y.assign(100, 0);
    ds.feature_meta.resize(1);
    std::vector<std::string> warnings;
    const Fig2Split parts = split_fig2(ds, {0.30, 0.70, 5}, &warnings);
    CHECK(parts.vae_train.n() == 30);
    CHECK(parts.development.n() == 70);
    CHECK(warnings.size() == 1);
}

TEST_CASE("split_fig2: seed changes membership but not sizes") {
    Dataset ds;
    ds.rows = Matrix(400, 1);
    ds.y.assign(400, 0);
    for (std::size_t i = 350; i < 400; ++i) ds.y[i] = 1;
    ds.feature_meta.resize(1);
    for (std::size_t i = 0; i < ds.n(); ++i) ds.rows(i, 0) = static_cast<double>(i);

    const Fig2Split a = split_fig2(ds, {0.30, 0.70, 1});
    const Fig2Split b = split_fig2(ds, {0.30, 0.70, 2});
    CHECK(a.vae_train.n() == b.vae_train.n());
    std::set<double> ia, ib;
    for (std::size_t i = 0; i < a.vae_train.n(); ++i) ia.insert(a.vae_train.rows(i, 0));
    for (std::size_t i = 0; i < b.vae_train.n(); ++i) ib.insert(b.vae_train.rows(i, 0));
    CHECK(ia != ib);
}

TEST_CASE("split_train_test preserves the class ratio") {
    Dataset dev;
    dev.rows = Matrix(1000, 1);
    dev.y.assign(1000, 0);
    for (std::size_t i = 700; i < 1000; ++i) dev.y[i] = 1;
    dev.feature_meta.resize(1);

    const auto idx = split_train_test_indices(dev, 0.7, nullptr, 9);
    int test0 = 0, test1 = 0;
    for (auto i : idx.test) (dev.y[i] == 1 ? test1 : test0) += 1;
    CHECK(std::abs(test0 - 210) <= 1);
    CHECK(std::abs(test1 - 90) <= 1);
    CHECK(idx.train.size() + idx.test.size() == 1000);
}

TEST_CASE("split_train_test: clusters contribute proportionally") {
    Dataset dev;
    dev.rows = Matrix(500, 1);
    dev.y.assign(500, 0);
    dev.feature_meta.resize(1);
    std::vector<int> clusters(500);
    for (std::size_t i = 0; i < 500; ++i) {
        clusters[i] = static_cast<int>(i / 100);
        dev.y[i] = i % 100 < 20 ? 1 : 0; // 80/20 per cluster
    }
    const auto idx = split_train_test_indices(dev, 0.7, &clusters, 4);
    std::vector<int> train_per_cluster(5, 0);
    for (auto i : idx.train) train_per_cluster[clusters[i]] += 1;
    for (int c = 0; c < 5; ++c) CHECK(std::abs(train_per_cluster[c] - 70) <= 1);
}

TEST_CASE("split_train_test: contract violations") {
    Dataset dev;
    dev.rows = Matrix(10, 1);
    dev.y.assign(10, 0);
    dev.y[5] = 1;
    dev.feature_meta.resize(1);
    std::vector<int> wrong_len(9, 0);
    CHECK_THROWS_AS(split_train_test_indices(dev, 0.7, &wrong_len, 0), ValidationError);

    std::vector<int> tiny_cluster(10, 0);
    tiny_cluster[3] = 1; // cluster 1 has a single row
    CHECK_THROWS_WITH_AS(split_train_test_indices(dev, 0.7, &tiny_cluster, 0),
                         doctest::Contains("cluster 1"), ValidationError);

    CHECK_THROWS_AS(split_train_test_indices(dev, 1.5, nullptr, 0), ValidationError);
}

TEST_SUITE_END();
