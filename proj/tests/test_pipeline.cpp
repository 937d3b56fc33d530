#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "latentseg/pipeline.hpp"

using namespace latentseg;
namespace fs = std::filesystem;

namespace {

Json small_config(const std::string& out) {
    return Json{
        {"seed", 99},
        {"out", out},
        {"input", Json{{"synthetic", Json{{"preset", "planted_heterogeneous"}, {"n_rows", 4000}}}}},
        {"woe", Json{{"n_bins", 10}, {"max_bins", 5}, {"min_gap", 0.1}}},
        {"vae",
         Json{{"grid", Json::array({Json{{"id", "tiny"},
                                         {"d_z", 2},
                                         {"hidden", Json::array({8})},
                                         {"lr", 0.01},
                                         {"epochs", 4},
                                         {"batch", 128},
                                         {"optimizer", "sgd"}}})},
              {"latent_draws", 25},
              {"monitor", false}}},
        {"cluster", Json{{"n_min", 150}, {"rho", 0.0}, {"subsample_cap", 800}}},
        {"experiment",
         Json{{"folds", 2},
              {"classifier", Json{{"hidden", 8}, {"epochs", 15}, {"batch", 128}}},
              {"resample", Json{{"ratio", 1.0}, {"neighbors", 5}}}}},
    };
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_SUITE_BEGIN("pipeline");

TEST_CASE("config validation fails fast") {
    Json j = small_config("x");
    j.erase("seed");
    CHECK_THROWS_WITH_AS((void)config_from_json(j), doctest::Contains("seed"), ValidationError);

    Json j2 = small_config("x");
    j2.erase("input");
    CHECK_THROWS_AS((void)config_from_json(j2), ValidationError);

    Json j3 = small_config("x");
    j3["input"] = Json{{"csv", "data.csv"}}; // schema missing
    CHECK_THROWS_WITH_AS((void)config_from_json(j3), doctest::Contains("schema"), ValidationError);
}

TEST_CASE("schema without a label column is rejected before any work") {
    const auto dir = fs::temp_directory_path() / "ls_pipe_schema";
    fs::create_directories(dir);
    write_json_file((dir / "schema.json").string(),
                    Json{{"columns", Json::array({Json{{"name", "age"}}})}});
    Json j = small_config((dir / "out").string());
    j["input"] = Json{{"csv", (dir / "none.csv").string()}, {"schema", (dir / "schema.json").string()}};
    CHECK_THROWS_WITH_AS((void)config_from_json(j), doctest::Contains("label"), ValidationError);
}

TEST_CASE("full synthetic run writes every stage artifact") {
    const auto dir = fs::temp_directory_path() / "ls_pipe_full";
    fs::remove_all(dir);
    const PipelineConfig cfg = config_from_json(small_config(dir.string()));
    run_pipeline(cfg, all_stages());
    for (const char* name :
         {"dataset_summary.json", "woe.json", "vae.json", "trace.tsv", "clusters.json",
          "latent_scatter.tsv", "salient.json", "salient.txt", "performance.tsv",
          "performance.json", "summary.json"}) {
        CAPTURE(name);
        CHECK(fs::exists(dir / name));
    }
    const Json clusters = read_json_file((dir / "clusters.json").string());
    CHECK(clusters.at("k").get<std::size_t>() >= 1);
}

TEST_CASE("rerun with the same config and seed is byte-identical") {
    const auto dir_a = fs::temp_directory_path() / "ls_pipe_a";
    const auto dir_b = fs::temp_directory_path() / "ls_pipe_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    run_pipeline(config_from_json(small_config(dir_a.string())), all_stages());
    run_pipeline(config_from_json(small_config(dir_b.string())), all_stages());
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        const auto name = entry.path().filename();
        CAPTURE(name.string());
        CHECK(read_file(entry.path()) == read_file(dir_b / name));
    }
}

TEST_CASE("a single stage reruns identically on existing artifacts") {
    const auto dir = fs::temp_directory_path() / "ls_pipe_stage";
    fs::remove_all(dir);
    const PipelineConfig cfg = config_from_json(small_config(dir.string()));
    run_pipeline(cfg, all_stages());
    const std::string before = read_file(dir / "clusters.json");
    run_pipeline(cfg, {Stage::cluster});
    CHECK(read_file(dir / "clusters.json") == before);
}

TEST_CASE("score without clusters.json names the missing file") {
    const auto dir = fs::temp_directory_path() / "ls_pipe_missing";
    fs::remove_all(dir);
    const PipelineConfig cfg = config_from_json(small_config(dir.string()));
    run_pipeline(cfg, {Stage::ingest, Stage::woe});
    CHECK_THROWS_WITH_AS(run_pipeline(cfg, {Stage::score}), doctest::Contains("clusters.json"),
                         ValidationError);
}

TEST_CASE("woe artifact round-trips through json") {
    const auto dir = fs::temp_directory_path() / "ls_pipe_woe";
    fs::remove_all(dir);
    const PipelineConfig cfg = config_from_json(small_config(dir.string()));
    const Dataset ds = load_input_dataset(cfg);
    run_pipeline(cfg, {Stage::ingest, Stage::woe});
    const WoeArtifact a = woe_from_json(read_json_file((dir / "woe.json").string()));
    CHECK(a.fine.features.size() == ds.d());
    CHECK(a.coarse.features.size() == ds.d());
    // Transforming through the loaded tables matches an in-memory fit.
    const Binning fine = fine_class(ds, cfg.woe_bins);
    const WoeTable fine_wt = woe_values(fine, ds, cfg.smoothing);
    const Binning coarse = coarse_class(fine, fine_wt, cfg.max_bins, cfg.min_gap);
    const WoeTable coarse_wt = woe_values(coarse, ds, cfg.smoothing);
    const Matrix direct = woe_transform(ds, coarse_wt, coarse);
    const Matrix loaded = woe_transform(ds, a.coarse_wt, a.coarse);
    for (std::size_t i = 0; i < direct.data.size(); ++i)
        CHECK(direct.data[i] == loaded.data[i]);
}

TEST_CASE("vae model round-trips through json") {
    VaeArch arch;
    arch.hidden = {7};
    arch.epochs = 2;
    const Matrix data = Matrix(64, 3);
    VaeModel m = init_vae(3, arch, 5);
    const Json j = to_json(m);
    const VaeModel back = vae_from_json(j);
    const Matrix x(2, 3);
    const auto e1 = encode(m, x);
    const auto e2 = encode(back, x);
    for (std::size_t i = 0; i < e1.mu.data.size(); ++i) {
        CHECK(e1.mu.data[i] == e2.mu.data[i]);
        CHECK(e1.sigma.data[i] == e2.sigma.data[i]);
    }
}

TEST_CASE("compare-transforms and baselines commands write their reports") {
    const auto dir = fs::temp_directory_path() / "ls_pipe_cmp";
    fs::remove_all(dir);
    Json j = small_config(dir.string());
    j["input"]["synthetic"]["n_rows"] = 2500;
    const PipelineConfig cfg = config_from_json(j);
    run_compare_transforms(cfg);
    CHECK(fs::exists(dir / "transform_comparison.tsv"));
    const std::string tsv = read_file(dir / "transform_comparison.tsv");
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 6); // header + 5 rows
    CHECK(fs::exists(dir / "scatter_coarse_woe.tsv"));

    run_baselines(cfg);
    CHECK(fs::exists(dir / "indexes_vs_k.tsv"));
    CHECK(fs::exists(dir / "pca_kmeans_scatter.tsv"));
    CHECK(fs::exists(dir / "linkage.tsv"));
}

TEST_SUITE_END();
