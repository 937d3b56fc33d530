#include "latentseg/pipeline.hpp"

#include <algorithm>
#include <filesystem>

#include "latentseg/baselines.hpp"
#include "latentseg/rng.hpp"
#include "latentseg/salient.hpp"
#include "latentseg/woe.hpp"

namespace latentseg {

namespace {

// Fixed stream ids so any stage re-run reproduces the full run bit for bit.
enum SeedStream : std::uint64_t {
    seed_synthetic = 1,
    seed_partition = 10,
    seed_monitor_rows = 11,
    seed_monitor_latent = 12,
    seed_monitor_cluster = 13,
    seed_latent = 14,
    seed_experiment = 15,
    seed_cluster_split = 16,
    seed_vae_train = 17,
    seed_compare = 18,
    seed_baselines = 19,
};

std::string artifact(const PipelineConfig& cfg, const std::string& name) {
    return cfg.out_dir + "/" + name;
}

struct WoeFit {
    Binning fine;
    WoeTable fine_wt;
    Binning coarse;
    WoeTable coarse_wt;
};

WoeFit fit_woe(const PipelineConfig& cfg, const Dataset& ds) {
    WoeFit w;
    w.fine = fine_class(ds, cfg.woe_bins);
    w.fine_wt = woe_values(w.fine, ds, cfg.smoothing);
    w.coarse = coarse_class(w.fine, w.fine_wt, cfg.max_bins, cfg.min_gap);
    w.coarse_wt = woe_values(w.coarse, ds, cfg.smoothing);
    return w;
}

WoeFit load_woe(const PipelineConfig& cfg) {
    const WoeArtifact a = woe_from_json(read_json_file(artifact(cfg, "woe.json")));
    return {a.fine, a.fine_wt, a.coarse, a.coarse_wt};
}

ClusterParams resolve_cluster_params(const PipelineConfig& cfg, const Matrix& latents) {
    ClusterParams p = cfg.cluster;
    if (p.n_min < 2) p.n_min = default_n_min(latents.rows);
    if (p.rho <= 0.0) p.rho = default_rho(latents);
    return p;
}

void stage_ingest(const PipelineConfig& cfg, const Dataset& ds) {
    std::size_t events = 0;
    for (int v : ds.y) events += static_cast<std::size_t>(v);
    std::vector<std::string> names;
    for (const auto& m : ds.feature_meta) names.push_back(m.name);
    write_json_file(artifact(cfg, "dataset_summary.json"),
                    Json{{"n", ds.n()},
                         {"d", ds.d()},
                         {"events", events},
                         {"default_rate", default_rate(ds)},
                         {"features", names}});
}

void stage_woe(const PipelineConfig& cfg, const Dataset& ds) {
    const WoeFit w = fit_woe(cfg, ds);
    write_json_file(artifact(cfg, "woe.json"),
                    woe_to_json(w.fine, w.fine_wt, w.coarse, w.coarse_wt, ds.feature_meta));
}

VaeMonitor make_monitor(const PipelineConfig& cfg, const Matrix& dev_x,
                        const std::vector<int>& dev_y) {
    Rng rng(Rng::derive(cfg.seed, seed_monitor_rows));
    const std::size_t m = std::min<std::size_t>(cfg.monitor_rows, dev_x.rows);
    auto idx = rng.sample_without_replacement(dev_x.rows, m);
    std::sort(idx.begin(), idx.end());
    Matrix x_mon = dev_x.take(idx);
    std::vector<int> y_mon;
    for (auto i : idx) y_mon.push_back(dev_y[i]);
    const std::uint64_t latent_seed = Rng::derive(cfg.seed, seed_monitor_latent);
    const std::uint64_t cluster_seed = Rng::derive(cfg.seed, seed_monitor_cluster);
    const PipelineConfig* cfgp = nullptr; // params resolved per call below
    (void)cfgp;
    ClusterParams base = cfg.cluster;
    std::size_t draws = cfg.latent_draws;
    return [x_mon, y_mon, latent_seed, cluster_seed, base, draws](const VaeModel& m,
                                                                  std::size_t) {
        const Matrix z = latent_expectation(m, x_mon, draws, latent_seed);
        ClusterParams p = base;
        p.seed = cluster_seed;
        if (p.n_min < 2) p.n_min = default_n_min(z.rows);
        if (p.rho <= 0.0) p.rho = default_rho(z);
        const ClusterModel cm = label_latent(z, y_mon, p);
        return std::make_pair(cm.ch, cm.bcdr_score);
    };
}

void stage_vae(const PipelineConfig& cfg, const Dataset& ds) {
    const WoeFit w = load_woe(cfg);
    const Fig2Split parts = split_fig2(ds, {cfg.partition.vae_majority_frac,
                                            cfg.partition.dev_train_frac,
                                            Rng::derive(cfg.seed, seed_partition)});
    const Matrix x_vae = woe_transform(parts.vae_train, w.coarse_wt, w.coarse);
    const Matrix x_dev = woe_transform(parts.development, w.coarse_wt, w.coarse);

    if (cfg.vae_grid.empty()) throw ValidationError("vae stage: empty architecture grid");

    VaeModel selected;
    TrainTrace selected_trace;
    std::string selected_id;
    if (cfg.vae_grid.size() == 1) {
        VaeMonitor mon;
        if (cfg.monitor) mon = make_monitor(cfg, x_dev, parts.development.y);
        auto [model, trace] = train_vae(x_vae, cfg.vae_grid[0],
                                        Rng::derive(cfg.seed, seed_vae_train), cfg.monitor ? &mon : nullptr);
        selected = std::move(model);
        selected_trace = std::move(trace);
        selected_id = cfg.vae_grid[0].id;
    } else {
        // Candidate scoring: final negative ELBO together with the cluster
        // quality of the development latents; the Pareto set is reported and
        // the selected model maximizes BCDR, then CH, then ELBO.
        struct Row {
            std::string id;
            double neg_elbo, ch, bcdr;
            bool pareto = false;
        };
        std::vector<Row> rows;
        std::vector<VaeModel> models;
        std::vector<TrainTrace> traces;
        for (std::size_t a = 0; a < cfg.vae_grid.size(); ++a) {
            auto [model, trace] =
                train_vae(x_vae, cfg.vae_grid[a], Rng::derive(cfg.seed, seed_vae_train + 100 * a));
            const Matrix z = latent_expectation(model, x_dev, cfg.latent_draws,
                                                Rng::derive(cfg.seed, seed_latent));
            ClusterParams p = resolve_cluster_params(cfg, z);
            p.seed = Rng::derive(cfg.seed, seed_cluster_split);
            const ClusterModel cm = label_latent(z, parts.development.y, p);
            rows.push_back({cfg.vae_grid[a].id, trace.neg_elbo.back(), cm.ch, cm.bcdr_score});
            models.push_back(std::move(model));
            traces.push_back(std::move(trace));
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            bool dominated = false;
            for (std::size_t j = 0; j < rows.size(); ++j) {
                if (i == j) continue;
                const bool geq = rows[j].neg_elbo <= rows[i].neg_elbo && rows[j].ch >= rows[i].ch &&
                                 rows[j].bcdr >= rows[i].bcdr;
                const bool strict = rows[j].neg_elbo < rows[i].neg_elbo || rows[j].ch > rows[i].ch ||
                                    rows[j].bcdr > rows[i].bcdr;
                if (geq && strict) {
                    dominated = true;
                    break;
                }
            }
            rows[i].pareto = !dominated;
        }
        std::size_t pick = 0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (!rows[i].pareto) continue;
            if (!rows[pick].pareto || rows[i].bcdr > rows[pick].bcdr ||
                (rows[i].bcdr == rows[pick].bcdr &&
                 (rows[i].ch > rows[pick].ch ||
                  (rows[i].ch == rows[pick].ch && rows[i].neg_elbo < rows[pick].neg_elbo))))
                pick = i;
        }
        std::ostringstream grid_tsv;
        grid_tsv << "arch\tneg_elbo\tch\tbcdr\tpareto\tselected\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            grid_tsv << rows[i].id << '\t' << format_g17(rows[i].neg_elbo) << '\t'
                     << format_g17(rows[i].ch) << '\t' << format_g17(rows[i].bcdr) << '\t'
                     << (rows[i].pareto ? 1 : 0) << '\t' << (i == pick ? 1 : 0) << '\n';
        }
        write_text_file(artifact(cfg, "vae_grid.tsv"), grid_tsv.str());
        selected = std::move(models[pick]);
        selected_trace = std::move(traces[pick]);
        selected_id = rows[pick].id;
    }

    Json vj = to_json(selected);
    vj["arch_id"] = selected_id;
    write_json_file(artifact(cfg, "vae.json"), vj);
    write_text_file(artifact(cfg, "trace.tsv"), trace_to_tsv(selected_trace));
}

void stage_cluster(const PipelineConfig& cfg, const Dataset& ds) {
    const WoeFit w = load_woe(cfg);
    const VaeModel model = vae_from_json(read_json_file(artifact(cfg, "vae.json")));
    const Fig2Split parts = split_fig2(ds, {cfg.partition.vae_majority_frac,
                                            cfg.partition.dev_train_frac,
                                            Rng::derive(cfg.seed, seed_partition)});
    const Matrix x_dev = woe_transform(parts.development, w.coarse_wt, w.coarse);
    const Matrix z =
        latent_expectation(model, x_dev, cfg.latent_draws, Rng::derive(cfg.seed, seed_latent));
    ClusterParams p = resolve_cluster_params(cfg, z);
    p.seed = Rng::derive(cfg.seed, seed_cluster_split);
    const ClusterModel cm = label_latent(z, parts.development.y, p);
    write_json_file(artifact(cfg, "clusters.json"), to_json(cm));
    write_text_file(artifact(cfg, "latent_scatter.tsv"),
                    scatter_to_tsv(z, cm.labels, parts.development.y));
}

void stage_salient(const PipelineConfig& cfg, const Dataset& ds) {
    const ClusterModel cm = cluster_from_json(read_json_file(artifact(cfg, "clusters.json")));
    const Fig2Split parts = split_fig2(ds, {cfg.partition.vae_majority_frac,
                                            cfg.partition.dev_train_frac,
                                            Rng::derive(cfg.seed, seed_partition)});
    Matrix x;
    if (cfg.salient_raw) {
        x = parts.development.rows;
    } else {
        const WoeFit w = load_woe(cfg);
        x = woe_transform(parts.development, w.coarse_wt, w.coarse);
    }
    if (cm.labels.size() != x.rows)
        throw ValidationError("salient stage: clusters.json does not match the development rows");
    const SalientReport report = salient_dimensions(x, cm.labels, cfg.salient_sd);
    std::vector<std::string> names;
    for (const auto& m : ds.feature_meta) names.push_back(m.name);
    write_json_file(artifact(cfg, "salient.json"),
                    salient_to_json(report, names, cfg.salient_raw ? "raw" : "woe"));
    write_text_file(artifact(cfg, "salient.txt"), salient_to_text(report, names));
}

void stage_score(const PipelineConfig& cfg, const Dataset& ds) {
    const WoeFit w = load_woe(cfg);
    const ClusterModel cm = cluster_from_json(read_json_file(artifact(cfg, "clusters.json")));
    const Fig2Split parts = split_fig2(ds, {cfg.partition.vae_majority_frac,
                                            cfg.partition.dev_train_frac,
                                            Rng::derive(cfg.seed, seed_partition)});
    const Matrix x_dev = woe_transform(parts.development, w.coarse_wt, w.coarse);
    if (cm.labels.size() != x_dev.rows)
        throw ValidationError("score stage: clusters.json does not match the development rows");

    ExperimentConfig ec = cfg.experiment;
    ec.seed = Rng::derive(cfg.seed, seed_experiment);
    const PerformanceTable table = run_experiment(x_dev, parts.development.y, cm.labels, ec);
    write_json_file(artifact(cfg, "performance.json"), to_json(table));
    write_text_file(artifact(cfg, "performance.tsv"), performance_to_tsv(table));
}

void stage_report(const PipelineConfig& cfg) {
    Json summary;
    summary["dataset"] = read_json_file(artifact(cfg, "dataset_summary.json"));
    const Json clusters = read_json_file(artifact(cfg, "clusters.json"));
    summary["k"] = clusters.at("k");
    summary["cluster_sizes"] = clusters.at("sizes");
    summary["cluster_default_rates"] = clusters.at("default_rate");
    summary["ch"] = clusters.at("ch");
    summary["bcdr"] = clusters.at("bcdr");
    const std::string perf_path = artifact(cfg, "performance.json");
    if (std::filesystem::exists(perf_path)) {
        const Json perf = read_json_file(perf_path);
        Json rows = Json::array();
        for (const auto& c : perf.at("clusters")) {
            if (!c.at("feasible").get<bool>()) continue;
            rows.push_back(Json{{"cluster", c.at("cluster")},
                                {"segment_h", c.at("segment_mean").at("h")},
                                {"portfolio_h", c.at("portfolio_mean").at("h")},
                                {"p_value", c.at("p_value_h")}});
        }
        summary["h_comparison"] = rows;
    }
    write_json_file(artifact(cfg, "summary.json"), summary);
}

} // namespace

std::vector<Stage> all_stages() {
    return {Stage::ingest, Stage::woe,     Stage::vae,   Stage::cluster,
            Stage::salient, Stage::score, Stage::report};
}

Stage stage_from_name(const std::string& name) {
    if (name == "ingest") return Stage::ingest;
    if (name == "woe") return Stage::woe;
    if (name == "vae") return Stage::vae;
    if (name == "cluster") return Stage::cluster;
    if (name == "salient") return Stage::salient;
    if (name == "score") return Stage::score;
    if (name == "report") return Stage::report;
    throw ValidationError("unknown stage: " + name);
}

std::string stage_name(Stage s) {
    switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::woe: return "woe";
    case Stage::vae: return "vae";
    case Stage::cluster: return "cluster";
    case Stage::salient: return "salient";
    case Stage::score: return "score";
    case Stage::report: return "report";
    }
    return "?";
}

PipelineConfig config_from_json(const Json& j) {
    PipelineConfig cfg;
    if (!j.contains("seed")) throw ValidationError("config: 'seed' is required");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.out_dir = j.value("out", std::string());

    if (!j.contains("input")) throw ValidationError("config: 'input' is required");
    const Json& in = j.at("input");
    if (in.contains("csv")) {
        cfg.csv_path = in.at("csv").get<std::string>();
        if (!in.contains("schema"))
            throw ValidationError("config: csv input requires a 'schema' path");
        cfg.schema_path = in.at("schema").get<std::string>();
        // Fail fast on unusable schemas, before any data work.
        schema_from_json(read_json_file(cfg.schema_path));
    } else if (in.contains("synthetic")) {
        const Json& sj = in.at("synthetic");
        if (sj.contains("preset")) {
            const std::string preset = sj.at("preset").get<std::string>();
            const auto n = sj.value("n_rows", 50000ULL);
            const std::uint64_t sseed = sj.contains("seed")
                                            ? sj.at("seed").get<std::uint64_t>()
                                            : Rng::derive(cfg.seed, seed_synthetic);
            if (preset == "planted_heterogeneous")
                cfg.synthetic = planted_heterogeneous_spec(n, sseed);
            else if (preset == "homogeneous")
                cfg.synthetic = homogeneous_control_spec(n, sseed);
            else
                throw ValidationError("config: unknown synthetic preset '" + preset + "'");
        } else {
            cfg.synthetic = synthetic_from_json(sj);
        }
    } else {
        throw ValidationError("config: input must provide 'csv' or 'synthetic'");
    }

    if (j.contains("partition")) {
        cfg.partition.vae_majority_frac = j.at("partition").value("vae_majority_frac", 0.30);
        cfg.partition.dev_train_frac = j.at("partition").value("dev_train_frac", 0.70);
    }
    if (j.contains("woe")) {
        const Json& wj = j.at("woe");
        cfg.woe_bins = wj.value("n_bins", 20ULL);
        cfg.smoothing = wj.value("smoothing", 0.5);
        cfg.max_bins = wj.value("max_bins", 6ULL);
        cfg.min_gap = wj.value("min_gap", 0.1);
    }
    if (j.contains("vae")) {
        const Json& vj = j.at("vae");
        if (vj.contains("grid")) {
            cfg.vae_grid.clear();
            for (const auto& aj : vj.at("grid")) cfg.vae_grid.push_back(vae_arch_from_json(aj));
            if (cfg.vae_grid.empty()) throw ValidationError("config: vae.grid is empty");
        }
        cfg.latent_draws = vj.value("latent_draws", 100ULL);
        cfg.monitor = vj.value("monitor", true);
        cfg.monitor_rows = vj.value("monitor_rows", 3000ULL);
    }
    if (j.contains("cluster")) {
        const Json& cj = j.at("cluster");
        cfg.cluster.n_min = cj.value("n_min", 0ULL);
        cfg.cluster.rho = cj.value("rho", 0.0);
        cfg.cluster.subsample_cap = cj.value("subsample_cap", 2000ULL);
        cfg.cluster.linkage =
            cj.value("linkage", std::string("ward")) == "complete" ? Linkage::complete
                                                                   : Linkage::ward;
    }
    if (j.contains("salient")) {
        cfg.salient_sd = j.at("salient").value("sd", 1.0);
        cfg.salient_raw = j.at("salient").value("space", std::string("woe")) == "raw";
    }
    if (j.contains("experiment")) {
        const Json& ej = j.at("experiment");
        cfg.experiment.folds = ej.value("folds", 10ULL);
        cfg.experiment.train_frac = ej.value("train_frac", 0.7);
        cfg.experiment.min_class_rows = ej.value("min_class_rows", 10ULL);
        if (ej.contains("resample")) {
            cfg.experiment.resample.ratio = ej.at("resample").value("ratio", 1.0);
            cfg.experiment.resample.neighbors = ej.at("resample").value("neighbors", 5ULL);
            cfg.experiment.resample.duplicate = ej.at("resample").value("duplicate", false);
        }
        auto arch_from = [](const Json& aj) {
            ClassifierArch a;
            a.hidden = aj.value("hidden", 16ULL);
            a.lr = aj.value("lr", 1e-3);
            a.epochs = aj.value("epochs", 200ULL);
            a.batch = aj.value("batch", 128ULL);
            a.patience = aj.value("patience", 10ULL);
            a.optimizer = aj.value("optimizer", std::string("adam")) == "sgd" ? OptMethod::sgd
                                                                              : OptMethod::adam;
            return a;
        };
        if (ej.contains("grid")) {
            cfg.experiment.grid.clear();
            for (const auto& aj : ej.at("grid")) cfg.experiment.grid.push_back(arch_from(aj));
            if (cfg.experiment.grid.empty())
                throw ValidationError("config: experiment.grid is empty");
        } else if (ej.contains("classifier")) {
            cfg.experiment.grid = {arch_from(ej.at("classifier"))};
        }
    }
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    return config_from_json(read_json_file(path));
}

Dataset load_input_dataset(const PipelineConfig& cfg) {
    if (cfg.synthetic) return gen_synthetic(*cfg.synthetic);
    const CsvSchema schema = schema_from_json(read_json_file(cfg.schema_path));
    return load_csv(cfg.csv_path, schema);
}

void run_pipeline(const PipelineConfig& cfg, const std::vector<Stage>& stages) {
    if (cfg.out_dir.empty()) throw ValidationError("config: output directory is required");
    std::filesystem::create_directories(cfg.out_dir);
    const Dataset ds = load_input_dataset(cfg);
    for (Stage s : stages) {
        switch (s) {
        case Stage::ingest: stage_ingest(cfg, ds); break;
        case Stage::woe: stage_woe(cfg, ds); break;
        case Stage::vae: stage_vae(cfg, ds); break;
        case Stage::cluster: stage_cluster(cfg, ds); break;
        case Stage::salient: stage_salient(cfg, ds); break;
        case Stage::score: stage_score(cfg, ds); break;
        case Stage::report: stage_report(cfg); break;
        }
    }
}

void run_compare_transforms(const PipelineConfig& cfg) {
    if (cfg.out_dir.empty()) throw ValidationError("config: output directory is required");
    std::filesystem::create_directories(cfg.out_dir);
    const Dataset ds = load_input_dataset(cfg);

    TransformComparisonConfig tc;
    tc.partition = {cfg.partition.vae_majority_frac, cfg.partition.dev_train_frac,
                    Rng::derive(cfg.seed, seed_partition)};
    tc.fine_bins = cfg.woe_bins;
    tc.smoothing = cfg.smoothing;
    tc.max_bins = cfg.max_bins;
    tc.min_gap = cfg.min_gap;
    tc.arch = cfg.vae_grid.front();
    tc.latent_draws = cfg.latent_draws;
    tc.cluster = cfg.cluster;
    tc.seed = Rng::derive(cfg.seed, seed_compare);

    const TransformComparison report = transform_comparison(ds, tc);
    write_text_file(artifact(cfg, "transform_comparison.tsv"), comparison_to_tsv(report));
    for (const auto& run : report.runs) {
        if (!run.trained) continue;
        write_text_file(artifact(cfg, "scatter_" + run.name + ".tsv"),
                        scatter_to_tsv(run.latent, run.labels, report.dev_y));
    }
}

void run_baselines(const PipelineConfig& cfg) {
    if (cfg.out_dir.empty()) throw ValidationError("config: output directory is required");
    std::filesystem::create_directories(cfg.out_dir);
    const Dataset ds = load_input_dataset(cfg);
    const WoeFit w = fit_woe(cfg, ds);
    const Matrix x = woe_transform(ds, w.coarse_wt, w.coarse);
    const std::uint64_t seed = Rng::derive(cfg.seed, seed_baselines);

    // Cluster-validity indexes across k, the classical model-selection curve.
    const auto sweep = kmeans_index_sweep(x, 2, 8, seed);
    write_text_file(artifact(cfg, "indexes_vs_k.tsv"), index_sweep_to_tsv(sweep));

    // Two PCA components with k-means labels for external plotting.
    const PcaModel pca = pca_fit(x, std::min<std::size_t>(2, x.cols));
    const Matrix pcs = pca_transform(pca, x);
    const auto km = kmeans(x, 2, Rng::derive(seed, 1));
    write_text_file(artifact(cfg, "pca_kmeans_scatter.tsv"), scatter_to_tsv(pcs, km.labels, ds.y));

    // Agglomeration merge sequence on a capped subsample, in lieu of a rendered
    // dendrogram.
    Rng rng(Rng::derive(seed, 2));
    const std::size_t m = std::min<std::size_t>(cfg.cluster.subsample_cap, x.rows);
    auto idx = rng.sample_without_replacement(x.rows, m);
    std::sort(idx.begin(), idx.end());
    const auto merges = linkage_merges(x.take(idx), cfg.cluster.linkage);
    std::ostringstream link;
    link << "step\ta\tb\tdistance\tsize\n";
    for (std::size_t s = 0; s < merges.size(); ++s)
        link << s << '\t' << merges[s].a << '\t' << merges[s].b << '\t'
             << format_g17(merges[s].distance) << '\t' << merges[s].size << '\n';
    write_text_file(artifact(cfg, "linkage.tsv"), link.str());
}

} // namespace latentseg
