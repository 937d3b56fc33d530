#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "latentseg/pipeline.hpp"

using namespace latentseg;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_override;
    std::int64_t seed_override = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Pipeline configuration (JSON)")->required();
    cmd->add_option("--out", opts.out_override, "Output directory (overrides config)");
    cmd->add_option("--seed", opts.seed_override, "Global seed (overrides config)");
}

PipelineConfig resolve(const CommonOpts& opts) {
    PipelineConfig cfg = load_config(opts.config_path);
    if (!opts.out_override.empty()) cfg.out_dir = opts.out_override;
    if (opts.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed_override);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"WoE-steered VAE latent segmentation and segment-based credit scoring"};
    app.require_subcommand(1);

    CommonOpts run_opts;
    std::string stage_arg;
    auto* run_cmd = app.add_subcommand("run", "Execute the pipeline end to end");
    add_common(run_cmd, run_opts);
    run_cmd->add_option("--stage", stage_arg, "Run a single stage instead of all");

    struct Sub {
        const char* name;
        const char* help;
        std::vector<Stage> stages;
    };
    const std::vector<Sub> subs = {
        {"woe-fit", "Fit fine and coarse WoE tables", {Stage::ingest, Stage::woe}},
        {"vae-train", "Train the VAE on the coarse-WoE coding", {Stage::vae}},
        {"cluster", "Label the latent space", {Stage::cluster}},
        {"salient", "Extract salient dimensions per cluster", {Stage::salient}},
        {"score", "Segment-based vs portfolio-based experiment", {Stage::score}},
    };
    std::vector<CommonOpts> sub_opts(subs.size());
    for (std::size_t i = 0; i < subs.size(); ++i) {
        auto* cmd = app.add_subcommand(subs[i].name, subs[i].help);
        add_common(cmd, sub_opts[i]);
    }

    CommonOpts cmp_opts;
    auto* cmp_cmd =
        app.add_subcommand("compare-transforms", "Train one VAE per input coding and compare");
    add_common(cmp_cmd, cmp_opts);

    CommonOpts base_opts;
    auto* base_cmd =
        app.add_subcommand("baselines", "k-means, PCA and validity-index comparators");
    add_common(base_cmd, base_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const PipelineConfig cfg = resolve(run_opts);
            if (stage_arg.empty())
                run_pipeline(cfg, all_stages());
            else
                run_pipeline(cfg, {stage_from_name(stage_arg)});
            return 0;
        }
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (app.get_subcommand(subs[i].name)->parsed()) {
                run_pipeline(resolve(sub_opts[i]), subs[i].stages);
                return 0;
            }
        }
        if (cmp_cmd->parsed()) {
            run_compare_transforms(resolve(cmp_opts));
            return 0;
        }
        if (base_cmd->parsed()) {
            run_baselines(resolve(base_opts));
            return 0;
        }
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
