#pragma once

#include <optional>
#include <string>
#include <vector>

#include "latentseg/cluster.hpp"
#include "latentseg/dataset.hpp"
#include "latentseg/scoring.hpp"
#include "latentseg/serialize.hpp"
#include "latentseg/vae.hpp"

namespace latentseg {

enum class Stage { ingest, woe, vae, cluster, salient, score, report };

std::vector<Stage> all_stages();
Stage stage_from_name(const std::string& name);
std::string stage_name(Stage s);

struct PipelineConfig {
    std::uint64_t seed = 0;
    std::string out_dir;

    // Input: either a CSV with a schema sidecar, or a synthetic spec.
    std::string csv_path;
    std::string schema_path;
    std::optional<SyntheticSpec> synthetic;

    PartitionPlan partition;

    std::size_t woe_bins = 20;
    double smoothing = 0.5;
    std::size_t max_bins = 6;
    double min_gap = 0.1;

    std::vector<VaeArch> vae_grid = {VaeArch{}};
    std::size_t latent_draws = 100;
    bool monitor = true;
    std::size_t monitor_rows = 3000;

    ClusterParams cluster; // n_min < 2 or rho <= 0 request data-driven defaults

    double salient_sd = 1.0;
    bool salient_raw = false; // report salience on raw instead of WoE-coded features

    ExperimentConfig experiment;
};

// Parses and validates; throws ValidationError before any work on bad input.
PipelineConfig config_from_json(const Json& j);
PipelineConfig load_config(const std::string& path);

// Executes the requested stages in order, writing one artifact set per stage
// under cfg.out_dir. Stages read their inputs from earlier artifacts, so any
// suffix of the stage list can be re-run on its own.
void run_pipeline(const PipelineConfig& cfg, const std::vector<Stage>& stages);

void run_compare_transforms(const PipelineConfig& cfg);
void run_baselines(const PipelineConfig& cfg);

Dataset load_input_dataset(const PipelineConfig& cfg);

} // namespace latentseg
