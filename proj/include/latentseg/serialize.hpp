#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "latentseg/baselines.hpp"
#include "latentseg/cluster.hpp"
#include "latentseg/dataset.hpp"
#include "latentseg/salient.hpp"
#include "latentseg/scoring.hpp"
#include "latentseg/vae.hpp"
#include "latentseg/woe.hpp"

namespace latentseg {

using Json = nlohmann::json;

Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json to_json(const MlpParams& p);
MlpParams mlp_from_json(const Json& j);

Json to_json(const VaeModel& m);
VaeModel vae_from_json(const Json& j);

Json woe_to_json(const Binning& fine, const WoeTable& fine_wt, const Binning& coarse,
                 const WoeTable& coarse_wt, const std::vector<FeatureMeta>& meta);
struct WoeArtifact {
    Binning fine;
    WoeTable fine_wt;
    Binning coarse;
    WoeTable coarse_wt;
    std::vector<std::string> feature_names;
};
WoeArtifact woe_from_json(const Json& j);

Json to_json(const ClusterModel& m);
ClusterModel cluster_from_json(const Json& j);

Json salient_to_json(const SalientReport& r, const std::vector<std::string>& feature_names,
                     const std::string& space);
std::string salient_to_text(const SalientReport& r, const std::vector<std::string>& feature_names);

Json to_json(const PerformanceTable& t);
std::string performance_to_tsv(const PerformanceTable& t);

CsvSchema schema_from_json(const Json& j);
SyntheticSpec synthetic_from_json(const Json& j);
Json to_json(const SyntheticSpec& spec);

VaeArch vae_arch_from_json(const Json& j);
Json to_json(const VaeArch& a);

// TSV emission; %.17g keeps files reproducible and round-trip exact.
std::string format_g17(double v);
std::string trace_to_tsv(const TrainTrace& t);
std::string scatter_to_tsv(const Matrix& latent, const std::vector<int>& labels,
                           const std::vector<int>& y);
std::string comparison_to_tsv(const TransformComparison& c);
std::string index_sweep_to_tsv(const std::vector<IndexSweepRow>& rows);

void write_text_file(const std::string& path, const std::string& content);
void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

} // namespace latentseg
