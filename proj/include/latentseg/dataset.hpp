#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latentseg/matrix.hpp"

namespace latentseg {

enum class FeatureKind { continuous, categorical };

struct FeatureMeta {
    std::string name;
    FeatureKind kind = FeatureKind::continuous;
    std::vector<std::string> categories; // categorical only; values are indexes into this
};

// Feature matrix plus binary ground-truth labels. Categorical cells hold the
// category index as a double.
struct Dataset {
    Matrix rows;
    std::vector<int> y;
    std::vector<FeatureMeta> feature_meta;
    std::vector<std::string> id;  // optional row identifiers
    std::vector<int> segment;     // hidden ground truth for synthetic data; empty otherwise

    std::size_t n() const { return rows.rows; }
    std::size_t d() const { return rows.cols; }

    void validate() const;
    Dataset take(std::span<const std::size_t> idx) const;
};

// Monotone per-feature warp applied to the Gaussian block before emission.
// exp produces heavy-tailed positive features whose risk link is nonlinear
// in the emitted value.
enum class FeatureWarp { identity, exp };

struct SegmentSpec {
    double weight = 1.0;
    double base_pd = 0.05;
    std::vector<double> mean;       // length d_x
    std::vector<double> dispersion; // length d_x, all > 0
    std::vector<double> risk_coeff; // length d_x or empty (no feature-risk link)
};

struct SyntheticSpec {
    std::size_t n_rows = 0;
    std::size_t d_x = 0;
    std::uint64_t seed = 0;
    std::vector<SegmentSpec> segments;
    std::vector<FeatureWarp> warp;          // length d_x or empty (identity)
    std::vector<std::string> feature_names; // optional

    void validate() const;
};

struct PartitionPlan {
    double vae_majority_frac = 0.30;
    double dev_train_frac = 0.70;
    std::uint64_t seed = 0;
};

struct SchemaColumn {
    std::string name;
    enum class Role { feature, label, id } role = Role::feature;
    FeatureMeta meta; // feature role only
};

struct CsvSchema {
    std::vector<SchemaColumn> columns;
    bool impute_missing = false; // mean-impute numeric gaps instead of rejecting

    std::string label_column() const;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 std::vector<std::string>* warnings = nullptr);

Dataset gen_synthetic(const SyntheticSpec& spec);

double default_rate(const Dataset& ds);

struct Fig2Split {
    Dataset vae_train;  // majority-only sample used to fit the VAE
    Dataset development;
};

Fig2Split split_fig2(const Dataset& ds, const PartitionPlan& plan,
                     std::vector<std::string>* warnings = nullptr);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Class-ratio preserving 70/30-style split; with cluster labels, every cluster
// contributes proportionally to both sides (the stratification the portfolio
// model relies on).
SplitIndices split_train_test_indices(const Dataset& dev, double frac,
                                      const std::vector<int>* cluster_labels,
                                      std::uint64_t seed);

std::pair<Dataset, Dataset> split_train_test(const Dataset& dev, double frac,
                                             const std::vector<int>* cluster_labels,
                                             std::uint64_t seed);

// Archetype presets used by the CLI and the test suites.
SyntheticSpec planted_heterogeneous_spec(std::size_t n_rows, std::uint64_t seed);
SyntheticSpec homogeneous_control_spec(std::size_t n_rows, std::uint64_t seed);

} // namespace latentseg
