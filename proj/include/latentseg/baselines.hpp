#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latentseg/cluster.hpp"
#include "latentseg/dataset.hpp"
#include "latentseg/matrix.hpp"
#include "latentseg/vae.hpp"

namespace latentseg {

struct PcaModel {
    Matrix components; // n_components x d, orthonormal rows
    std::vector<double> mean;
    std::vector<double> explained_variance; // non-increasing
};

PcaModel pca_fit(const Matrix& x, std::size_t n_components);
Matrix pca_transform(const PcaModel& m, const Matrix& x);
Matrix pca_inverse_transform(const PcaModel& m, const Matrix& z);

struct StandardizeModel {
    std::vector<double> mean;
    std::vector<double> scale;
    std::vector<char> constant_flag; // scale forced to 1
};

StandardizeModel standardize_fit(const Matrix& x);
Matrix standardize_apply(const StandardizeModel& m, const Matrix& x);

struct KmeansResult {
    std::vector<int> labels;
    Matrix centroids;
    double inertia = 0.0;
    std::vector<double> inertia_trace; // per Lloyd iteration of the winning restart
};

// Lloyd iterations from kmeans++-style seeding; best of `restarts` by inertia.
// An emptied cluster is reseeded to the point farthest from its centroid.
KmeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed, std::size_t restarts = 10,
                    std::size_t max_iter = 100);

struct ClusterIndexes {
    double ch = 0.0;
    double db = 0.0;
    double silhouette = 0.0;
};

// CH shares the definition in cluster.hpp; DB uses mean member-to-centroid
// distances; silhouette of a singleton's point is 0.
ClusterIndexes cluster_indexes(const Matrix& x, const std::vector<int>& labels);

struct IndexSweepRow {
    std::size_t k = 0;
    double ch = 0.0;
    double db = 0.0;
    double silhouette = 0.0;
};

std::vector<IndexSweepRow> kmeans_index_sweep(const Matrix& x, std::size_t k_min, std::size_t k_max,
                                              std::uint64_t seed, std::size_t restarts = 10);

struct TransformRun {
    std::string name;
    bool trained = false;
    std::string error;
    std::size_t k = 0;
    double ch = 0.0;
    double bcdr = 0.0;
    bool structure = false; // k >= 2 and BCDR >= 0.01
    Matrix latent;          // development latents for scatter emission
    std::vector<int> labels;
};

struct TransformComparisonConfig {
    PartitionPlan partition;
    std::size_t fine_bins = 20;
    double smoothing = 0.5;
    std::size_t max_bins = 6;
    double min_gap = 0.1;
    VaeArch arch;
    std::size_t latent_draws = 100;
    ClusterParams cluster;       // n_min/rho of 0 request the data-driven defaults
    std::uint64_t seed = 0;
};

struct TransformComparison {
    std::vector<TransformRun> runs; // coarse_woe, fine_woe, pca, standardized, raw
    std::vector<int> dev_y;
};

// One VAE per input coding, each scored by the cluster structure its latent
// space produces on the development rows. A diverging run is recorded and the
// comparison continues.
TransformComparison transform_comparison(const Dataset& ds, const TransformComparisonConfig& cfg);

} // namespace latentseg
