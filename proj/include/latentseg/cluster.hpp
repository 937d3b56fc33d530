#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "latentseg/matrix.hpp"

namespace latentseg {

enum class Linkage { ward, complete };

struct ClusterParams {
    // A split is accepted only if both children exceed n_min and the sibling
    // centroids are farther apart than rho. Zero values stand for "resolve
    // from the data" (default_n_min / default_rho); label_latent itself
    // requires resolved values.
    std::size_t n_min = 0;
    double rho = 0.0;
    std::size_t subsample_cap = 2000;
    Linkage linkage = Linkage::ward;
    std::uint64_t seed = 0;
};

struct AcceptedSplit {
    std::vector<double> c1, c2;
    std::size_t n1 = 0, n2 = 0;
    double centroid_distance = 0.0;
};

struct ClusterModel {
    Matrix centroids; // k x d
    std::vector<int> labels;
    std::vector<std::size_t> sizes;
    std::vector<double> cluster_default_rate;
    std::size_t k = 0;
    ClusterParams params;
    std::vector<AcceptedSplit> accepted_splits;
    double ch = 0.0;
    double bcdr_score = 0.0;
};

struct BipartitionResult {
    std::vector<int> labels; // 0/1 per input row
    std::vector<double> c1, c2;
};

// Agglomerative two-way split. Above subsample_cap rows, a uniform subsample is
// clustered and the rest of the rows take the nearer of the two centroids.
BipartitionResult bipartition(const Matrix& points, Linkage linkage, std::size_t subsample_cap,
                              std::uint64_t seed);

// Worklist labeling of the latent space: split every pending cluster in two and
// accept the split only when both children are larger than n_min and the
// centroids are farther apart than rho; otherwise the parent is final.
ClusterModel label_latent(const Matrix& points, const std::vector<int>& y,
                          const ClusterParams& params);

// Between/within dispersion ratio scaled by degrees of freedom.
double ch_index(const Matrix& points, const std::vector<int>& labels);

// Mean over clusters of the maximum absolute default-rate gap to any other cluster.
double bcdr(const std::vector<double>& rates);

std::size_t assign_cluster(const ClusterModel& m, std::span<const double> z);

std::size_t default_n_min(std::size_t n);
double default_rho(const Matrix& points);

struct LinkageMerge {
    std::size_t a = 0, b = 0; // slot ids; the merged cluster keeps the lower slot
    double distance = 0.0;    // Euclidean-scale merge height
    std::size_t size = 0;     // merged cluster size
};

// Full agglomeration merge sequence, sorted by height; emitted in lieu of a
// rendered dendrogram.
std::vector<LinkageMerge> linkage_merges(const Matrix& pts, Linkage linkage);

} // namespace latentseg
