#pragma once

#include <vector>

#include "latentseg/matrix.hpp"

namespace latentseg {

struct SalientFeature {
    std::size_t feature = 0;
    int direction = 0; // +1 high, -1 low
};

struct ClusterSalience {
    std::vector<double> df;    // difference factor per feature
    std::vector<char> guarded; // denominator guard applied
    double mu_df = 0.0;
    double sigma_df = 0.0;
    std::vector<SalientFeature> salient;
};

struct SalientReport {
    std::vector<ClusterSalience> clusters;
    double sd = 1.0;
};

// Features whose in-cluster vs out-of-cluster mean difference factor deviates
// from the per-cluster feature average by at least sd standard deviations.
// Near-zero out-means are guarded at 1e-8 in magnitude and flagged.
SalientReport salient_dimensions(const Matrix& x, const std::vector<int>& labels, double sd = 1.0);

} // namespace latentseg
