#pragma once

#include <cstdint>
#include <vector>

#include "latentseg/matrix.hpp"

namespace latentseg {

struct ResampleConfig {
    double ratio = 1.0;          // target minority:majority ratio after oversampling
    std::size_t neighbors = 5;   // interpolation neighborhood
    std::uint64_t seed = 0;
    bool duplicate = false;      // plain duplication instead of interpolation
};

struct Resampled {
    Matrix x;
    std::vector<int> y;
    std::size_t n_original = 0; // rows [0, n_original) are the untouched input
};

// Interpolated minority oversampling: each synthetic row lies on the segment
// between a minority row and one of its nearest minority neighbors. Majority
// rows and all original rows pass through unchanged.
Resampled oversample(const Matrix& x, const std::vector<int>& y, const ResampleConfig& cfg);

// Removes the score bias introduced by training on rebalanced data.
// beta is the original-to-balanced minority prior ratio; order-preserving.
double calibrate(double p_s, double beta);

double calibration_beta(double original_minority_prior, double balanced_minority_prior);

} // namespace latentseg
