#pragma once

#include <string>
#include <vector>

#include "latentseg/dataset.hpp"

namespace latentseg {

enum class BinningStage { fine, coarse };

struct FeatureBinning {
    FeatureKind kind = FeatureKind::continuous;
    // Continuous: strictly increasing interior cut points; bins are
    // (-inf, c0), [c0, c1), ..., [c_last, +inf). A boundary value goes right.
    std::vector<double> cuts;
    // Categorical: category index -> bin id.
    std::vector<int> group_of_category;
    bool flagged = false; // constant or low-cardinality feature

    std::size_t n_bins() const;
    std::size_t bin_of(double value) const;
};

struct Binning {
    BinningStage stage = BinningStage::fine;
    std::vector<FeatureBinning> features;
};

struct BinStats {
    std::size_t events = 0;
    std::size_t nonevents = 0;
    double woe = 0.0;
};

struct WoeTable {
    std::vector<std::vector<BinStats>> features;
    double prior_log_odds = 0.0;
    double smoothing = 0.5;
    std::size_t total_events = 0;
    std::size_t total_nonevents = 0;
};

enum class UnseenPolicy { strict, zero };

// Equal-frequency binning per continuous feature; categoricals get one bin per
// category. Features with fewer distinct values than requested get fewer bins
// and are flagged.
Binning fine_class(const Dataset& ds, std::size_t n_bins,
                   std::vector<std::string>* warnings = nullptr);

WoeTable woe_values(const Binning& b, const Dataset& ds, double smoothing = 0.5);

// Greedy merge of the pair with the most similar WoE. Merging continues while
// any candidate gap is below min_gap or the bin count exceeds max_bins, so the
// result satisfies both. Continuous features merge adjacent bins only;
// categorical bins may merge across any pair.
Binning coarse_class(const Binning& b, const WoeTable& woe, std::size_t max_bins,
                     double min_gap);

Matrix woe_transform(const Dataset& ds, const WoeTable& wt, const Binning& b,
                     UnseenPolicy policy = UnseenPolicy::strict);

} // namespace latentseg
