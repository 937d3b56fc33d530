#include "latentseg/woe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace latentseg {

std::size_t FeatureBinning::n_bins() const {
    if (kind == FeatureKind::continuous) return cuts.size() + 1;
    int hi = -1;
    for (int g : group_of_category) hi = std::max(hi, g);
    return static_cast<std::size_t>(hi + 1);
}

std::size_t FeatureBinning::bin_of(double value) const {
    if (kind == FeatureKind::continuous) {
        return static_cast<std::size_t>(
            std::upper_bound(cuts.begin(), cuts.end(), value) - cuts.begin());
    }
    const auto c = static_cast<std::size_t>(value);
    if (c >= group_of_category.size()) return group_of_category.size(); // unseen sentinel
    return static_cast<std::size_t>(group_of_category[c]);
}

Binning fine_class(const Dataset& ds, std::size_t n_bins, std::vector<std::string>* warnings) {
    if (n_bins < 2) throw ValidationError("fine_class: n_bins must be >= 2");
    if (ds.n() == 0) throw ValidationError("fine_class: empty dataset");

    Binning out;
    out.stage = BinningStage::fine;
    for (std::size_t j = 0; j < ds.d(); ++j) {
        FeatureBinning fb;
        fb.kind = ds.feature_meta[j].kind;
        if (fb.kind == FeatureKind::categorical) {
            fb.group_of_category.resize(ds.feature_meta[j].categories.size());
            for (std::size_t c = 0; c < fb.group_of_category.size(); ++c)
                fb.group_of_category[c] = static_cast<int>(c);
        } else {
            std::vector<double> v(ds.n());
            for (std::size_t i = 0; i < ds.n(); ++i) v[i] = ds.rows(i, j);
            std::sort(v.begin(), v.end());
            // Quantile cuts at equal-count boundaries; duplicates collapse.
            for (std::size_t b = 1; b < n_bins; ++b) {
                const double cut = v[b * ds.n() / n_bins];
                if (cut > v.front() && (fb.cuts.empty() || cut > fb.cuts.back()))
                    fb.cuts.push_back(cut);
            }
            if (fb.cuts.size() + 1 < n_bins) {
                fb.flagged = true;
                if (warnings)
                    warnings->push_back("fine_class: feature " + ds.feature_meta[j].name + " has " +
                                        std::to_string(fb.cuts.size() + 1) + " bins (requested " +
                                        std::to_string(n_bins) + ")");
            }
        }
        out.features.push_back(std::move(fb));
    }
    return out;
}

WoeTable woe_values(const Binning& b, const Dataset& ds, double smoothing) {
    if (b.features.size() != ds.d())
        throw ValidationError("woe_values: binning does not match dataset width");
    std::size_t events = 0;
    for (int v : ds.y) events += static_cast<std::size_t>(v);
    const std::size_t nonevents = ds.n() - events;
    if (events == 0 || nonevents == 0)
        throw NumericError("woe_values: WoE undefined on a single-class dataset");

    WoeTable wt;
    wt.smoothing = smoothing;
    wt.total_events = events;
    wt.total_nonevents = nonevents;
    wt.prior_log_odds = std::log(static_cast<double>(events) / static_cast<double>(nonevents));

    const double e_tot = static_cast<double>(events) + 2.0 * smoothing;
    const double ne_tot = static_cast<double>(nonevents) + 2.0 * smoothing;
    for (std::size_t j = 0; j < ds.d(); ++j) {
        std::vector<BinStats> bins(b.features[j].n_bins());
        for (std::size_t i = 0; i < ds.n(); ++i) {
            const std::size_t k = b.features[j].bin_of(ds.rows(i, j));
            if (k >= bins.size())
                throw ValidationError("woe_values: value outside binning domain in feature " +
                                      ds.feature_meta[j].name);
            if (ds.y[i] == 1)
                bins[k].events += 1;
            else
                bins[k].nonevents += 1;
        }
        for (auto& bin : bins) {
            bin.woe = std::log((static_cast<double>(bin.events) + smoothing) / e_tot) -
                      std::log((static_cast<double>(bin.nonevents) + smoothing) / ne_tot);
        }
        wt.features.push_back(std::move(bins));
    }
    return wt;
}

namespace {

struct MergeBin {
    std::vector<std::size_t> members; // fine bin ids, sorted
    std::size_t events = 0;
    std::size_t nonevents = 0;
    double woe = 0.0;
};

double merged_woe(std::size_t e, std::size_t ne, const WoeTable& wt) {
    const double e_tot = static_cast<double>(wt.total_events) + 2.0 * wt.smoothing;
    const double ne_tot = static_cast<double>(wt.total_nonevents) + 2.0 * wt.smoothing;
    return std::log((static_cast<double>(e) + wt.smoothing) / e_tot) -
           std::log((static_cast<double>(ne) + wt.smoothing) / ne_tot);
}

} // namespace

Binning coarse_class(const Binning& b, const WoeTable& woe, std::size_t max_bins, double min_gap) {
    if (b.stage != BinningStage::fine) throw ValidationError("coarse_class: input must be fine");
    if (b.features.size() != woe.features.size())
        throw ValidationError("coarse_class: binning and table sizes differ");
    if (max_bins < 1) throw ValidationError("coarse_class: max_bins must be >= 1");

    Binning out;
    out.stage = BinningStage::coarse;
    for (std::size_t j = 0; j < b.features.size(); ++j) {
        const auto& fb = b.features[j];
        const bool adjacent_only = fb.kind == FeatureKind::continuous;

        std::vector<MergeBin> bins(fb.n_bins());
        for (std::size_t k = 0; k < bins.size(); ++k) {
            bins[k].members = {k};
            bins[k].events = woe.features[j][k].events;
            bins[k].nonevents = woe.features[j][k].nonevents;
            bins[k].woe = woe.features[j][k].woe;
        }

        while (bins.size() > 1) {
            double best_gap = std::numeric_limits<double>::infinity();
            std::size_t best_a = 0, best_b = 0;
            for (std::size_t a = 0; a < bins.size(); ++a) {
                const std::size_t b_end = adjacent_only ? std::min(a + 2, bins.size()) : bins.size();
                for (std::size_t bb = a + 1; bb < b_end; ++bb) {
                    const double gap = std::fabs(bins[a].woe - bins[bb].woe);
                    if (gap < best_gap) {
                        best_gap = gap;
                        best_a = a;
                        best_b = bb;
                    }
                }
            }
            if (best_gap >= min_gap && bins.size() <= max_bins) break;
            auto& dst = bins[best_a];
            auto& src = bins[best_b];
            dst.members.insert(dst.members.end(), src.members.begin(), src.members.end());
            std::sort(dst.members.begin(), dst.members.end());
            dst.events += src.events;
            dst.nonevents += src.nonevents;
            dst.woe = merged_woe(dst.events, dst.nonevents, woe);
            bins.erase(bins.begin() + static_cast<std::ptrdiff_t>(best_b));
        }

        FeatureBinning coarse;
        coarse.kind = fb.kind;
        coarse.flagged = fb.flagged;
        if (fb.kind == FeatureKind::continuous) {
            // Bins of a continuous feature stay ordered; keep the cuts at group edges.
            for (std::size_t g = 0; g + 1 < bins.size(); ++g) {
                const std::size_t last_fine = bins[g].members.back();
                coarse.cuts.push_back(fb.cuts[last_fine]);
            }
        } else {
            coarse.group_of_category.resize(fb.group_of_category.size());
            for (std::size_t c = 0; c < fb.group_of_category.size(); ++c) {
                const std::size_t fine_bin = static_cast<std::size_t>(fb.group_of_category[c]);
                for (std::size_t g = 0; g < bins.size(); ++g) {
                    if (std::binary_search(bins[g].members.begin(), bins[g].members.end(), fine_bin)) {
                        coarse.group_of_category[c] = static_cast<int>(g);
                        break;
                    }
                }
            }
        }
        out.features.push_back(std::move(coarse));
    }
    return out;
}

Matrix woe_transform(const Dataset& ds, const WoeTable& wt, const Binning& b, UnseenPolicy policy) {
    if (b.features.size() != ds.d() || wt.features.size() != ds.d())
        throw ValidationError("woe_transform: shapes do not match dataset");
    Matrix out(ds.n(), ds.d());
    const std::int64_t n = static_cast<std::int64_t>(ds.n());
    std::string error;
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < ds.d(); ++j) {
            const double v = ds.rows(static_cast<std::size_t>(i), j);
            const std::size_t k = b.features[j].bin_of(v);
            if (k >= wt.features[j].size()) {
                if (policy == UnseenPolicy::strict) {
#pragma omp critical
                    if (error.empty())
                        error = "woe_transform: unseen category " + std::to_string(v) +
                                " in feature " + ds.feature_meta[j].name;
                    out(static_cast<std::size_t>(i), j) = 0.0;
                } else {
                    out(static_cast<std::size_t>(i), j) = 0.0;
                }
            } else {
                out(static_cast<std::size_t>(i), j) = wt.features[j][k].woe;
            }
        }
    }
    if (!error.empty()) throw ValidationError(error);
    return out;
}

} // namespace latentseg
