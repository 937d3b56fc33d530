#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "latentseg/imbalance.hpp"
#include "latentseg/matrix.hpp"
#include "latentseg/metrics.hpp"
#include "latentseg/neural.hpp"

namespace latentseg {

struct ClassifierArch {
    std::size_t hidden = 16;
    double lr = 1e-3;
    std::size_t epochs = 200;
    std::size_t batch = 128;
    std::size_t patience = 10;   // epochs without improvement before stopping
    double min_improve = 1e-5;
    OptMethod optimizer = OptMethod::adam;
};

struct Classifier {
    MlpParams net;     // tanh hidden layer, linear logit head
    double beta = 1.0; // prior ratio for probability-bias correction
};

// Binary cross-entropy training on the rebalanced sample; raw scores stay
// strictly inside (0,1) through the sigmoid.
Classifier train_classifier(const Matrix& x, const std::vector<int>& y,
                            const ClassifierArch& arch, const ResampleConfig& resample,
                            std::uint64_t seed);

std::vector<double> classifier_scores(const Classifier& c, const Matrix& x);
std::vector<double> classifier_pd(const Classifier& c, const Matrix& x); // bias-corrected

// Two-sided Welch test.
double unpaired_ttest(std::span<const double> a, std::span<const double> b);

struct ExperimentConfig {
    std::size_t folds = 10;
    double train_frac = 0.7;
    std::vector<ClassifierArch> grid = {ClassifierArch{}};
    ResampleConfig resample;
    std::uint64_t seed = 0;
    std::size_t min_class_rows = 10; // per-cluster feasibility floor, each class
};

struct ClusterPerformance {
    int cluster = 0;
    bool feasible = true;
    std::string note;
    std::vector<MetricRow> segment_folds;
    std::vector<MetricRow> portfolio_folds;
    MetricRow segment_mean;
    MetricRow portfolio_mean;
    double p_value_h = 1.0;
    std::size_t segment_arch = 0;   // grid index backing the reported rows
    std::size_t portfolio_arch = 0;
};

struct PerformanceTable {
    std::vector<ClusterPerformance> clusters;
    std::size_t folds = 0;
    std::size_t grid_size = 1;
};

using FoldObserver = std::function<void(std::size_t fold, const std::vector<std::size_t>& train,
                                        const std::vector<std::size_t>& test)>;

// The repeated resample-train-test comparison: per fold, a fresh stratified
// 70/30 split, oversampling of the training side only, k per-cluster models
// against one portfolio model, everything evaluated per cluster on untouched
// test rows at the original class ratio.
PerformanceTable run_experiment(const Matrix& x, const std::vector<int>& y,
                                const std::vector<int>& cluster_labels,
                                const ExperimentConfig& cfg,
                                const FoldObserver* observer = nullptr);

} // namespace latentseg
