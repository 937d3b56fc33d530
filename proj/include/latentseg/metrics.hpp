#pragma once

#include <span>
#include <vector>

namespace latentseg {

struct ScoredSample {
    std::vector<double> scores;
    std::vector<int> y;

    double prior_event() const;
    double prior_nonevent() const { return 1.0 - prior_event(); }
};

// Mann-Whitney statistic: the fraction of (event, non-event) pairs ranked
// correctly, ties counted one half. Exact integer pair arithmetic.
double auc(std::span<const double> scores, std::span<const int> y);

double gini(double auc_value);

// Supremum gap between the two class-conditional empirical score CDFs.
double ks(std::span<const double> scores, std::span<const int> y);

// 1 - L/L_max, where L integrates the minimum expected misclassification loss
// along the ROC lower envelope against a Beta(a, b) cost-severity density.
double h_measure(std::span<const double> scores, std::span<const int> y, double severity_a = 2.0,
                 double severity_b = 2.0);

struct MetricRow {
    double h = 0.0;
    double auc = 0.0;
    double gini = 0.0;
    double ks = 0.0;
};

MetricRow all_metrics(std::span<const double> scores, std::span<const int> y);

} // namespace latentseg
