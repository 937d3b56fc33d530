#include "latentseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "latentseg/errors.hpp"
#include "latentseg/stats.hpp"

namespace latentseg {

namespace {

struct ClassCounts {
    std::size_t n1 = 0;
    std::size_t n0 = 0;
};

ClassCounts count_classes(std::span<const int> y, const char* op) {
    ClassCounts c;
    for (int v : y) {
        if (v == 1)
            ++c.n1;
        else if (v == 0)
            ++c.n0;
        else
            throw ValidationError(std::string(op) + ": label outside {0,1}");
    }
    if (c.n1 == 0 || c.n0 == 0)
        throw NumericError(std::string(op) + ": undefined with a single class");
    return c;
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    return idx;
}

} // namespace

double ScoredSample::prior_event() const {
    std::size_t n1 = 0;
    for (int v : y) n1 += static_cast<std::size_t>(v);
    return static_cast<double>(n1) / static_cast<double>(y.size());
}

double auc(std::span<const double> scores, std::span<const int> y) {
    if (scores.size() != y.size()) throw ValidationError("auc: size mismatch");
    const auto cls = count_classes(y, "auc");
    const auto idx = order_by_score(scores);

    std::uint64_t wins = 0, ties = 0, neg_below = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        std::uint64_t pos_here = 0, neg_here = 0;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            if (y[idx[j]] == 1)
                ++pos_here;
            else
                ++neg_here;
            ++j;
        }
        wins += pos_here * neg_below;
        ties += pos_here * neg_here;
        neg_below += neg_here;
        i = j;
    }
    const double denom = 2.0 * static_cast<double>(cls.n1) * static_cast<double>(cls.n0);
    return static_cast<double>(2 * wins + ties) / denom;
}

double gini(double auc_value) {
    if (auc_value < 0.0 || auc_value > 1.0) throw ValidationError("gini: auc outside [0,1]");
    return 2.0 * auc_value - 1.0;
}

double ks(std::span<const double> scores, std::span<const int> y) {
    if (scores.size() != y.size()) throw ValidationError("ks: size mismatch");
    const auto cls = count_classes(y, "ks");
    const auto idx = order_by_score(scores);

    double best = 0.0;
    std::size_t cum1 = 0, cum0 = 0, i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            if (y[idx[j]] == 1)
                ++cum1;
            else
                ++cum0;
            ++j;
        }
        const double f1 = static_cast<double>(cum1) / static_cast<double>(cls.n1);
        const double f0 = static_cast<double>(cum0) / static_cast<double>(cls.n0);
        best = std::max(best, std::fabs(f1 - f0));
        i = j;
    }
    return best;
}

namespace {

struct Line {
    double slope;
    double intercept;
    double at(double c) const { return slope * c + intercept; }
};

double intersect(const Line& a, const Line& b) {
    return (b.intercept - a.intercept) / (a.slope - b.slope);
}

// Lower envelope over c in [0,1]; input lines arbitrary, output ordered by
// decreasing slope (the order segments win as c increases).
std::vector<Line> lower_envelope(std::vector<Line> lines) {
    std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
        if (a.slope != b.slope) return a.slope > b.slope;
        return a.intercept < b.intercept;
    });
    std::vector<Line> dedup;
    for (const auto& l : lines)
        if (dedup.empty() || dedup.back().slope != l.slope) dedup.push_back(l);

    std::vector<Line> hull;
    for (const auto& l : dedup) {
        while (!hull.empty() && hull.back().intercept >= l.intercept) hull.pop_back();
        while (hull.size() >= 2 &&
               intersect(hull[hull.size() - 2], l) <= intersect(hull[hull.size() - 2], hull.back()))
            hull.pop_back();
        hull.push_back(l);
    }
    return hull;
}

// Integral of the envelope against the Beta(a, b) density over [0,1].
double integrate_envelope(const std::vector<Line>& hull, double a, double b) {
    auto w0 = [&](double x) { return stats::reg_inc_beta(a, b, x); };
    auto w1 = [&](double x) { return a / (a + b) * stats::reg_inc_beta(a + 1.0, b, x); };
    double total = 0.0;
    double c_lo = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        double c_hi = 1.0;
        if (i + 1 < hull.size()) c_hi = std::clamp(intersect(hull[i], hull[i + 1]), c_lo, 1.0);
        if (c_hi > c_lo) {
            total += hull[i].slope * (w1(c_hi) - w1(c_lo)) +
                     hull[i].intercept * (w0(c_hi) - w0(c_lo));
            c_lo = c_hi;
        }
    }
    return total;
}

} // namespace

double h_measure(std::span<const double> scores, std::span<const int> y, double severity_a,
                 double severity_b) {
    if (scores.size() != y.size()) throw ValidationError("h_measure: size mismatch");
    const auto cls = count_classes(y, "h_measure");
    const double pi1 = static_cast<double>(cls.n1) / static_cast<double>(y.size());
    const double pi0 = 1.0 - pi1;
    const auto idx = order_by_score(scores);

    // One loss line per threshold "classify as event above t": at cost c the
    // expected loss is c*pi1*F1(t) + (1-c)*pi0*(1-F0(t)).
    std::vector<Line> lines;
    auto add_point = [&](double f1, double f0) {
        lines.push_back({pi1 * f1 - pi0 * (1.0 - f0), pi0 * (1.0 - f0)});
    };
    add_point(0.0, 0.0); // everything classified as event
    std::size_t cum1 = 0, cum0 = 0, i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            if (y[idx[j]] == 1)
                ++cum1;
            else
                ++cum0;
            ++j;
        }
        add_point(static_cast<double>(cum1) / static_cast<double>(cls.n1),
                  static_cast<double>(cum0) / static_cast<double>(cls.n0));
        i = j;
    }

    const double loss = integrate_envelope(lower_envelope(lines), severity_a, severity_b);
    const double loss_max = integrate_envelope(
        lower_envelope({{pi1, 0.0}, {-pi0, pi0}}), severity_a, severity_b);
    if (loss_max <= 0.0) throw NumericError("h_measure: degenerate baseline loss");
    return 1.0 - loss / loss_max;
}

MetricRow all_metrics(std::span<const double> scores, std::span<const int> y) {
    MetricRow row;
    row.auc = auc(scores, y);
    row.gini = gini(row.auc);
    row.ks = ks(scores, y);
    row.h = h_measure(scores, y);
    return row;
}

} // namespace latentseg
