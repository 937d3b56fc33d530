#include "latentseg/salient.hpp"

#include <cmath>
#include <cstdint>

#include "latentseg/errors.hpp"

namespace latentseg {

SalientReport salient_dimensions(const Matrix& x, const std::vector<int>& labels, double sd) {
    if (labels.size() != x.rows) throw ValidationError("salient_dimensions: label length mismatch");
    if (x.rows == 0) throw ValidationError("salient_dimensions: empty input");
    int kmax = -1;
    for (int l : labels) kmax = std::max(kmax, l);
    const std::size_t k = static_cast<std::size_t>(kmax + 1);
    if (k < 2) throw NumericError("salient_dimensions: out-set empty with a single cluster");

    const std::size_t n = x.rows;
    const std::size_t ell = x.cols;

    std::vector<double> total(ell, 0.0);
    Matrix cluster_sum(k, ell);
    std::vector<double> counts(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        counts[c] += 1.0;
        for (std::size_t v = 0; v < ell; ++v) {
            cluster_sum(c, v) += x(i, v);
            total[v] += x(i, v);
        }
    }
    for (std::size_t c = 0; c < k; ++c)
        if (counts[c] == 0.0) throw ValidationError("salient_dimensions: empty cluster");

    SalientReport report;
    report.sd = sd;
    report.clusters.resize(k);
    const std::int64_t kk = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(static)
    for (std::int64_t ci = 0; ci < kk; ++ci) {
        const auto c = static_cast<std::size_t>(ci);
        auto& cs = report.clusters[c];
        cs.df.resize(ell);
        cs.guarded.assign(ell, 0);
        const double n_in = counts[c];
        const double n_out = static_cast<double>(n) - n_in;
        for (std::size_t v = 0; v < ell; ++v) {
            const double mu_in = cluster_sum(c, v) / n_in;
            const double mu_out = (total[v] - cluster_sum(c, v)) / n_out;
            double denom = mu_out;
            if (std::fabs(denom) < 1e-8) {
                denom = (denom < 0.0 ? -1e-8 : 1e-8);
                cs.guarded[v] = 1;
            }
            cs.df[v] = (mu_in - mu_out) / denom;
        }
        double mu_df = 0.0;
        for (double d : cs.df) mu_df += d;
        mu_df /= static_cast<double>(ell);
        double ss = 0.0;
        for (double d : cs.df) ss += (d - mu_df) * (d - mu_df);
        cs.mu_df = mu_df;
        cs.sigma_df = std::sqrt(ss / static_cast<double>(ell));

        if (cs.sigma_df > 0.0) {
            for (std::size_t v = 0; v < ell; ++v) {
                if (cs.df[v] >= mu_df + sd * cs.sigma_df)
                    cs.salient.push_back({v, +1});
                else if (cs.df[v] <= mu_df - sd * cs.sigma_df)
                    cs.salient.push_back({v, -1});
            }
        }
    }
    return report;
}

} // namespace latentseg
