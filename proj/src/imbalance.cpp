#include "latentseg/imbalance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "latentseg/kernels.hpp"
#include "latentseg/rng.hpp"

namespace latentseg {

Resampled oversample(const Matrix& x, const std::vector<int>& y, const ResampleConfig& cfg) {
    if (y.size() != x.rows) throw ValidationError("oversample: label length mismatch");
    if (cfg.ratio <= 0.0 || cfg.ratio > 1.0) throw ValidationError("oversample: ratio must be in (0,1]");
    if (cfg.neighbors < 1) throw ValidationError("oversample: neighbors must be >= 1");

    std::vector<std::size_t> minority, majority;
    for (std::size_t i = 0; i < x.rows; ++i) (y[i] == 1 ? minority : majority).push_back(i);

    const auto target =
        static_cast<std::size_t>(std::llround(cfg.ratio * static_cast<double>(majority.size())));
    const std::size_t need = target > minority.size() ? target - minority.size() : 0;

    Resampled out;
    out.n_original = x.rows;
    if (need == 0) {
        out.x = x;
        out.y = y;
        return out;
    }
    if (!cfg.duplicate && minority.size() < cfg.neighbors + 1)
        throw NumericError("oversample: need at least " + std::to_string(cfg.neighbors + 1) +
                           " minority rows, have " + std::to_string(minority.size()));
    if (cfg.duplicate && minority.empty())
        throw NumericError("oversample: no minority rows to duplicate");

    const Matrix m = x.take(minority);

    // k nearest minority neighbors per minority row, self excluded.
    std::vector<std::vector<std::size_t>> nn(m.rows);
    if (!cfg.duplicate) {
        const Matrix d = kernels::pairwise_sqdist(m, m);
        const std::int64_t rows = static_cast<std::int64_t>(m.rows);
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < rows; ++i) {
            std::vector<std::pair<double, std::size_t>> order;
            order.reserve(m.rows - 1);
            for (std::size_t j = 0; j < m.rows; ++j)
                if (j != static_cast<std::size_t>(i))
                    order.emplace_back(d(static_cast<std::size_t>(i), j), j);
            std::partial_sort(order.begin(),
                              order.begin() + static_cast<std::ptrdiff_t>(cfg.neighbors),
                              order.end());
            auto& lst = nn[static_cast<std::size_t>(i)];
            for (std::size_t t = 0; t < cfg.neighbors; ++t) lst.push_back(order[t].second);
        }
    }

    out.x = Matrix(x.rows + need, x.cols);
    std::copy(x.data.begin(), x.data.end(), out.x.data.begin());
    out.y = y;
    out.y.resize(x.rows + need, 1);

    const std::int64_t need_i = static_cast<std::int64_t>(need);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < need_i; ++r) {
        Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(r)));
        const std::size_t base = rng.index(m.rows);
        double* dst = out.x.row_ptr(x.rows + static_cast<std::size_t>(r));
        if (cfg.duplicate) {
            for (std::size_t j = 0; j < x.cols; ++j) dst[j] = m(base, j);
        } else {
            const std::size_t nb = nn[base][rng.index(cfg.neighbors)];
            const double u = rng.uniform();
            for (std::size_t j = 0; j < x.cols; ++j)
                dst[j] = m(base, j) + u * (m(nb, j) - m(base, j));
        }
    }
    return out;
}

double calibrate(double p_s, double beta) {
    if (p_s < 0.0 || p_s > 1.0) throw ValidationError("calibrate: score outside [0,1]");
    if (beta <= 0.0 || beta > 1.0) throw ValidationError("calibrate: beta outside (0,1]");
    return beta * p_s / (beta * p_s - p_s + 1.0);
}

double calibration_beta(double original_minority_prior, double balanced_minority_prior) {
    if (balanced_minority_prior <= 0.0)
        throw ValidationError("calibration_beta: balanced prior must be positive");
    return original_minority_prior / balanced_minority_prior;
}

} // namespace latentseg
