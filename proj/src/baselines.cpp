#include "latentseg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "latentseg/kernels.hpp"
#include "latentseg/rng.hpp"
#include "latentseg/woe.hpp"

namespace latentseg {

namespace {

// Cyclic Jacobi eigendecomposition for symmetric matrices; fine at the feature
// counts this project sees (d <= a few hundred).
void jacobi_eigen(Matrix a, std::vector<double>& values, Matrix& vectors) {
    const std::size_t d = a.rows;
    vectors = Matrix(d, d);
    for (std::size_t i = 0; i < d; ++i) vectors(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-22) break;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                if (std::fabs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < d; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double vip = vectors(i, p), viq = vectors(i, q);
                    vectors(i, p) = c * vip - s * viq;
                    vectors(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    values.resize(d);
    for (std::size_t i = 0; i < d; ++i) values[i] = a(i, i);
}

} // namespace

PcaModel pca_fit(const Matrix& x, std::size_t n_components) {
    if (x.rows < 2) throw ValidationError("pca_fit: need at least 2 rows");
    if (n_components < 1 || n_components > x.cols)
        throw ValidationError("pca_fit: n_components outside [1, d]");

    PcaModel m;
    std::vector<double> var;
    kernels::colwise_mean_var(x, m.mean, var);

    Matrix centered = x;
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) centered(i, j) -= m.mean[j];
    Matrix cov = kernels::gemm_tn(centered, centered);
    for (double& v : cov.data) v /= static_cast<double>(x.rows - 1);

    std::vector<double> values;
    Matrix vectors;
    jacobi_eigen(cov, values, vectors);

    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

    m.components = Matrix(n_components, x.cols);
    for (std::size_t c = 0; c < n_components; ++c) {
        const std::size_t src = order[c];
        m.explained_variance.push_back(std::max(0.0, values[src]));
        // Deterministic orientation: largest-magnitude loading is positive.
        std::size_t arg = 0;
        for (std::size_t j = 1; j < x.cols; ++j)
            if (std::fabs(vectors(j, src)) > std::fabs(vectors(arg, src))) arg = j;
        const double flip = vectors(arg, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < x.cols; ++j) m.components(c, j) = flip * vectors(j, src);
    }
    return m;
}

Matrix pca_transform(const PcaModel& m, const Matrix& x) {
    if (x.cols != m.components.cols) throw ValidationError("pca_transform: width mismatch");
    Matrix centered = x;
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) centered(i, j) -= m.mean[j];
    return kernels::gemm_nt(centered, m.components);
}

Matrix pca_inverse_transform(const PcaModel& m, const Matrix& z) {
    if (z.cols != m.components.rows) throw ValidationError("pca_inverse_transform: width mismatch");
    Matrix x = kernels::gemm_nn(z, m.components);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) x(i, j) += m.mean[j];
    return x;
}

StandardizeModel standardize_fit(const Matrix& x) {
    if (x.rows == 0) throw ValidationError("standardize_fit: empty input");
    StandardizeModel m;
    std::vector<double> var;
    kernels::colwise_mean_var(x, m.mean, var);
    m.scale.resize(x.cols);
    m.constant_flag.assign(x.cols, 0);
    for (std::size_t j = 0; j < x.cols; ++j) {
        if (var[j] <= 0.0) {
            m.scale[j] = 1.0;
            m.constant_flag[j] = 1;
        } else {
            m.scale[j] = std::sqrt(var[j]);
        }
    }
    return m;
}

Matrix standardize_apply(const StandardizeModel& m, const Matrix& x) {
    if (x.cols != m.mean.size()) throw ValidationError("standardize_apply: width mismatch");
    Matrix out = x;
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = (x(i, j) - m.mean[j]) / m.scale[j];
    return out;
}

namespace {

double lloyd_assign(const Matrix& x, const Matrix& centroids, std::vector<int>& labels) {
    const Matrix d = kernels::pairwise_sqdist(x, centroids);
    double inertia = 0.0;
    labels.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < centroids.rows; ++c)
            if (d(i, c) < d(i, best)) best = c;
        labels[i] = static_cast<int>(best);
        inertia += d(i, best);
    }
    return inertia;
}

Matrix kmeanspp_seed(const Matrix& x, std::size_t k, Rng& rng) {
    Matrix centroids(k, x.cols);
    std::vector<double> d2(x.rows, std::numeric_limits<double>::infinity());
    std::size_t first = rng.index(x.rows);
    centroids.set_row(0, x.row(first));
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            d2[i] = std::min(d2[i], sq_dist(x.row(i), centroids.row(c - 1)));
            total += d2[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            pick = x.rows - 1;
            for (std::size_t i = 0; i < x.rows; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.index(x.rows);
        }
        centroids.set_row(c, x.row(pick));
    }
    return centroids;
}

} // namespace

KmeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed, std::size_t restarts,
                    std::size_t max_iter) {
    if (k == 0 || k > x.rows) throw ValidationError("kmeans: k outside [1, n]");
    if (restarts == 0) throw ValidationError("kmeans: restarts must be >= 1");

    KmeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng rng(Rng::derive(seed, r));
        Matrix centroids = kmeanspp_seed(x, k, rng);
        std::vector<int> labels, prev_labels;
        std::vector<double> trace;
        for (std::size_t it = 0; it < max_iter; ++it) {
            const double inertia = lloyd_assign(x, centroids, labels);
            trace.push_back(inertia);
            if (labels == prev_labels) break;
            prev_labels = labels;

            Matrix sums(k, x.cols);
            std::vector<std::size_t> counts(k, 0);
            for (std::size_t i = 0; i < x.rows; ++i) {
                const auto c = static_cast<std::size_t>(labels[i]);
                counts[c] += 1;
                for (std::size_t j = 0; j < x.cols; ++j) sums(c, j) += x(i, j);
            }
            for (std::size_t c = 0; c < k; ++c) {
                if (counts[c] == 0) {
                    // Reseed the emptied centroid at the worst-fit point.
                    std::size_t far = 0;
                    double far_d = -1.0;
                    for (std::size_t i = 0; i < x.rows; ++i) {
                        const double d =
                            sq_dist(x.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
                        if (d > far_d) {
                            far_d = d;
                            far = i;
                        }
                    }
                    centroids.set_row(c, x.row(far));
                } else {
                    for (std::size_t j = 0; j < x.cols; ++j)
                        centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
                }
            }
        }
        const double inertia = lloyd_assign(x, centroids, labels);
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
            best.centroids = centroids;
            best.inertia_trace = trace;
        }
    }
    return best;
}

ClusterIndexes cluster_indexes(const Matrix& x, const std::vector<int>& labels) {
    if (labels.size() != x.rows) throw ValidationError("cluster_indexes: label length mismatch");
    int kmax = -1;
    for (int l : labels) kmax = std::max(kmax, l);
    const std::size_t k = static_cast<std::size_t>(kmax + 1);
    if (k < 2 || k >= x.rows) throw NumericError("cluster_indexes: need 2 <= k < n");

    ClusterIndexes out;
    out.ch = ch_index(x, labels);

    Matrix centroids(k, x.cols);
    std::vector<double> counts(k, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        counts[c] += 1.0;
        for (std::size_t j = 0; j < x.cols; ++j) centroids(c, j) += x(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0.0) throw NumericError("cluster_indexes: empty cluster");
        for (std::size_t j = 0; j < x.cols; ++j) centroids(c, j) /= counts[c];
    }

    std::vector<double> scatter(k, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        scatter[c] += std::sqrt(sq_dist(x.row(i), centroids.row(c)));
    }
    for (std::size_t c = 0; c < k; ++c) scatter[c] /= counts[c];

    double db = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            const double dij = std::sqrt(sq_dist(centroids.row(i), centroids.row(j)));
            worst = std::max(worst, (scatter[i] + scatter[j]) / dij);
        }
        db += worst;
    }
    out.db = db / static_cast<double>(k);

    // Silhouette, O(n^2); parallel rows with a serial final mean.
    std::vector<double> s(x.rows, 0.0);
    const std::int64_t n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const auto ci = static_cast<std::size_t>(labels[i]);
        if (counts[ci] <= 1.0) {
            s[i] = 0.0;
            continue;
        }
        std::vector<double> dist_sum(k, 0.0);
        for (std::size_t j = 0; j < x.rows; ++j) {
            if (j == i) continue;
            dist_sum[static_cast<std::size_t>(labels[j])] += std::sqrt(sq_dist(x.row(i), x.row(j)));
        }
        const double a = dist_sum[ci] / (counts[ci] - 1.0);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c)
            if (c != ci) b = std::min(b, dist_sum[c] / counts[c]);
        const double denom = std::max(a, b);
        s[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    double mean_s = 0.0;
    for (double v : s) mean_s += v;
    out.silhouette = mean_s / static_cast<double>(x.rows);
    return out;
}

std::vector<IndexSweepRow> kmeans_index_sweep(const Matrix& x, std::size_t k_min, std::size_t k_max,
                                              std::uint64_t seed, std::size_t restarts) {
    if (k_min < 2 || k_min > k_max) throw ValidationError("kmeans_index_sweep: bad k range");
    std::vector<IndexSweepRow> rows;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        const auto km = kmeans(x, k, Rng::derive(seed, k), restarts);
        const auto idx = cluster_indexes(x, km.labels);
        rows.push_back({k, idx.ch, idx.db, idx.silhouette});
    }
    return rows;
}

TransformComparison transform_comparison(const Dataset& ds, const TransformComparisonConfig& cfg) {
    const Fig2Split parts = split_fig2(ds, cfg.partition);
    const auto& dev = parts.development;

    // Codings are fitted once on the full dataset, the way an analyst prepares
    // inputs before any modeling.
    const Binning fine = fine_class(ds, cfg.fine_bins);
    const WoeTable fine_wt = woe_values(fine, ds, cfg.smoothing);
    const Binning coarse = coarse_class(fine, fine_wt, cfg.max_bins, cfg.min_gap);
    const WoeTable coarse_wt = woe_values(coarse, ds, cfg.smoothing);
    const PcaModel pca = pca_fit(ds.rows, ds.d());
    const StandardizeModel std_model = standardize_fit(ds.rows);

    struct Coding {
        std::string name;
        Matrix train;
        Matrix dev;
    };
    std::vector<Coding> codings;
    codings.push_back({"coarse_woe", woe_transform(parts.vae_train, coarse_wt, coarse),
                       woe_transform(dev, coarse_wt, coarse)});
    codings.push_back({"fine_woe", woe_transform(parts.vae_train, fine_wt, fine),
                       woe_transform(dev, fine_wt, fine)});
    codings.push_back(
        {"pca", pca_transform(pca, parts.vae_train.rows), pca_transform(pca, dev.rows)});
    codings.push_back({"standardized", standardize_apply(std_model, parts.vae_train.rows),
                       standardize_apply(std_model, dev.rows)});
    codings.push_back({"raw", parts.vae_train.rows, dev.rows});

    TransformComparison report;
    report.dev_y = dev.y;
    for (std::size_t r = 0; r < codings.size(); ++r) {
        TransformRun run;
        run.name = codings[r].name;
        try {
            auto [model, trace] =
                train_vae(codings[r].train, cfg.arch, Rng::derive(cfg.seed, r));
            run.trained = true;
            run.latent =
                latent_expectation(model, codings[r].dev, cfg.latent_draws, Rng::derive(cfg.seed, 100 + r));
            ClusterParams params = cfg.cluster;
            params.seed = Rng::derive(cfg.seed, 200 + r);
            if (params.n_min < 2) params.n_min = default_n_min(run.latent.rows);
            if (params.rho <= 0.0) params.rho = default_rho(run.latent);
            const ClusterModel cm = label_latent(run.latent, dev.y, params);
            run.k = cm.k;
            run.labels = cm.labels;
            run.ch = cm.ch;
            run.bcdr = cm.bcdr_score;
            run.structure = cm.k >= 2 && cm.bcdr_score >= 0.01;
        } catch (const NumericError& e) {
            run.error = e.what();
        }
        report.runs.push_back(std::move(run));
    }
    return report;
}

} // namespace latentseg
