#include "latentseg/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "latentseg/kernels.hpp"
#include "latentseg/rng.hpp"

namespace latentseg {

namespace {

// Lance-Williams update on squared Euclidean distances.
double lw_update(Linkage linkage, double d_ak, double d_bk, double d_ab, double na, double nb,
                 double nk) {
    if (linkage == Linkage::complete) return std::max(d_ak, d_bk);
    const double tot = na + nb + nk;
    return ((na + nk) * d_ak + (nb + nk) * d_bk - nk * d_ab) / tot;
}

// Nearest-neighbor-chain agglomeration; returns the two member sets joined by
// the final merge (the cut of the dendrogram at two clusters).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
agglomerate_to_two(const Matrix& pts, Linkage linkage, std::vector<LinkageMerge>* records = nullptr) {
    const std::size_t m = pts.rows;
    Matrix dist = kernels::pairwise_sqdist(pts, pts);
    std::vector<char> alive(m, 1);
    std::vector<double> size(m, 1.0);
    std::vector<std::vector<std::size_t>> members(m);
    for (std::size_t i = 0; i < m; ++i) members[i] = {i};
    std::size_t n_alive = m;

    std::vector<std::size_t> chain;
    auto nearest = [&](std::size_t a) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t who = a;
        for (std::size_t k = 0; k < m; ++k) {
            if (!alive[k] || k == a) continue;
            const double d = dist(a, k);
            if (d < best || (d == best && k < who)) {
                best = d;
                who = k;
            }
        }
        return who;
    };

    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> final_pair;
    while (n_alive > 1) {
        if (chain.empty()) {
            for (std::size_t i = 0; i < m; ++i)
                if (alive[i]) {
                    chain.push_back(i);
                    break;
                }
        }
        const std::size_t a = chain.back();
        const std::size_t b = nearest(a);
        if (chain.size() >= 2 && chain[chain.size() - 2] == b) {
            chain.pop_back();
            chain.pop_back();
            const std::size_t lo = std::min(a, b), hi = std::max(a, b);
            if (n_alive == 2) {
                final_pair = {members[lo], members[hi]};
            }
            if (records)
                records->push_back({lo, hi, std::sqrt(std::max(0.0, dist(lo, hi))),
                                    members[lo].size() + members[hi].size()});
            for (std::size_t k = 0; k < m; ++k) {
                if (!alive[k] || k == lo || k == hi) continue;
                const double d =
                    lw_update(linkage, dist(lo, k), dist(hi, k), dist(lo, hi), size[lo], size[hi],
                              size[k]);
                dist(lo, k) = d;
                dist(k, lo) = d;
            }
            members[lo].insert(members[lo].end(), members[hi].begin(), members[hi].end());
            size[lo] += size[hi];
            alive[hi] = 0;
            --n_alive;
        } else {
            chain.push_back(b);
        }
    }
    return final_pair;
}

std::vector<double> mean_of(const Matrix& pts, const std::vector<std::size_t>& idx) {
    std::vector<double> c(pts.cols, 0.0);
    for (auto i : idx)
        for (std::size_t j = 0; j < pts.cols; ++j) c[j] += pts(i, j);
    for (double& v : c) v /= static_cast<double>(idx.size());
    return c;
}

bool all_identical(const Matrix& pts) {
    for (std::size_t i = 1; i < pts.rows; ++i)
        for (std::size_t j = 0; j < pts.cols; ++j)
            if (pts(i, j) != pts(0, j)) return false;
    return true;
}

} // namespace

BipartitionResult bipartition(const Matrix& points, Linkage linkage, std::size_t subsample_cap,
                              std::uint64_t seed) {
    if (points.rows < 2) throw ValidationError("bipartition: need at least 2 points");
    if (all_identical(points)) throw NumericError("bipartition: all points identical");

    BipartitionResult out;
    out.labels.assign(points.rows, 0);

    std::vector<std::size_t> side_a, side_b;
    if (points.rows <= subsample_cap) {
        auto [a, b] = agglomerate_to_two(points, linkage);
        side_a = std::move(a);
        side_b = std::move(b);
    } else {
        Rng rng(seed);
        auto sub = rng.sample_without_replacement(points.rows, subsample_cap);
        std::sort(sub.begin(), sub.end());
        const Matrix sub_pts = points.take(sub);
        if (all_identical(sub_pts)) throw NumericError("bipartition: subsample degenerate");
        auto [a, b] = agglomerate_to_two(sub_pts, linkage);
        const auto ca = mean_of(sub_pts, a);
        const auto cb = mean_of(sub_pts, b);
        for (std::size_t i = 0; i < points.rows; ++i) {
            const double da = sq_dist(points.row(i), ca);
            const double db = sq_dist(points.row(i), cb);
            if (db < da)
                side_b.push_back(i);
            else
                side_a.push_back(i);
        }
        if (side_a.empty() || side_b.empty())
            throw NumericError("bipartition: propagation produced an empty side");
    }

    // Side containing the lowest row index is labeled 0.
    if (*std::min_element(side_b.begin(), side_b.end()) <
        *std::min_element(side_a.begin(), side_a.end()))
        std::swap(side_a, side_b);
    for (auto i : side_b) out.labels[i] = 1;
    out.c1 = mean_of(points, side_a);
    out.c2 = mean_of(points, side_b);
    return out;
}

ClusterModel label_latent(const Matrix& points, const std::vector<int>& y,
                          const ClusterParams& params) {
    if (points.rows == 0) throw ValidationError("label_latent: no points");
    if (y.size() != points.rows) throw ValidationError("label_latent: y length mismatch");
    if (params.n_min < 2) throw ValidationError("label_latent: n_min must be >= 2");
    if (params.rho < 0.0) throw ValidationError("label_latent: rho must be >= 0");

    struct Pending {
        std::vector<std::size_t> idx;
        std::uint64_t seed;
    };
    std::deque<Pending> worklist;
    {
        Pending root;
        root.idx.resize(points.rows);
        for (std::size_t i = 0; i < points.rows; ++i) root.idx[i] = i;
        root.seed = params.seed;
        worklist.push_back(std::move(root));
    }

    ClusterModel model;
    model.params = params;
    std::vector<std::vector<std::size_t>> final_clusters;

    while (!worklist.empty()) {
        Pending cur = std::move(worklist.front());
        worklist.pop_front();
        if (cur.idx.size() < 2 * (params.n_min + 1)) { // both children must exceed n_min
            final_clusters.push_back(std::move(cur.idx));
            continue;
        }
        const Matrix sub = points.take(cur.idx);
        BipartitionResult split;
        try {
            split = bipartition(sub, params.linkage, params.subsample_cap, cur.seed);
        } catch (const NumericError&) {
            final_clusters.push_back(std::move(cur.idx));
            continue;
        }
        std::vector<std::size_t> c1_idx, c2_idx;
        for (std::size_t i = 0; i < cur.idx.size(); ++i)
            (split.labels[i] == 0 ? c1_idx : c2_idx).push_back(cur.idx[i]);
        const double dist = std::sqrt(sq_dist(split.c1, split.c2));
        const bool accept =
            c1_idx.size() > params.n_min && c2_idx.size() > params.n_min && dist > params.rho;
        if (accept) {
            AcceptedSplit rec;
            rec.c1 = split.c1;
            rec.c2 = split.c2;
            rec.n1 = c1_idx.size();
            rec.n2 = c2_idx.size();
            rec.centroid_distance = dist;
            model.accepted_splits.push_back(std::move(rec));
            worklist.push_back({std::move(c1_idx), Rng::derive(cur.seed, 1)});
            worklist.push_back({std::move(c2_idx), Rng::derive(cur.seed, 2)});
        } else {
            final_clusters.push_back(std::move(cur.idx));
        }
    }

    std::sort(final_clusters.begin(), final_clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });

    model.k = final_clusters.size();
    model.labels.assign(points.rows, 0);
    model.centroids = Matrix(model.k, points.cols);
    for (std::size_t c = 0; c < model.k; ++c) {
        const auto& idx = final_clusters[c];
        std::size_t events = 0;
        for (auto i : idx) {
            model.labels[i] = static_cast<int>(c);
            events += static_cast<std::size_t>(y[i]);
            for (std::size_t j = 0; j < points.cols; ++j) model.centroids(c, j) += points(i, j);
        }
        for (std::size_t j = 0; j < points.cols; ++j)
            model.centroids(c, j) /= static_cast<double>(idx.size());
        model.sizes.push_back(idx.size());
        model.cluster_default_rate.push_back(static_cast<double>(events) /
                                             static_cast<double>(idx.size()));
    }
    if (model.k >= 2 && points.rows > model.k) {
        model.ch = ch_index(points, model.labels);
        model.bcdr_score = bcdr(model.cluster_default_rate);
    }
    return model;
}

double ch_index(const Matrix& points, const std::vector<int>& labels) {
    if (labels.size() != points.rows) throw ValidationError("ch_index: label length mismatch");
    int kmax = -1;
    for (int l : labels) kmax = std::max(kmax, l);
    const std::size_t k = static_cast<std::size_t>(kmax + 1);
    const std::size_t n = points.rows;
    if (k < 2) throw NumericError("ch_index: undefined for fewer than 2 clusters");
    if (n <= k) throw NumericError("ch_index: need more points than clusters");

    Matrix centroids(k, points.cols);
    std::vector<double> counts(k, 0.0);
    std::vector<double> grand(points.cols, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        counts[c] += 1.0;
        for (std::size_t j = 0; j < points.cols; ++j) {
            centroids(c, j) += points(i, j);
            grand[j] += points(i, j);
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0.0) throw NumericError("ch_index: empty cluster");
        for (std::size_t j = 0; j < points.cols; ++j) centroids(c, j) /= counts[c];
    }
    for (double& v : grand) v /= static_cast<double>(n);

    double between = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        between += counts[c] * sq_dist(centroids.row(c), grand);
    double within = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        within += sq_dist(points.row(i), centroids.row(static_cast<std::size_t>(labels[i])));

    return (between / static_cast<double>(k - 1)) / (within / static_cast<double>(n - k));
}

double bcdr(const std::vector<double>& rates) {
    const std::size_t k = rates.size();
    if (k < 2) throw NumericError("bcdr: undefined for fewer than 2 clusters");
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            if (j != i) worst = std::max(worst, std::fabs(rates[i] - rates[j]));
        acc += worst;
    }
    return acc / static_cast<double>(k);
}

std::size_t assign_cluster(const ClusterModel& m, std::span<const double> z) {
    if (m.k == 0) throw ValidationError("assign_cluster: model has no clusters");
    if (z.size() != m.centroids.cols) throw ValidationError("assign_cluster: dimension mismatch");
    std::size_t best = 0;
    double best_d = sq_dist(z, m.centroids.row(0));
    for (std::size_t c = 1; c < m.k; ++c) {
        const double d = sq_dist(z, m.centroids.row(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::vector<LinkageMerge> linkage_merges(const Matrix& pts, Linkage linkage) {
    if (pts.rows < 2) throw ValidationError("linkage_merges: need at least 2 points");
    std::vector<LinkageMerge> records;
    agglomerate_to_two(pts, linkage, &records);
    std::sort(records.begin(), records.end(),
              [](const LinkageMerge& a, const LinkageMerge& b) { return a.distance < b.distance; });
    return records;
}

std::size_t default_n_min(std::size_t n) {
    return std::max<std::size_t>(500, static_cast<std::size_t>(std::llround(0.005 * static_cast<double>(n))));
}

double default_rho(const Matrix& points) {
    // Splitting a single Gaussian cloud separates the sibling centroids by
    // 2 E|x| = ~1.6 standard deviations along the cut axis, so a floor at 1.6
    // pooled standard deviations rejects the root split of a structureless
    // cloud. Genuinely clustered latents put most of the pooled variance
    // between modes, which keeps their split distances above this floor.
    std::vector<double> mean, var;
    kernels::colwise_mean_var(points, mean, var);
    double avg = 0.0;
    for (double v : var) avg += v;
    avg /= static_cast<double>(points.cols);
    return 1.6 * std::sqrt(avg);
}

} // namespace latentseg
