#include "latentseg/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "latentseg/dataset.hpp"
#include "latentseg/rng.hpp"
#include "latentseg/stats.hpp"

namespace latentseg {

namespace {

double bce_loss(double logit, int y) {
    // log(1 + e^z) - y z, evaluated stably on both tails.
    const double sp = logit >= 0.0 ? logit + std::log1p(std::exp(-logit))
                                   : std::log1p(std::exp(logit));
    return sp - static_cast<double>(y) * logit;
}

} // namespace

Classifier train_classifier(const Matrix& x, const std::vector<int>& y,
                            const ClassifierArch& arch, const ResampleConfig& resample,
                            std::uint64_t seed) {
    if (y.size() != x.rows) throw ValidationError("train_classifier: label length mismatch");
    std::size_t events = 0;
    for (int v : y) events += static_cast<std::size_t>(v);
    if (events == 0 || events == y.size())
        throw ValidationError("train_classifier: single-class training data");

    ResampleConfig rcfg = resample;
    rcfg.seed = Rng::derive(seed, 0);
    const Resampled bal = oversample(x, y, rcfg);

    Classifier clf;
    const double orig_prior = static_cast<double>(events) / static_cast<double>(y.size());
    double bal_events = 0.0;
    for (int v : bal.y) bal_events += v;
    clf.beta = calibration_beta(orig_prior, bal_events / static_cast<double>(bal.y.size()));

    MlpSpec spec;
    spec.input = x.cols;
    spec.layers.push_back({arch.hidden, Activation::tanh_act});
    spec.layers.push_back({1, Activation::identity});
    clf.net = init_mlp(spec, Rng::derive(seed, 1));

    OptimizerState opt = arch.optimizer == OptMethod::sgd ? OptimizerState::sgd(arch.lr)
                                                          : OptimizerState::adam(arch.lr);
    Rng rng(Rng::derive(seed, 2));
    std::vector<std::size_t> order(bal.x.rows);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t stall = 0;
    for (std::size_t epoch = 0; epoch < arch.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += arch.batch) {
            const std::size_t b = std::min(arch.batch, order.size() - start);
            const Matrix xb = bal.x.take({order.data() + start, b});
            const ForwardCache cache = forward(clf.net, xb);
            const Matrix& logit = cache.output();

            Matrix d_out(b, 1);
            for (std::size_t i = 0; i < b; ++i) {
                const int yi = bal.y[order[start + i]];
                loss_sum += bce_loss(logit(i, 0), yi);
                const double p = 1.0 / (1.0 + std::exp(-logit(i, 0)));
                d_out(i, 0) = (p - static_cast<double>(yi)) / static_cast<double>(b);
            }
            const Gradients g = backward(clf.net, cache, d_out);
            apply_step(clf.net, g, opt);
        }
        const double epoch_loss = loss_sum / static_cast<double>(bal.x.rows);
        if (epoch_loss < best_loss - arch.min_improve) {
            best_loss = epoch_loss;
            stall = 0;
        } else if (++stall >= arch.patience) {
            break;
        }
    }
    return clf;
}

std::vector<double> classifier_scores(const Classifier& c, const Matrix& x) {
    const Matrix logit = forward(c.net, x).output();
    std::vector<double> s(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) s[i] = 1.0 / (1.0 + std::exp(-logit(i, 0)));
    return s;
}

std::vector<double> classifier_pd(const Classifier& c, const Matrix& x) {
    auto s = classifier_scores(c, x);
    for (double& v : s) v = calibrate(v, std::min(1.0, c.beta));
    return s;
}

double unpaired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("unpaired_ttest: need >= 2 values per sample");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double ma = 0.0, mb = 0.0;
    for (double v : a) ma += v;
    for (double v : b) mb += v;
    ma /= na;
    mb /= nb;
    double va = 0.0, vb = 0.0;
    for (double v : a) va += (v - ma) * (v - ma);
    for (double v : b) vb += (v - mb) * (v - mb);
    va /= na - 1.0;
    vb /= nb - 1.0;

    const double se2 = va / na + vb / nb;
    if (se2 == 0.0) return ma == mb ? 1.0 : 0.0;
    const double t = (ma - mb) / std::sqrt(se2);
    const double df = se2 * se2 /
                      ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    return stats::students_t_two_sided(t, df);
}

PerformanceTable run_experiment(const Matrix& x, const std::vector<int>& y,
                                const std::vector<int>& cluster_labels,
                                const ExperimentConfig& cfg, const FoldObserver* observer) {
    if (y.size() != x.rows || cluster_labels.size() != x.rows)
        throw ValidationError("run_experiment: input lengths differ");
    if (cfg.folds < 2) throw ValidationError("run_experiment: folds must be >= 2");
    if (cfg.grid.empty()) throw ValidationError("run_experiment: empty classifier grid");

    int kmax = -1;
    for (int l : cluster_labels) kmax = std::max(kmax, l);
    const std::size_t k = static_cast<std::size_t>(kmax + 1);

    PerformanceTable table;
    table.folds = cfg.folds;
    table.grid_size = cfg.grid.size();

    std::vector<bool> feasible(k, true);
    table.clusters.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t ev = 0, ne = 0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            if (cluster_labels[i] != static_cast<int>(c)) continue;
            (y[i] == 1 ? ev : ne) += 1;
        }
        table.clusters[c].cluster = static_cast<int>(c);
        if (ev < cfg.min_class_rows || ne < cfg.min_class_rows) {
            feasible[c] = false;
            table.clusters[c].feasible = false;
            table.clusters[c].note = "excluded: " + std::to_string(ev) + " events / " +
                                     std::to_string(ne) + " non-events (need " +
                                     std::to_string(cfg.min_class_rows) + " of each)";
        }
    }

    // A dataset view is needed for the stratified splitter.
    Dataset dev;
    dev.rows = x;
    dev.y = y;
    dev.feature_meta.resize(x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) dev.feature_meta[j].name = "w" + std::to_string(j);

    // metric rows indexed [arch][cluster][fold]
    const std::size_t n_arch = cfg.grid.size();
    std::vector<std::vector<std::vector<MetricRow>>> seg(n_arch), port(n_arch);
    for (auto& a : seg) a.assign(k, {});
    for (auto& a : port) a.assign(k, {});

    for (std::size_t fold = 0; fold < cfg.folds; ++fold) {
        const std::uint64_t fold_seed = Rng::derive(cfg.seed, fold);
        const SplitIndices split =
            split_train_test_indices(dev, cfg.train_frac, &cluster_labels, fold_seed);

        // Leakage guard: test rows must be untouched by training or oversampling.
        {
            std::set<std::size_t> tr(split.train.begin(), split.train.end());
            for (auto t : split.test)
                if (tr.count(t))
                    throw NumericError("run_experiment: train/test overlap at fold " +
                                       std::to_string(fold));
            if (split.train.size() + split.test.size() != x.rows)
                throw NumericError("run_experiment: split is not a partition at fold " +
                                   std::to_string(fold));
        }
        if (observer && *observer) (*observer)(fold, split.train, split.test);

        const Matrix x_train = x.take(split.train);
        std::vector<int> y_train, cl_train;
        for (auto i : split.train) {
            y_train.push_back(y[i]);
            cl_train.push_back(cluster_labels[i]);
        }
        const Matrix x_test = x.take(split.test);
        std::vector<int> y_test, cl_test;
        for (auto i : split.test) {
            y_test.push_back(y[i]);
            cl_test.push_back(cluster_labels[i]);
        }

        auto cluster_rows = [&](const std::vector<int>& cl, int c) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < cl.size(); ++i)
                if (cl[i] == c) idx.push_back(i);
            return idx;
        };
        auto metrics_on = [&](const std::vector<double>& scores, const std::vector<std::size_t>& idx,
                              const std::vector<int>& labels) {
            std::vector<double> s;
            std::vector<int> yy;
            for (auto i : idx) {
                s.push_back(scores[i]);
                yy.push_back(labels[i]);
            }
            return all_metrics(s, yy);
        };

        for (std::size_t a = 0; a < n_arch; ++a) {
            // One portfolio model on the cluster-stratified training set.
            ResampleConfig rc = cfg.resample;
            rc.seed = Rng::derive(fold_seed, 1000 + a);
            const Classifier portfolio = train_classifier(
                x_train, y_train, cfg.grid[a], rc, Rng::derive(fold_seed, 2000 + a));
            const auto port_scores = classifier_scores(portfolio, x_test);

            for (std::size_t c = 0; c < k; ++c) {
                if (!feasible[c]) continue;
                const auto test_idx = cluster_rows(cl_test, static_cast<int>(c));
                port[a][c].push_back(metrics_on(port_scores, test_idx, y_test));

                const auto train_idx = cluster_rows(cl_train, static_cast<int>(c));
                const Matrix xc = x_train.take(train_idx);
                std::vector<int> yc;
                for (auto i : train_idx) yc.push_back(y_train[i]);
                ResampleConfig rcc = cfg.resample;
                rcc.seed = Rng::derive(fold_seed, 3000 + a * k + c);
                const Classifier seg_model =
                    train_classifier(xc, yc, cfg.grid[a], rcc, Rng::derive(fold_seed, 4000 + a * k + c));

                const Matrix x_test_c = x_test.take(test_idx);
                const auto seg_scores_c = classifier_scores(seg_model, x_test_c);
                std::vector<int> y_test_c;
                for (auto i : test_idx) y_test_c.push_back(y_test[i]);
                seg[a][c].push_back(all_metrics(seg_scores_c, y_test_c));
            }
        }
    }

    auto mean_of = [](const std::vector<MetricRow>& rows) {
        MetricRow m;
        for (const auto& r : rows) {
            m.h += r.h;
            m.auc += r.auc;
            m.gini += r.gini;
            m.ks += r.ks;
        }
        const double n = static_cast<double>(rows.size());
        m.h /= n;
        m.auc /= n;
        m.gini /= n;
        m.ks /= n;
        return m;
    };

    // Portfolio winner: one architecture for the single shared model, by overall
    // mean H across feasible clusters.
    std::size_t port_winner = 0;
    if (n_arch > 1) {
        double best = -1.0;
        for (std::size_t a = 0; a < n_arch; ++a) {
            double acc = 0.0;
            std::size_t cnt = 0;
            for (std::size_t c = 0; c < k; ++c) {
                if (!feasible[c]) continue;
                acc += mean_of(port[a][c]).h;
                ++cnt;
            }
            const double v = cnt ? acc / static_cast<double>(cnt) : 0.0;
            if (v > best) {
                best = v;
                port_winner = a;
            }
        }
    }

    for (std::size_t c = 0; c < k; ++c) {
        auto& row = table.clusters[c];
        if (!feasible[c]) continue;
        std::size_t seg_winner = 0;
        if (n_arch > 1) {
            double best = -1.0;
            for (std::size_t a = 0; a < n_arch; ++a) {
                const double v = mean_of(seg[a][c]).h;
                if (v > best) {
                    best = v;
                    seg_winner = a;
                }
            }
        }
        row.segment_arch = seg_winner;
        row.portfolio_arch = port_winner;
        row.segment_folds = seg[seg_winner][c];
        row.portfolio_folds = port[port_winner][c];
        row.segment_mean = mean_of(row.segment_folds);
        row.portfolio_mean = mean_of(row.portfolio_folds);

        std::vector<double> ha, hb;
        for (const auto& r : row.segment_folds) ha.push_back(r.h);
        for (const auto& r : row.portfolio_folds) hb.push_back(r.h);
        row.p_value_h = unpaired_ttest(ha, hb);
    }
    return table;
}

} // namespace latentseg
