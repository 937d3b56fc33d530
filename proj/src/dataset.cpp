#include "latentseg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "latentseg/rng.hpp"

namespace latentseg {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// E[sigmoid(a + s * Z)] with Z ~ N(0,1), trapezoid over [-8, 8].
double mean_sigmoid(double a, double s) {
    if (s == 0.0) return sigmoid(a);
    constexpr int n = 800;
    constexpr double lo = -8.0, hi = 8.0;
    const double h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double z = lo + h * i;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
        acc += w * phi * sigmoid(a + s * z);
    }
    return acc * h;
}

// Intercept a so the segment's expected default probability equals target.
double calibrate_intercept(double target, double coeff_norm) {
    if (coeff_norm == 0.0) return std::log(target / (1.0 - target));
    double lo = -60.0, hi = 60.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mean_sigmoid(mid, coeff_norm) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    for (auto& f : out) f = trim(f);
    return out;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "NaN" || s == "nan"; }

} // namespace

void Dataset::validate() const {
    if (rows.rows != y.size()) throw ValidationError("dataset: row count differs from label count");
    if (feature_meta.size() != rows.cols)
        throw ValidationError("dataset: feature_meta size differs from column count");
    if (!id.empty() && id.size() != rows.rows)
        throw ValidationError("dataset: id size differs from row count");
    if (!segment.empty() && segment.size() != rows.rows)
        throw ValidationError("dataset: segment size differs from row count");
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] != 0 && y[i] != 1) throw ValidationError("dataset: label outside {0,1}");
    for (std::size_t j = 0; j < feature_meta.size(); ++j) {
        if (feature_meta[j].kind != FeatureKind::categorical) continue;
        const double k = static_cast<double>(feature_meta[j].categories.size());
        for (std::size_t i = 0; i < rows.rows; ++i) {
            const double v = rows(i, j);
            if (v < 0.0 || v >= k || v != std::floor(v))
                throw ValidationError("dataset: categorical value outside declared set in column " +
                                      feature_meta[j].name);
        }
    }
}

Dataset Dataset::take(std::span<const std::size_t> idx) const {
    Dataset out;
    out.rows = rows.take(idx);
    out.feature_meta = feature_meta;
    out.y.reserve(idx.size());
    for (auto i : idx) out.y.push_back(y[i]);
    if (!id.empty()) {
        out.id.reserve(idx.size());
        for (auto i : idx) out.id.push_back(id[i]);
    }
    if (!segment.empty()) {
        out.segment.reserve(idx.size());
        for (auto i : idx) out.segment.push_back(segment[i]);
    }
    return out;
}

std::string CsvSchema::label_column() const {
    for (const auto& c : columns)
        if (c.role == SchemaColumn::Role::label) return c.name;
    return "";
}

Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw ValidationError("load_csv: cannot open " + path);
    if (schema.label_column().empty() && true) {
        // label column must be declared even for files without one
        bool has_label = false;
        for (const auto& c : schema.columns) has_label |= c.role == SchemaColumn::Role::label;
        if (!has_label) throw ValidationError("load_csv: schema declares no label column");
    }

    std::string header_line;
    if (!std::getline(in, header_line)) throw ValidationError("load_csv: empty file " + path);
    const auto header = split_line(header_line);
    if (header.size() != schema.columns.size())
        throw ValidationError("load_csv: header has " + std::to_string(header.size()) +
                              " columns, schema declares " + std::to_string(schema.columns.size()));

    // Column positions by name; header order may differ from schema order.
    std::vector<std::size_t> pos(schema.columns.size());
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        auto it = std::find(header.begin(), header.end(), schema.columns[c].name);
        if (it == header.end())
            throw ValidationError("load_csv: column '" + schema.columns[c].name +
                                  "' missing from header");
        pos[c] = static_cast<std::size_t>(it - header.begin());
    }

    Dataset ds;
    std::vector<std::size_t> feat_cols;
    bool has_id = false;
    std::size_t id_col = 0, label_col = 0;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        switch (schema.columns[c].role) {
        case SchemaColumn::Role::feature:
            ds.feature_meta.push_back(schema.columns[c].meta);
            if (ds.feature_meta.back().name.empty()) ds.feature_meta.back().name = schema.columns[c].name;
            feat_cols.push_back(c);
            break;
        case SchemaColumn::Role::label: label_col = c; break;
        case SchemaColumn::Role::id:
            has_id = true;
            id_col = c;
            break;
        }
    }

    std::vector<std::vector<double>> values;
    std::vector<std::vector<std::size_t>> missing_at(feat_cols.size());
    std::string line;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row_no;
        const auto fields = split_line(line);
        if (fields.size() != header.size())
            throw ValidationError("load_csv: row " + std::to_string(row_no) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));

        const std::string& lab = fields[pos[label_col]];
        if (lab == "0")
            ds.y.push_back(0);
        else if (lab == "1")
            ds.y.push_back(1);
        else
            throw ValidationError("load_csv: row " + std::to_string(row_no) + ": label '" + lab +
                                  "' not in {0,1}");
        if (has_id) ds.id.push_back(fields[pos[id_col]]);

        std::vector<double> row(feat_cols.size(), 0.0);
        for (std::size_t f = 0; f < feat_cols.size(); ++f) {
            const auto& meta = ds.feature_meta[f];
            const std::string& cell = fields[pos[feat_cols[f]]];
            if (meta.kind == FeatureKind::categorical) {
                auto it = std::find(meta.categories.begin(), meta.categories.end(), cell);
                if (it == meta.categories.end())
                    throw ValidationError("load_csv: row " + std::to_string(row_no) +
                                          ": unknown category '" + cell + "' in column " + meta.name);
                row[f] = static_cast<double>(it - meta.categories.begin());
            } else {
                if (is_missing(cell)) {
                    if (!schema.impute_missing)
                        throw ValidationError("load_csv: row " + std::to_string(row_no) +
                                              ": missing value in column " + meta.name);
                    missing_at[f].push_back(values.size());
                    row[f] = std::numeric_limits<double>::quiet_NaN();
                } else {
                    char* end = nullptr;
                    const double v = std::strtod(cell.c_str(), &end);
                    if (end == cell.c_str() || *end != '\0')
                        throw ValidationError("load_csv: row " + std::to_string(row_no) +
                                              ": cannot parse '" + cell + "' in column " + meta.name);
                    row[f] = v;
                }
            }
        }
        values.push_back(std::move(row));
    }

    // Mean-impute the gaps recorded above.
    for (std::size_t f = 0; f < feat_cols.size(); ++f) {
        if (missing_at[f].empty()) continue;
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isnan(values[i][f])) {
                sum += values[i][f];
                ++cnt;
            }
        }
        const double mean = cnt > 0 ? sum / static_cast<double>(cnt) : 0.0;
        for (auto i : missing_at[f]) values[i][f] = mean;
        if (warnings)
            warnings->push_back("column " + ds.feature_meta[f].name + ": imputed " +
                                std::to_string(missing_at[f].size()) + " missing values with mean");
    }

    ds.rows = Matrix::from_rows(values);
    if (values.empty()) ds.rows.cols = feat_cols.size();
    ds.validate();
    return ds;
}

void SyntheticSpec::validate() const {
    if (n_rows < 1) throw ValidationError("synthetic spec: n_rows must be >= 1");
    if (d_x < 1) throw ValidationError("synthetic spec: d_x must be >= 1");
    if (segments.empty()) throw ValidationError("synthetic spec: no segments");
    double wsum = 0.0;
    for (const auto& s : segments) {
        wsum += s.weight;
        if (s.base_pd < 0.0 || s.base_pd > 1.0)
            throw ValidationError("synthetic spec: base_pd outside [0,1]");
        if (s.mean.size() != d_x || s.dispersion.size() != d_x)
            throw ValidationError("synthetic spec: per-feature vectors must have length d_x");
        if (!s.risk_coeff.empty() && s.risk_coeff.size() != d_x)
            throw ValidationError("synthetic spec: risk_coeff must be empty or length d_x");
        for (double dd : s.dispersion)
            if (dd <= 0.0) throw ValidationError("synthetic spec: dispersion must be positive");
    }
    if (std::fabs(wsum - 1.0) > 1e-12)
        throw ValidationError("synthetic spec: mixing weights must sum to 1");
    if (!warp.empty() && warp.size() != d_x)
        throw ValidationError("synthetic spec: warp must be empty or length d_x");
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    std::vector<double> cumw;
    double acc = 0.0;
    for (const auto& s : spec.segments) {
        acc += s.weight;
        cumw.push_back(acc);
    }
    cumw.back() = 1.0;

    std::vector<double> intercept(spec.segments.size());
    std::vector<double> coeff_norm(spec.segments.size(), 0.0);
    for (std::size_t s = 0; s < spec.segments.size(); ++s) {
        const auto& seg = spec.segments[s];
        double n2 = 0.0;
        for (double c : seg.risk_coeff) n2 += c * c;
        coeff_norm[s] = std::sqrt(n2);
        if (seg.base_pd > 0.0 && seg.base_pd < 1.0)
            intercept[s] = calibrate_intercept(seg.base_pd, coeff_norm[s]);
    }

    Dataset ds;
    ds.rows = Matrix(spec.n_rows, spec.d_x);
    ds.y.resize(spec.n_rows);
    ds.segment.resize(spec.n_rows);
    for (std::size_t j = 0; j < spec.d_x; ++j) {
        FeatureMeta m;
        m.name = j < spec.feature_names.size() ? spec.feature_names[j]
                                               : "f" + std::to_string(j);
        m.kind = FeatureKind::continuous;
        ds.feature_meta.push_back(m);
    }

    for (std::size_t i = 0; i < spec.n_rows; ++i) {
        const double u = rng.uniform();
        std::size_t s = 0;
        while (s + 1 < cumw.size() && u >= cumw[s]) ++s;
        const auto& seg = spec.segments[s];
        ds.segment[i] = static_cast<int>(s);

        double eta = intercept[s];
        for (std::size_t j = 0; j < spec.d_x; ++j) {
            const double z = rng.normal();
            const double raw = seg.mean[j] + seg.dispersion[j] * z;
            const bool exp_warp = !spec.warp.empty() && spec.warp[j] == FeatureWarp::exp;
            ds.rows(i, j) = exp_warp ? std::exp(raw) : raw;
            if (!seg.risk_coeff.empty()) eta += seg.risk_coeff[j] * z;
        }

        double p;
        if (seg.base_pd <= 0.0)
            p = 0.0;
        else if (seg.base_pd >= 1.0)
            p = 1.0;
        else
            p = sigmoid(eta);
        ds.y[i] = rng.uniform() < p ? 1 : 0;
    }
    return ds;
}

double default_rate(const Dataset& ds) {
    if (ds.n() == 0) throw NumericError("default_rate: undefined for an empty dataset");
    std::size_t events = 0;
    for (int v : ds.y) events += static_cast<std::size_t>(v);
    return static_cast<double>(events) / static_cast<double>(ds.n());
}

Fig2Split split_fig2(const Dataset& ds, const PartitionPlan& plan,
                     std::vector<std::string>* warnings) {
    if (plan.vae_majority_frac <= 0.0 || plan.vae_majority_frac >= 1.0)
        throw ValidationError("split_fig2: vae_majority_frac must be in (0,1)");
    std::vector<std::size_t> maj, min;
    for (std::size_t i = 0; i < ds.n(); ++i) (ds.y[i] == 0 ? maj : min).push_back(i);
    if (min.empty() && warnings) warnings->push_back("split_fig2: minority class absent");

    Rng rng(plan.seed);
    rng.shuffle(maj);
    const std::size_t k =
        static_cast<std::size_t>(std::llround(plan.vae_majority_frac * static_cast<double>(maj.size())));
    std::vector<std::size_t> vae_idx(maj.begin(), maj.begin() + k);
    std::vector<std::size_t> dev_idx(maj.begin() + k, maj.end());
    dev_idx.insert(dev_idx.end(), min.begin(), min.end());
    std::sort(vae_idx.begin(), vae_idx.end());
    std::sort(dev_idx.begin(), dev_idx.end());

    Fig2Split out;
    out.vae_train = ds.take(vae_idx);
    out.development = ds.take(dev_idx);
    return out;
}

SplitIndices split_train_test_indices(const Dataset& dev, double frac,
                                      const std::vector<int>* cluster_labels,
                                      std::uint64_t seed) {
    if (frac <= 0.0 || frac >= 1.0) throw ValidationError("split_train_test: frac must be in (0,1)");
    if (cluster_labels && cluster_labels->size() != dev.n())
        throw ValidationError("split_train_test: cluster labels length differs from dataset size");

    // Cells keyed by (cluster, class); one pseudo-cluster when unstratified.
    std::map<std::pair<int, int>, std::vector<std::size_t>> cells;
    std::map<int, std::size_t> cluster_sizes;
    for (std::size_t i = 0; i < dev.n(); ++i) {
        const int cl = cluster_labels ? (*cluster_labels)[i] : 0;
        cells[{cl, dev.y[i]}].push_back(i);
        cluster_sizes[cl] += 1;
    }
    if (cluster_labels) {
        for (const auto& [cl, sz] : cluster_sizes)
            if (sz < 2)
                throw ValidationError("split_train_test: cluster " + std::to_string(cl) +
                                      " has fewer than 2 rows");
    }

    SplitIndices out;
    const double test_frac = 1.0 - frac;
    for (int cls = 0; cls <= 1; ++cls) {
        // Per-class target, apportioned to clusters by largest remainder so the
        // global class ratio is preserved and each cluster contributes its share.
        std::vector<std::pair<int, std::vector<std::size_t>*>> cls_cells;
        std::size_t n_c = 0;
        for (auto& [key, idx] : cells) {
            if (key.second != cls) continue;
            cls_cells.emplace_back(key.first, &idx);
            n_c += idx.size();
        }
        if (n_c == 0) continue;
        const std::size_t target = static_cast<std::size_t>(test_frac * static_cast<double>(n_c));

        std::vector<std::size_t> base(cls_cells.size());
        std::vector<double> rem(cls_cells.size());
        std::size_t base_sum = 0;
        for (std::size_t c = 0; c < cls_cells.size(); ++c) {
            const double q = test_frac * static_cast<double>(cls_cells[c].second->size());
            base[c] = static_cast<std::size_t>(q);
            rem[c] = q - static_cast<double>(base[c]);
            base_sum += base[c];
        }
        std::vector<std::size_t> order(cls_cells.size());
        for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (rem[a] != rem[b]) return rem[a] > rem[b];
            return cls_cells[a].first < cls_cells[b].first;
        });
        for (std::size_t r = 0; base_sum + r < target && r < order.size(); ++r) base[order[r]] += 1;

        for (std::size_t c = 0; c < cls_cells.size(); ++c) {
            auto idx = *cls_cells[c].second;
            Rng rng(Rng::derive(seed, (static_cast<std::uint64_t>(cls_cells[c].first) << 1) |
                                          static_cast<std::uint64_t>(cls)));
            rng.shuffle(idx);
            for (std::size_t i = 0; i < idx.size(); ++i)
                (i < base[c] ? out.test : out.train).push_back(idx[i]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& dev, double frac,
                                             const std::vector<int>* cluster_labels,
                                             std::uint64_t seed) {
    const auto idx = split_train_test_indices(dev, frac, cluster_labels, seed);
    return {dev.take(idx.train), dev.take(idx.test)};
}

namespace {

SegmentSpec make_segment(double weight, double pd, std::size_t d) {
    SegmentSpec s;
    s.weight = weight;
    s.base_pd = pd;
    s.mean.assign(d, 0.0);
    s.dispersion.assign(d, 1.0);
    s.risk_coeff.assign(d, 0.0);
    return s;
}

} // namespace

SyntheticSpec planted_heterogeneous_spec(std::size_t n_rows, std::uint64_t seed) {
    constexpr std::size_t d = 20;
    SyntheticSpec spec;
    spec.n_rows = n_rows;
    spec.d_x = d;
    spec.seed = seed;
    spec.feature_names = {"down_payment_share", "delinquency_score", "income",
                          "utilization",        "num_applications",  "tenure_months",
                          "car_age",            "debt_ratio",        "bureau_score",
                          "payment_remarks",    "n0", "n1", "n2", "n3", "n4",
                          "n5",                 "n6", "n7", "n8", "n9"};
    spec.warp.assign(d, FeatureWarp::identity);
    for (std::size_t j : {2u, 4u, 5u, 7u, 9u, 10u, 11u, 12u, 13u, 14u, 15u})
        spec.warp[j] = FeatureWarp::exp;

    auto s0 = make_segment(0.55, 0.010, d); // prime
    auto s1 = make_segment(0.25, 0.045, d); // standard
    auto s2 = make_segment(0.15, 0.110, d); // elevated
    auto s3 = make_segment(0.05, 0.300, d); // distressed

    auto set = [](SegmentSpec& s, std::size_t j, double mean, double disp, double coeff) {
        s.mean[j] = mean;
        s.dispersion[j] = disp;
        s.risk_coeff[j] = coeff;
    };

    // Per-feature separations stay well inside the within-segment spread and
    // point in different directions across segments, so no unsupervised scaling
    // exposes the mixture; only the risk-aligned recode lines the segments up.
    // down_payment_share: salient-high driver of the prime segment
    set(s0, 0, 0.18, 0.12, -0.30);
    set(s1, 0, 0.07, 0.12, -0.30);
    set(s2, 0, 0.06, 0.12, -0.20);
    set(s3, 0, 0.05, 0.12, -0.20);
    // delinquency_score: salient-high driver of the distressed segment
    set(s0, 1, 0.67, 1.1, 0.50);
    set(s1, 1, 0.94, 1.1, 0.50);
    set(s2, 1, 1.30, 1.1, 0.90);
    set(s3, 1, 1.84, 1.1, 0.90);
    // income (log scale pre-warp)
    set(s0, 2, 0.51, 0.8, -0.60);
    set(s1, 2, 0.33, 0.8, -0.60);
    set(s2, 2, 0.15, 0.8, -0.20);
    set(s3, 2, -0.09, 0.8, -0.20);
    // utilization
    set(s0, 3, 0.33, 0.22, 0.30);
    set(s1, 3, 0.42, 0.22, 0.80);
    set(s2, 3, 0.49, 0.22, 0.80);
    set(s3, 3, 0.57, 0.22, 0.30);
    // num_applications: separates the two middle segments from the edges
    set(s0, 4, 0.0, 0.7, 0.0);
    set(s1, 4, 0.45, 0.7, 0.0);
    set(s2, 4, 0.45, 0.7, 0.70);
    set(s3, 4, 0.0, 0.7, 0.0);
    // tenure_months: high for prime and elevated, low otherwise
    set(s0, 5, 0.45, 0.8, 0.0);
    set(s1, 5, -0.15, 0.8, 0.0);
    set(s2, 5, 0.45, 0.8, 0.0);
    set(s3, 5, -0.15, 0.8, -0.50);
    // car_age: newer cars at the portfolio edges
    set(s0, 6, 3.2, 1.5, 0.40);
    set(s1, 6, 4.4, 1.5, 0.40);
    set(s2, 6, 4.4, 1.5, 0.0);
    set(s3, 6, 3.2, 1.5, 0.0);
    // debt_ratio: elevated only for the standard segment
    set(s0, 7, -0.2, 0.9, 0.0);
    set(s1, 7, 0.5, 0.9, 0.60);
    set(s2, 7, -0.2, 0.9, 0.0);
    set(s3, 7, -0.2, 0.9, 0.20);
    // bureau_score: global risk driver, high is good
    set(s0, 8, 6.98, 1.4, -0.80);
    set(s1, 8, 6.50, 1.4, -0.80);
    set(s2, 8, 6.02, 1.4, -0.80);
    set(s3, 8, 5.54, 1.4, -0.80);
    // payment_remarks
    set(s0, 9, -0.47, 1.0, 0.50);
    set(s1, 9, -0.23, 1.0, 0.50);
    set(s2, 9, 0.07, 1.0, 0.50);
    set(s3, 9, 0.49, 1.0, 0.50);
    // Heavy-tailed noise block: the dominant raw-scale variation carries no
    // risk signal, the way extreme monetary fields dwarf ratio features.
    for (auto* s : {&s0, &s1, &s2, &s3}) {
        for (std::size_t j = 10; j < 16; ++j) {
            s->mean[j] = 0.8;
            s->dispersion[j] = 1.3;
        }
        // identity-coded noise sits away from zero so difference factors behave
        for (std::size_t j = 16; j < d; ++j) s->mean[j] = 2.0;
    }

    spec.segments = {s0, s1, s2, s3};
    return spec;
}

SyntheticSpec homogeneous_control_spec(std::size_t n_rows, std::uint64_t seed) {
    constexpr std::size_t d = 20;
    SyntheticSpec spec;
    spec.n_rows = n_rows;
    spec.d_x = d;
    spec.seed = seed;
    spec.warp.assign(d, FeatureWarp::identity);
    for (std::size_t j : {2u, 4u, 5u, 7u, 9u, 10u, 11u, 12u, 13u, 14u, 15u})
        spec.warp[j] = FeatureWarp::exp;

    // One archetype with the standard segment's feature scales.
    auto s = make_segment(1.0, 0.05, d);
    s.mean[0] = 0.07;
    s.dispersion[0] = 0.05;
    s.mean[1] = 1.0;
    s.dispersion[1] = 0.8;
    s.mean[3] = 0.45;
    s.dispersion[3] = 0.15;
    s.mean[6] = 3.8;
    s.dispersion[6] = 1.5;
    s.mean[8] = 6.4;
    for (std::size_t j = 10; j < 16; ++j) {
        s.mean[j] = 0.8;
        s.dispersion[j] = 1.3;
    }
    for (std::size_t j = 16; j < d; ++j) s.mean[j] = 2.0;
    s.risk_coeff[1] = 0.6;
    s.risk_coeff[2] = -0.4;
    s.risk_coeff[3] = 0.5;
    s.risk_coeff[8] = -0.8;
    s.risk_coeff[9] = 0.4;
    spec.segments = {s};
    return spec;
}

} // namespace latentseg
