#include "latentseg/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace latentseg {

namespace {

std::string act_name(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh_act: return "tanh";
    case Activation::sigmoid_act: return "sigmoid";
    }
    return "identity";
}

Activation act_from(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "tanh") return Activation::tanh_act;
    if (s == "sigmoid") return Activation::sigmoid_act;
    throw ValidationError("unknown activation: " + s);
}

} // namespace

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Json to_json(const Matrix& m) {
    return Json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const Json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) throw ValidationError("matrix json: size mismatch");
    return m;
}

Json to_json(const MlpParams& p) {
    Json layers = Json::array();
    for (const auto& l : p.layers) {
        layers.push_back(Json{{"activation", act_name(l.act)},
                              {"w", to_json(l.w)},
                              {"b", l.b}});
    }
    return Json{{"layers", layers}};
}

MlpParams mlp_from_json(const Json& j) {
    MlpParams p;
    for (const auto& lj : j.at("layers")) {
        Layer l;
        l.act = act_from(lj.at("activation").get<std::string>());
        l.w = matrix_from_json(lj.at("w"));
        l.b = lj.at("b").get<std::vector<double>>();
        p.layers.push_back(std::move(l));
    }
    return p;
}

Json to_json(const VaeModel& m) {
    return Json{{"d_x", m.d_x},
                {"d_z", m.d_z},
                {"logvar_clamp", m.logvar_clamp},
                {"enc_trunk", to_json(m.enc_trunk)},
                {"enc_mu", to_json(m.enc_mu)},
                {"enc_logvar", to_json(m.enc_logvar)},
                {"dec_trunk", to_json(m.dec_trunk)},
                {"dec_mu", to_json(m.dec_mu)},
                {"dec_logvar", to_json(m.dec_logvar)}};
}

VaeModel vae_from_json(const Json& j) {
    VaeModel m;
    m.d_x = j.at("d_x").get<std::size_t>();
    m.d_z = j.at("d_z").get<std::size_t>();
    m.logvar_clamp = j.at("logvar_clamp").get<double>();
    m.enc_trunk = mlp_from_json(j.at("enc_trunk"));
    m.enc_mu = mlp_from_json(j.at("enc_mu"));
    m.enc_logvar = mlp_from_json(j.at("enc_logvar"));
    m.dec_trunk = mlp_from_json(j.at("dec_trunk"));
    m.dec_mu = mlp_from_json(j.at("dec_mu"));
    m.dec_logvar = mlp_from_json(j.at("dec_logvar"));
    return m;
}

namespace {

Json stage_to_json(const Binning& b, const WoeTable& wt, const std::vector<FeatureMeta>& meta) {
    Json features = Json::array();
    for (std::size_t f = 0; f < b.features.size(); ++f) {
        Json fj;
        fj["name"] = f < meta.size() ? meta[f].name : "f" + std::to_string(f);
        fj["kind"] = b.features[f].kind == FeatureKind::continuous ? "continuous" : "categorical";
        fj["flagged"] = static_cast<bool>(b.features[f].flagged);
        if (b.features[f].kind == FeatureKind::continuous)
            fj["cuts"] = b.features[f].cuts;
        else
            fj["groups"] = b.features[f].group_of_category;
        std::vector<std::size_t> ev, ne;
        std::vector<double> woe;
        for (const auto& bin : wt.features[f]) {
            ev.push_back(bin.events);
            ne.push_back(bin.nonevents);
            woe.push_back(bin.woe);
        }
        fj["events"] = ev;
        fj["nonevents"] = ne;
        fj["woe"] = woe;
        features.push_back(std::move(fj));
    }
    return features;
}

void stage_from_json(const Json& features, BinningStage stage, Binning& b, WoeTable& wt,
                     std::vector<std::string>* names) {
    b.stage = stage;
    for (const auto& fj : features) {
        FeatureBinning fb;
        fb.kind = fj.at("kind").get<std::string>() == "continuous" ? FeatureKind::continuous
                                                                   : FeatureKind::categorical;
        fb.flagged = fj.at("flagged").get<bool>();
        if (fb.kind == FeatureKind::continuous)
            fb.cuts = fj.at("cuts").get<std::vector<double>>();
        else
            fb.group_of_category = fj.at("groups").get<std::vector<int>>();
        b.features.push_back(fb);

        const auto ev = fj.at("events").get<std::vector<std::size_t>>();
        const auto ne = fj.at("nonevents").get<std::vector<std::size_t>>();
        const auto woe = fj.at("woe").get<std::vector<double>>();
        std::vector<BinStats> bins(ev.size());
        for (std::size_t i = 0; i < ev.size(); ++i) bins[i] = {ev[i], ne[i], woe[i]};
        wt.features.push_back(std::move(bins));
        if (names) names->push_back(fj.at("name").get<std::string>());
    }
}

} // namespace

Json woe_to_json(const Binning& fine, const WoeTable& fine_wt, const Binning& coarse,
                 const WoeTable& coarse_wt, const std::vector<FeatureMeta>& meta) {
    return Json{{"smoothing", fine_wt.smoothing},
                {"prior_log_odds", fine_wt.prior_log_odds},
                {"total_events", fine_wt.total_events},
                {"total_nonevents", fine_wt.total_nonevents},
                {"fine", stage_to_json(fine, fine_wt, meta)},
                {"coarse", stage_to_json(coarse, coarse_wt, meta)}};
}

WoeArtifact woe_from_json(const Json& j) {
    WoeArtifact a;
    const double smoothing = j.at("smoothing").get<double>();
    for (WoeTable* wt : {&a.fine_wt, &a.coarse_wt}) {
        wt->smoothing = smoothing;
        wt->prior_log_odds = j.at("prior_log_odds").get<double>();
        wt->total_events = j.at("total_events").get<std::size_t>();
        wt->total_nonevents = j.at("total_nonevents").get<std::size_t>();
    }
    stage_from_json(j.at("fine"), BinningStage::fine, a.fine, a.fine_wt, &a.feature_names);
    stage_from_json(j.at("coarse"), BinningStage::coarse, a.coarse, a.coarse_wt, nullptr);
    return a;
}

Json to_json(const ClusterModel& m) {
    Json splits = Json::array();
    for (const auto& s : m.accepted_splits) {
        splits.push_back(Json{{"c1", s.c1},
                              {"c2", s.c2},
                              {"n1", s.n1},
                              {"n2", s.n2},
                              {"centroid_distance", s.centroid_distance}});
    }
    return Json{{"k", m.k},
                {"centroids", to_json(m.centroids)},
                {"labels", m.labels},
                {"sizes", m.sizes},
                {"default_rate", m.cluster_default_rate},
                {"ch", m.ch},
                {"bcdr", m.bcdr_score},
                {"n_min", m.params.n_min},
                {"rho", m.params.rho},
                {"subsample_cap", m.params.subsample_cap},
                {"linkage", m.params.linkage == Linkage::ward ? "ward" : "complete"},
                {"accepted_splits", splits}};
}

ClusterModel cluster_from_json(const Json& j) {
    ClusterModel m;
    m.k = j.at("k").get<std::size_t>();
    m.centroids = matrix_from_json(j.at("centroids"));
    m.labels = j.at("labels").get<std::vector<int>>();
    m.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    m.cluster_default_rate = j.at("default_rate").get<std::vector<double>>();
    m.ch = j.at("ch").get<double>();
    m.bcdr_score = j.at("bcdr").get<double>();
    m.params.n_min = j.at("n_min").get<std::size_t>();
    m.params.rho = j.at("rho").get<double>();
    m.params.subsample_cap = j.at("subsample_cap").get<std::size_t>();
    m.params.linkage =
        j.at("linkage").get<std::string>() == "ward" ? Linkage::ward : Linkage::complete;
    for (const auto& sj : j.at("accepted_splits")) {
        AcceptedSplit s;
        s.c1 = sj.at("c1").get<std::vector<double>>();
        s.c2 = sj.at("c2").get<std::vector<double>>();
        s.n1 = sj.at("n1").get<std::size_t>();
        s.n2 = sj.at("n2").get<std::size_t>();
        s.centroid_distance = sj.at("centroid_distance").get<double>();
        m.accepted_splits.push_back(std::move(s));
    }
    return m;
}

Json salient_to_json(const SalientReport& r, const std::vector<std::string>& feature_names,
                     const std::string& space) {
    Json clusters = Json::array();
    for (std::size_t c = 0; c < r.clusters.size(); ++c) {
        const auto& cs = r.clusters[c];
        Json sal = Json::array();
        for (const auto& s : cs.salient) {
            sal.push_back(Json{{"feature", s.feature},
                               {"name", s.feature < feature_names.size()
                                            ? feature_names[s.feature]
                                            : "f" + std::to_string(s.feature)},
                               {"direction", s.direction > 0 ? "high" : "low"},
                               {"guarded", static_cast<bool>(cs.guarded[s.feature])}});
        }
        clusters.push_back(Json{{"cluster", c},
                                {"df", cs.df},
                                {"mu_df", cs.mu_df},
                                {"sigma_df", cs.sigma_df},
                                {"salient", sal}});
    }
    return Json{{"sd", r.sd}, {"space", space}, {"clusters", clusters}};
}

std::string salient_to_text(const SalientReport& r, const std::vector<std::string>& feature_names) {
    std::ostringstream out;
    out << "cluster\tsalient dimension\tdirection\n";
    for (std::size_t c = 0; c < r.clusters.size(); ++c) {
        for (const auto& s : r.clusters[c].salient) {
            const std::string name = s.feature < feature_names.size()
                                         ? feature_names[s.feature]
                                         : "f" + std::to_string(s.feature);
            out << (c + 1) << '\t' << name << '\t' << (s.direction > 0 ? "high" : "low") << '\n';
        }
    }
    return out.str();
}

Json to_json(const PerformanceTable& t) {
    Json clusters = Json::array();
    auto row_json = [](const MetricRow& r) {
        return Json{{"h", r.h}, {"auc", r.auc}, {"gini", r.gini}, {"ks", r.ks}};
    };
    for (const auto& c : t.clusters) {
        Json folds_seg = Json::array(), folds_port = Json::array();
        for (const auto& r : c.segment_folds) folds_seg.push_back(row_json(r));
        for (const auto& r : c.portfolio_folds) folds_port.push_back(row_json(r));
        clusters.push_back(Json{{"cluster", c.cluster},
                                {"feasible", c.feasible},
                                {"note", c.note},
                                {"segment_mean", row_json(c.segment_mean)},
                                {"portfolio_mean", row_json(c.portfolio_mean)},
                                {"p_value_h", c.p_value_h},
                                {"segment_arch", c.segment_arch},
                                {"portfolio_arch", c.portfolio_arch},
                                {"segment_folds", folds_seg},
                                {"portfolio_folds", folds_port}});
    }
    return Json{{"folds", t.folds}, {"grid_size", t.grid_size}, {"clusters", clusters}};
}

std::string performance_to_tsv(const PerformanceTable& t) {
    std::ostringstream out;
    out << "metric\tcluster\tsegment\tportfolio\tp_value\tnote\n";
    const char* names[4] = {"H-measure", "AUC", "Gini", "KS"};
    for (int metric = 0; metric < 4; ++metric) {
        for (const auto& c : t.clusters) {
            out << names[metric] << '\t' << (c.cluster + 1) << '\t';
            if (!c.feasible) {
                out << "\t\t\t" << c.note << '\n';
                continue;
            }
            auto pick = [&](const MetricRow& r) {
                switch (metric) {
                case 0: return r.h;
                case 1: return r.auc;
                case 2: return r.gini;
                default: return r.ks;
                }
            };
            out << format_g17(pick(c.segment_mean)) << '\t' << format_g17(pick(c.portfolio_mean))
                << '\t';
            if (metric == 0) out << format_g17(c.p_value_h);
            out << '\t' << c.note << '\n';
        }
    }
    return out.str();
}

CsvSchema schema_from_json(const Json& j) {
    CsvSchema s;
    s.impute_missing = j.value("impute_missing", false);
    if (!j.contains("columns") || !j.at("columns").is_array() || j.at("columns").empty())
        throw ValidationError("schema: 'columns' array required");
    bool has_label = false;
    for (const auto& cj : j.at("columns")) {
        SchemaColumn c;
        if (!cj.contains("name")) throw ValidationError("schema: column without a name");
        c.name = cj.at("name").get<std::string>();
        const std::string role = cj.value("role", "feature");
        if (role == "feature") {
            c.role = SchemaColumn::Role::feature;
            c.meta.name = c.name;
            const std::string kind = cj.value("kind", "continuous");
            if (kind == "categorical") {
                c.meta.kind = FeatureKind::categorical;
                c.meta.categories = cj.at("categories").get<std::vector<std::string>>();
                if (c.meta.categories.empty())
                    throw ValidationError("schema: categorical column " + c.name +
                                          " declares no categories");
            } else if (kind == "continuous") {
                c.meta.kind = FeatureKind::continuous;
            } else {
                throw ValidationError("schema: unknown kind '" + kind + "'");
            }
        } else if (role == "label") {
            c.role = SchemaColumn::Role::label;
            has_label = true;
        } else if (role == "id") {
            c.role = SchemaColumn::Role::id;
        } else {
            throw ValidationError("schema: unknown role '" + role + "'");
        }
        s.columns.push_back(std::move(c));
    }
    if (!has_label) throw ValidationError("schema: no label column declared");
    return s;
}

SyntheticSpec synthetic_from_json(const Json& j) {
    SyntheticSpec spec;
    spec.n_rows = j.at("n_rows").get<std::size_t>();
    spec.d_x = j.at("d_x").get<std::size_t>();
    spec.seed = j.value("seed", 0ULL);
    if (j.contains("feature_names"))
        spec.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (j.contains("warp")) {
        for (const auto& w : j.at("warp"))
            spec.warp.push_back(w.get<std::string>() == "exp" ? FeatureWarp::exp
                                                              : FeatureWarp::identity);
    }
    for (const auto& sj : j.at("segments")) {
        SegmentSpec s;
        s.weight = sj.at("weight").get<double>();
        s.base_pd = sj.at("base_pd").get<double>();
        s.mean = sj.at("mean").get<std::vector<double>>();
        s.dispersion = sj.at("dispersion").get<std::vector<double>>();
        if (sj.contains("risk_coeff")) s.risk_coeff = sj.at("risk_coeff").get<std::vector<double>>();
        spec.segments.push_back(std::move(s));
    }
    spec.validate();
    return spec;
}

Json to_json(const SyntheticSpec& spec) {
    Json segments = Json::array();
    for (const auto& s : spec.segments) {
        segments.push_back(Json{{"weight", s.weight},
                                {"base_pd", s.base_pd},
                                {"mean", s.mean},
                                {"dispersion", s.dispersion},
                                {"risk_coeff", s.risk_coeff}});
    }
    Json warp = Json::array();
    for (const auto& w : spec.warp) warp.push_back(w == FeatureWarp::exp ? "exp" : "identity");
    return Json{{"n_rows", spec.n_rows}, {"d_x", spec.d_x},           {"seed", spec.seed},
                {"segments", segments},  {"feature_names", spec.feature_names},
                {"warp", warp}};
}

VaeArch vae_arch_from_json(const Json& j) {
    VaeArch a;
    a.id = j.value("id", std::string("custom"));
    a.d_z = j.value("d_z", 2ULL);
    if (j.contains("hidden")) a.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    a.lr = j.value("lr", 0.01);
    a.epochs = j.value("epochs", 50ULL);
    a.batch = j.value("batch", 128ULL);
    a.optimizer = j.value("optimizer", std::string("sgd")) == "adam" ? OptMethod::adam
                                                                     : OptMethod::sgd;
    return a;
}

Json to_json(const VaeArch& a) {
    return Json{{"id", a.id},
                {"d_z", a.d_z},
                {"hidden", a.hidden},
                {"lr", a.lr},
                {"epochs", a.epochs},
                {"batch", a.batch},
                {"optimizer", a.optimizer == OptMethod::adam ? "adam" : "sgd"}};
}

std::string trace_to_tsv(const TrainTrace& t) {
    std::ostringstream out;
    out << "epoch\tneg_elbo\tch\tbcdr\n";
    for (std::size_t e = 0; e < t.epochs(); ++e) {
        out << e << '\t' << format_g17(t.neg_elbo[e]) << '\t' << format_g17(t.ch[e]) << '\t'
            << format_g17(t.bcdr[e]) << '\n';
    }
    return out.str();
}

std::string scatter_to_tsv(const Matrix& latent, const std::vector<int>& labels,
                           const std::vector<int>& y) {
    std::ostringstream out;
    out << "z1\tz2\tcluster\ty\n";
    for (std::size_t i = 0; i < latent.rows; ++i) {
        out << format_g17(latent(i, 0)) << '\t'
            << format_g17(latent.cols > 1 ? latent(i, 1) : 0.0) << '\t' << labels[i] << '\t'
            << y[i] << '\n';
    }
    return out.str();
}

std::string comparison_to_tsv(const TransformComparison& c) {
    std::ostringstream out;
    out << "transformation\ttrained\tk\tch\tbcdr\tstructure\tnote\n";
    for (const auto& r : c.runs) {
        out << r.name << '\t' << (r.trained ? 1 : 0) << '\t' << r.k << '\t' << format_g17(r.ch)
            << '\t' << format_g17(r.bcdr) << '\t' << (r.structure ? 1 : 0) << '\t' << r.error
            << '\n';
    }
    return out.str();
}

std::string index_sweep_to_tsv(const std::vector<IndexSweepRow>& rows) {
    std::ostringstream out;
    out << "k\tch\tdb\tsilhouette\n";
    for (const auto& r : rows)
        out << r.k << '\t' << format_g17(r.ch) << '\t' << format_g17(r.db) << '\t'
            << format_g17(r.silhouette) << '\n';
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    out << content;
}

void write_json_file(const std::string& path, const Json& j) {
    write_text_file(path, j.dump(1) + "\n");
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("missing dependency: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError("cannot parse " + path + ": " + e.what());
    }
    return j;
}

} // namespace latentseg
