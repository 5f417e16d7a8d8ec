#include "it2ml/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "it2ml/errors.hpp"

namespace it2ml {

using nlohmann::json;

std::string mode_name(Mode m) { return m == Mode::it2 ? "it2" : "type1"; }

Mode mode_from_name(const std::string& s) {
    if (s == "it2") return Mode::it2;
    if (s == "type1") return Mode::type1;
    throw InputError("unknown mode '" + s + "' (expected it2 or type1)");
}

// ---------------------------------------------------------------------------
// config <-> json

namespace {

void merge_dataset(DatasetConfig& d, const json& j) {
    d.name = j.value("name", d.name);
    d.format = j.value("format", d.format);
    d.train_path = j.value("train_path", d.train_path);
    d.test_path = j.value("test_path", d.test_path);
    d.path = j.value("path", d.path);
    d.features_path = j.value("features_path", d.features_path);
    d.labels_path = j.value("labels_path", d.labels_path);
    d.label_count = j.value("label_count", d.label_count);
    if (j.contains("label_names")) d.label_names = j["label_names"].get<std::vector<std::string>>();
    d.synth_n = j.value("synth_n", d.synth_n);
    d.synth_d = j.value("synth_d", d.synth_d);
    d.synth_labels = j.value("synth_labels", d.synth_labels);
    d.synth_seed = j.value("synth_seed", d.synth_seed);
    if (j.contains("expect")) {
        const json& e = j["expect"];
        ExpectedStats ex;
        if (e.contains("n_samples")) ex.n_samples = e["n_samples"].get<std::size_t>();
        if (e.contains("n_labels")) ex.n_labels = e["n_labels"].get<std::size_t>();
        if (e.contains("feature_dim")) ex.feature_dim = e["feature_dim"].get<std::size_t>();
        if (e.contains("mean_labels_per_sample"))
            ex.mean_labels_per_sample = e["mean_labels_per_sample"].get<double>();
        ex.tolerance = e.value("tolerance", ex.tolerance);
        d.expect = ex;
    }
}

void merge_hyper(HyperParams& h, const json& j) {
    if (j.contains("init_hidden")) h.init_hidden = j["init_hidden"].get<std::vector<std::size_t>>();
    if (j.contains("ae_hidden")) h.ae_hidden = j["ae_hidden"].get<std::vector<std::size_t>>();
    h.bottleneck = j.value("bottleneck", h.bottleneck);
    h.eta = j.value("eta", h.eta);
    h.lambda = j.value("lambda", h.lambda);
    h.lr = j.value("lr", h.lr);
    h.batch = j.value("batch", h.batch);
    h.epochs = j.value("epochs", h.epochs);
    h.patience = j.value("patience", h.patience);
    h.ae_epochs = j.value("ae_epochs", h.ae_epochs);
    h.anneal_epoch = j.value("anneal_epoch", h.anneal_epoch);
    h.weight_decay = j.value("weight_decay", h.weight_decay);
    h.ridge = j.value("ridge", h.ridge);
    h.normalize_features = j.value("normalize_features", h.normalize_features);
    h.type1_threshold_by_label_count =
        j.value("type1_threshold_by_label_count", h.type1_threshold_by_label_count);
    h.optimizer = j.value("optimizer", h.optimizer);
}

void merge_split(SplitSpec& s, const json& j) {
    const std::string mode = j.value("mode", s.mode == SplitSpec::Mode::random ? "random" : "original");
    if (mode == "random")
        s.mode = SplitSpec::Mode::random;
    else if (mode == "original")
        s.mode = SplitSpec::Mode::original;
    else
        throw InputError("unknown split mode '" + mode + "'");
    if (j.contains("fractions")) {
        const auto f = j["fractions"].get<std::vector<double>>();
        if (f.size() != 3) throw InputError("split fractions must have 3 entries");
        s.train_fraction = f[0];
        s.val_fraction = f[1];
        s.test_fraction = f[2];
    }
    s.seed = j.value("seed", s.seed);
    s.train_index_path = j.value("train_index_path", s.train_index_path);
    s.val_index_path = j.value("val_index_path", s.val_index_path);
    s.test_index_path = j.value("test_index_path", s.test_index_path);
}

}  // namespace

ExperimentConfig config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    if (j.contains("dataset")) merge_dataset(cfg.data, j["dataset"]);
    if (j.contains("split")) merge_split(cfg.split, j["split"]);
    if (j.contains("hyper")) merge_hyper(cfg.hyper, j["hyper"]);
    cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
    cfg.val_carve_seed = j.value("val_carve_seed", cfg.val_carve_seed);
    if (j.contains("mode")) cfg.mode = mode_from_name(j["mode"].get<std::string>());
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    cfg.threads = j.value("threads", cfg.threads);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    if (cfg.seeds.empty()) throw InputError("seeds must be non-empty");
    if (cfg.hyper.lambda < 0) throw InputError("lambda must be >= 0");
    return cfg;
}

ExperimentConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    json d;
    d["name"] = cfg.data.name;
    d["format"] = cfg.data.format;
    d["train_path"] = cfg.data.train_path;
    d["test_path"] = cfg.data.test_path;
    d["path"] = cfg.data.path;
    d["features_path"] = cfg.data.features_path;
    d["labels_path"] = cfg.data.labels_path;
    d["label_count"] = cfg.data.label_count;
    d["label_names"] = cfg.data.label_names;
    d["synth_n"] = cfg.data.synth_n;
    d["synth_d"] = cfg.data.synth_d;
    d["synth_labels"] = cfg.data.synth_labels;
    d["synth_seed"] = cfg.data.synth_seed;
    if (cfg.data.expect) {
        json e;
        if (cfg.data.expect->n_samples) e["n_samples"] = *cfg.data.expect->n_samples;
        if (cfg.data.expect->n_labels) e["n_labels"] = *cfg.data.expect->n_labels;
        if (cfg.data.expect->feature_dim) e["feature_dim"] = *cfg.data.expect->feature_dim;
        if (cfg.data.expect->mean_labels_per_sample)
            e["mean_labels_per_sample"] = *cfg.data.expect->mean_labels_per_sample;
        e["tolerance"] = cfg.data.expect->tolerance;
        d["expect"] = e;
    }
    j["dataset"] = d;

    json s;
    s["mode"] = cfg.split.mode == SplitSpec::Mode::random ? "random" : "original";
    s["fractions"] = {cfg.split.train_fraction, cfg.split.val_fraction, cfg.split.test_fraction};
    s["seed"] = cfg.split.seed;
    s["train_index_path"] = cfg.split.train_index_path;
    s["val_index_path"] = cfg.split.val_index_path;
    s["test_index_path"] = cfg.split.test_index_path;
    j["split"] = s;

    json h;
    h["init_hidden"] = cfg.hyper.init_hidden;
    h["ae_hidden"] = cfg.hyper.ae_hidden;
    h["bottleneck"] = cfg.hyper.bottleneck;
    h["eta"] = cfg.hyper.eta;
    h["lambda"] = cfg.hyper.lambda;
    h["lr"] = cfg.hyper.lr;
    h["batch"] = cfg.hyper.batch;
    h["epochs"] = cfg.hyper.epochs;
    h["patience"] = cfg.hyper.patience;
    h["ae_epochs"] = cfg.hyper.ae_epochs;
    h["anneal_epoch"] = cfg.hyper.anneal_epoch;
    h["weight_decay"] = cfg.hyper.weight_decay;
    h["ridge"] = cfg.hyper.ridge;
    h["normalize_features"] = cfg.hyper.normalize_features;
    h["type1_threshold_by_label_count"] = cfg.hyper.type1_threshold_by_label_count;
    h["optimizer"] = cfg.hyper.optimizer;
    j["hyper"] = h;

    j["val_fraction"] = cfg.val_fraction;
    j["val_carve_seed"] = cfg.val_carve_seed;
    j["mode"] = mode_name(cfg.mode);
    j["seeds"] = cfg.seeds;
    j["threads"] = cfg.threads;
    j["out_dir"] = cfg.out_dir;
    return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string canon = config_to_json(cfg);
    return fnv1a_bytes(canon.data(), canon.size());
}

// ---------------------------------------------------------------------------
// data preparation

Dataset make_synthetic(std::size_t n, std::size_t d, std::size_t labels, std::uint64_t seed) {
    if (d < labels) throw InputError("synthetic generator needs d >= labels");
    Rng rng(seed);

    // Orthonormal label prototypes; an instance is the sum of its labels'
    // prototypes plus small noise, so both label scores and cardinality are
    // linear functions of x (Gram-Schmidt keeps the prototypes separable).
    Matrix proto(labels, d);
    for (std::size_t j = 0; j < labels; ++j) {
        for (std::size_t t = 0; t < d; ++t) proto(j, t) = rng.uniform(-1.0, 1.0);
        for (std::size_t k = 0; k < j; ++k) {
            double dp = 0;
            for (std::size_t t = 0; t < d; ++t) dp += proto(j, t) * proto(k, t);
            for (std::size_t t = 0; t < d; ++t) proto(j, t) -= dp * proto(k, t);
        }
        double norm = 0;
        for (std::size_t t = 0; t < d; ++t) norm += proto(j, t) * proto(j, t);
        norm = std::sqrt(norm);
        for (std::size_t t = 0; t < d; ++t) proto(j, t) /= norm;
    }

    Dataset ds;
    ds.name = "synthetic";
    ds.X = Matrix(n, d);
    ds.Y = LabelMatrix(n, labels);
    const double noise = 0.05;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t card = 1 + static_cast<std::size_t>(rng.bounded(labels));
        std::vector<std::size_t> pick(labels);
        std::iota(pick.begin(), pick.end(), 0);
        rng.shuffle(pick);
        for (std::size_t c = 0; c < card; ++c) {
            const std::size_t j = pick[c];
            ds.Y(i, j) = 1;
            for (std::size_t t = 0; t < d; ++t) ds.X(i, t) += proto(j, t);
        }
        for (std::size_t t = 0; t < d; ++t) ds.X(i, t) += rng.uniform(-noise, noise);
    }
    for (std::size_t t = 0; t < d; ++t) ds.feature_names.push_back("f" + std::to_string(t));
    for (std::size_t j = 0; j < labels; ++j) ds.label_names.push_back("l" + std::to_string(j));
    ds.provenance.content_hash = seed;
    return ds;
}

namespace {

LabelSpec label_spec_for(const DatasetConfig& d) {
    LabelSpec spec;
    spec.trailing_count = d.label_count;
    spec.names = d.label_names;
    return spec;
}

// Deterministically carve a validation subset out of a published train split.
void carve_validation(const Dataset& train_full, double val_fraction, std::uint64_t carve_seed,
                      Dataset& train_out, Dataset& val_out) {
    std::vector<std::size_t> order(train_full.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(carve_seed);
    rng.shuffle(order);
    const std::size_t n_val =
        static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(order.size())));
    const std::span<const std::size_t> all(order);
    val_out = subset(train_full, all.subspan(0, n_val), train_full.name + "-val");
    train_out = subset(train_full, all.subspan(n_val), train_full.name + "-train");
}

}  // namespace

DataBundle prepare_data(const ExperimentConfig& cfg) {
    const DatasetConfig& dc = cfg.data;
    DataBundle out;

    if (dc.format == "arff" && !dc.train_path.empty() && !dc.test_path.empty()) {
        const LabelSpec spec = label_spec_for(dc);
        Dataset train_full = parse_arff(dc.train_path, spec);
        Dataset test = parse_arff(dc.test_path, spec);
        if (train_full.label_count() != test.label_count() ||
            train_full.feature_dim() != test.feature_dim())
            throw InputError("train/test files disagree on dimensions");
        if (dc.expect) {
            // published statistics cover the union of both files
            std::vector<std::size_t> idx(train_full.size() + test.size());
            std::iota(idx.begin(), idx.end(), 0);
            Dataset combined = train_full;
            combined.X = Matrix(train_full.size() + test.size(), train_full.feature_dim());
            combined.Y = LabelMatrix(combined.X.rows, train_full.label_count());
            std::copy(train_full.X.data.begin(), train_full.X.data.end(),
                      combined.X.data.begin());
            std::copy(test.X.data.begin(), test.X.data.end(),
                      combined.X.data.begin() + static_cast<std::ptrdiff_t>(
                                                    train_full.X.data.size()));
            std::copy(train_full.Y.data.begin(), train_full.Y.data.end(),
                      combined.Y.data.begin());
            std::copy(test.Y.data.begin(), test.Y.data.end(),
                      combined.Y.data.begin() + static_cast<std::ptrdiff_t>(
                                                    train_full.Y.data.size()));
            combined.name = dc.name;
            validate_stats(combined, *dc.expect);
        }
        carve_validation(train_full, cfg.val_fraction, cfg.val_carve_seed, out.train, out.val);
        out.test = std::move(test);
    } else {
        Dataset ds;
        if (dc.format == "arff") {
            ds = parse_arff(dc.path, label_spec_for(dc));
        } else if (dc.format == "csv") {
            ds = parse_csv(dc.features_path, dc.labels_path, dc.name);
        } else if (dc.format == "cache") {
            ds = load_cache(dc.path);
        } else if (dc.format == "synthetic") {
            ds = make_synthetic(dc.synth_n, dc.synth_d, dc.synth_labels, dc.synth_seed);
        } else {
            throw InputError("unknown dataset format '" + dc.format + "'");
        }
        if (dc.expect) validate_stats(ds, *dc.expect);
        Split sp = split(ds, cfg.split);
        out.train = std::move(sp.train);
        out.val = std::move(sp.val);
        out.test = std::move(sp.test);
    }

    if (cfg.hyper.normalize_features) {
        out.scaler = normalize(out.train, {&out.val, &out.test});
    } else {
        // identity scaler (mean 0, std 1) so bundles always carry one
        out.scaler.mean.assign(out.train.feature_dim(), 0.0);
        out.scaler.stddev.assign(out.train.feature_dim(), 1.0);
    }
    if (out.train.size() == 0) throw InputError("training split is empty");
    return out;
}

// ---------------------------------------------------------------------------
// model

Matrix TrainedModel::memberships(const Matrix& x) const {
    return backbone.depth() == 0 ? head.predict(x) : head.predict(backbone.predict(x));
}

std::vector<double> TrainedModel::mhats(const Matrix& x) const {
    const Matrix codes = ae.encode(x);
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = reg.predict(codes.row(i));
    return out;
}

LabelMatrix TrainedModel::predict(const Matrix& x, double lambda_override) const {
    const Matrix y = memberships(x);
    const std::vector<double> mh = mhats(x);
    LabelMatrix preds(x.rows, label_count());
    for (std::size_t i = 0; i < x.rows; ++i) {
        Prediction p;
        if (mode == Mode::it2) {
            const std::size_t card =
                static_cast<std::size_t>(round_cardinality(mh[i], label_count()));
            const It2Label interval =
                build_interval(y.row(i), derive_fuzzifiers(mh[i], card, label_count()));
            p = defuzzify(interval, mh[i], lambda_override);
        } else {
            p = type1_binarize(y.row(i), mh[i], threshold_by_label_count);
        }
        std::copy(p.y_hat.begin(), p.y_hat.end(), preds.row(i).begin());
    }
    return preds;
}

MetricsReport evaluate_model(const TrainedModel& model, const Dataset& test_normalized,
                             double lambda, std::uint64_t seed) {
    const LabelMatrix preds = model.predict(test_normalized.X, lambda);
    return evaluate(preds, test_normalized.Y, seed);
}

namespace {

OptimizerConfig make_opt(const HyperParams& h) {
    OptimizerConfig oc;
    oc.kind = h.optimizer == "sgd" ? OptimizerConfig::Kind::sgd : OptimizerConfig::Kind::adam;
    if (h.optimizer != "sgd" && h.optimizer != "adam")
        throw InputError("unknown optimizer '" + h.optimizer + "'");
    oc.lr = h.lr;
    return oc;
}

std::vector<std::vector<double>> snapshot(const std::vector<std::span<double>>& params) {
    std::vector<std::vector<double>> s;
    s.reserve(params.size());
    for (const auto& p : params) s.emplace_back(p.begin(), p.end());
    return s;
}

void restore(const std::vector<std::span<double>>& params,
             const std::vector<std::vector<double>>& snap) {
    for (std::size_t k = 0; k < params.size(); ++k)
        std::copy(snap[k].begin(), snap[k].end(), params[k].begin());
}

}  // namespace

TrainedModel train_one_seed(const ExperimentConfig& cfg, const DataBundle& data,
                            std::uint64_t seed) {
    const std::size_t d = data.train.feature_dim();
    const std::size_t L = data.train.label_count();
    const HyperParams& h = cfg.hyper;

    TrainedModel model;
    model.seed = seed;
    model.mode = cfg.mode;
    model.lambda = h.lambda;
    model.threshold_by_label_count = h.type1_threshold_by_label_count;
    model.scaler = data.scaler;

    // --- stage 1: autoencoder with cardinality head -------------------------
    // zero-label instances carry no cardinality supervision; drop them here
    std::vector<std::size_t> labeled;
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        if (data.train.Y.cardinality(i) > 0) labeled.push_back(i);
    }
    if (labeled.empty()) throw InputError("no labeled instances in training split");

    Matrix x_est(labeled.size(), d);
    std::vector<std::size_t> counts(labeled.size());
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        std::copy_n(data.train.X.row_ptr(labeled[i]), d, x_est.row_ptr(i));
        counts[i] = data.train.Y.cardinality(labeled[i]);
    }

    Rng rng_ae = Rng::fork(seed, "ae-init");
    model.ae = make_autoencoder(d, h.ae_hidden, h.bottleneck, L, h.eta, rng_ae);
    AeTrainConfig ae_cfg;
    ae_cfg.epochs = h.ae_epochs;
    ae_cfg.batch = h.batch;
    ae_cfg.opt = make_opt(h);
    Rng rng_ae_batches = Rng::fork(seed, "ae-batches");
    train_autoencoder(model.ae, x_est, counts, ae_cfg, rng_ae_batches);

    // --- stage 2: cardinality regression on bottleneck codes ----------------
    const Matrix codes = model.ae.encode(x_est);
    std::vector<double> counts_real(counts.begin(), counts.end());
    model.reg = fit_regressor(codes, counts_real, static_cast<double>(L), h.ridge);

    // --- stage 3: fuzziness initializer under the interval loss -------------
    Rng rng_init = Rng::fork(seed, "init");
    std::size_t head_in = d;
    if (!h.init_hidden.empty()) {
        std::vector<std::size_t> dims{d};
        dims.insert(dims.end(), h.init_hidden.begin(), h.init_hidden.end());
        std::vector<Activation> acts(dims.size() - 1, Activation::relu);
        model.backbone = DenseNet(dims, acts, rng_init);
        head_in = h.init_hidden.back();
    }
    model.head = MembershipHead(L, head_in, rng_init);

    // frozen estimator: m_hat and the training-time fuzzifier pair per instance
    std::vector<double> mh(labeled.size());
    std::vector<FuzzifierPair> pairs(labeled.size());
    {
        const Matrix train_codes = model.ae.encode(x_est);
        for (std::size_t i = 0; i < labeled.size(); ++i) {
            mh[i] = model.reg.predict(train_codes.row(i));
            pairs[i] = derive_fuzzifiers(mh[i], counts[i], L);
        }
    }

    Optimizer opt(make_opt(h));
    auto params = model.head.param_views();
    if (model.backbone.depth() > 0) {
        auto bp = model.backbone.param_views();
        params.insert(params.begin(), bp.begin(), bp.end());
    }

    // checkpoint selection: validation example-F1 with the lambda-free
    // midpoint rule, so training is independent of the defuzzification lambda.
    // Without a validation split there is no early stopping and the final
    // epoch is kept.
    const bool has_val = data.val.size() > 0;
    auto val_score = [&]() {
        const LabelMatrix preds = model.predict(data.val.X, 0.0);
        return example_f1(preds, data.val.Y);
    };

    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng_batches = Rng::fork(seed, "batches");

    double best_score = -2.0;
    std::vector<std::vector<double>> best_params = snapshot(params);
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < h.epochs; ++epoch) {
        if (h.anneal_epoch > 0) {
            if (epoch == h.anneal_epoch) opt.set_lr(h.lr * 0.1);
            if (epoch == h.anneal_epoch + h.anneal_epoch / 2) opt.set_lr(h.lr * 0.01);
        }
        rng_batches.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += h.batch) {
            const std::size_t bsz = std::min(h.batch, order.size() - start);
            Matrix xb(bsz, d);
            for (std::size_t i = 0; i < bsz; ++i)
                std::copy_n(x_est.row_ptr(order[start + i]), d, xb.row_ptr(i));

            const Matrix* feats = &xb;
            if (model.backbone.depth() > 0) feats = &model.backbone.forward(xb);
            const Matrix& y = model.head.forward(*feats);

            const double inv_b = 1.0 / static_cast<double>(bsz);
            Matrix upstream(bsz, L);
            for (std::size_t i = 0; i < bsz; ++i) {
                const std::size_t row = order[start + i];
                const auto y_star = data.train.Y.row(labeled[row]);
                std::vector<double> g;
                if (cfg.mode == Mode::it2) {
                    const It2Label interval = build_interval(y.row(i), pairs[row]);
                    g = it2_loss_grad(interval, y_star);
                } else {
                    g = type1_loss_grad(y.row(i), y_star);
                }
                for (std::size_t j = 0; j < L; ++j) upstream(i, j) = g[j] * inv_b;
            }

            MembershipHead::Grads hg = model.head.backward(upstream);
            std::vector<std::span<const double>> grads;
            NetGradients bg;
            if (model.backbone.depth() > 0) {
                bg = model.backbone.backward(hg.h);
                grads = DenseNet::grad_views(bg);
            }
            grads.emplace_back(hg.w.data);
            grads.emplace_back(hg.alpha);
            opt.step(params, grads);
            if (h.weight_decay > 0.0 && model.backbone.depth() > 0) {
                // decoupled decay, scaled by the scheduled learning rate
                const double shrink = 1.0 - opt.config().lr * h.weight_decay;
                for (auto& layer : model.backbone.layers()) {
                    for (auto& w : layer.W.data) w *= shrink;
                }
            }
        }

        if (!has_val) continue;
        const double score = val_score();
        if (score > best_score) {
            best_score = score;
            best_params = snapshot(params);
            since_best = 0;
        } else if (++since_best >= h.patience && h.patience > 0) {
            break;
        }
    }
    if (has_val) restore(params, best_params);
    return model;
}

// ---------------------------------------------------------------------------
// runs

std::vector<MetricsReport> RunRecord::reports() const {
    std::vector<MetricsReport> out;
    for (const auto& o : outcomes) {
        if (o.ok) out.push_back(o.report);
    }
    return out;
}

namespace {

Aggregate aggregate_of(const std::vector<double>& xs) {
    Aggregate a;
    if (xs.empty()) return a;
    a.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0;
        for (double v : xs) ss += (v - a.mean) * (v - a.mean);
        a.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return a;
}

}  // namespace

RunRecord aggregate_outcomes(std::vector<SeedOutcome> outcomes, const ExperimentConfig& cfg,
                             double wall_seconds, double lambda) {
    RunRecord rec;
    rec.config_hash = config_hash(cfg);
    rec.dataset = cfg.data.name;
    rec.mode = mode_name(cfg.mode);
    rec.lambda = lambda;
    rec.outcomes = std::move(outcomes);
    rec.wall_seconds = wall_seconds;
    std::vector<double> ha, ef1, mif1, maf1;
    for (const auto& o : rec.outcomes) {
        if (!o.ok) continue;
        ha.push_back(o.report.ha);
        ef1.push_back(o.report.example_f1);
        mif1.push_back(o.report.micro_f1);
        maf1.push_back(o.report.macro_f1);
    }
    rec.ha = aggregate_of(ha);
    rec.example_f1 = aggregate_of(ef1);
    rec.micro_f1 = aggregate_of(mif1);
    rec.macro_f1 = aggregate_of(maf1);
    return rec;
}

namespace {

// Runs fn(seed) over all seeds on a small thread pool; failures are captured
// per seed, not propagated.
std::vector<SeedOutcome> for_each_seed(const ExperimentConfig& cfg,
                                       const std::function<MetricsReport(std::uint64_t)>& fn) {
    const std::size_t n = cfg.seeds.size();
    std::vector<SeedOutcome> outcomes(n);
    std::size_t workers = cfg.threads > 0 ? cfg.threads : std::thread::hardware_concurrency();
    workers = std::max<std::size_t>(1, std::min(workers, n));

    std::atomic<std::size_t> next{0};
    auto body = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            SeedOutcome& o = outcomes[i];
            o.seed = cfg.seeds[i];
            try {
                o.report = fn(cfg.seeds[i]);
                o.ok = true;
            } catch (const std::exception& e) {
                o.ok = false;
                o.error = e.what();
            }
        }
    };
    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    return outcomes;
}

}  // namespace

RunRecord run_pipeline(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const DataBundle data = prepare_data(cfg);
    auto outcomes = for_each_seed(cfg, [&](std::uint64_t seed) {
        const TrainedModel model = train_one_seed(cfg, data, seed);
        return evaluate_model(model, data.test, cfg.hyper.lambda, seed);
    });
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return aggregate_outcomes(std::move(outcomes), cfg, secs, cfg.hyper.lambda);
}

SweepResult lambda_sweep(const ExperimentConfig& cfg, const std::vector<double>& lambdas) {
    if (lambdas.empty()) throw InputError("lambda sweep needs at least one lambda");
    const auto t0 = std::chrono::steady_clock::now();
    const DataBundle data = prepare_data(cfg);

    // train once per seed; lambda only enters defuzzification
    std::vector<TrainedModel> models(cfg.seeds.size());
    std::vector<SeedOutcome> trained(cfg.seeds.size());
    {
        std::atomic<std::size_t> next{0};
        std::size_t workers = cfg.threads > 0 ? cfg.threads : std::thread::hardware_concurrency();
        workers = std::max<std::size_t>(1, std::min(workers, cfg.seeds.size()));
        auto body = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cfg.seeds.size()) return;
                trained[i].seed = cfg.seeds[i];
                try {
                    models[i] = train_one_seed(cfg, data, cfg.seeds[i]);
                    trained[i].ok = true;
                } catch (const std::exception& e) {
                    trained[i].error = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    const double train_secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    SweepResult res;
    res.lambdas = lambdas;
    std::map<double, double> mean_ha, mean_ef1, mean_mif1, mean_maf1;
    for (double lam : lambdas) {
        std::vector<SeedOutcome> outcomes = trained;
        for (std::size_t i = 0; i < models.size(); ++i) {
            if (!outcomes[i].ok) continue;
            outcomes[i].report = evaluate_model(models[i], data.test, lam, cfg.seeds[i]);
        }
        ExperimentConfig cfg_l = cfg;
        cfg_l.hyper.lambda = lam;
        RunRecord rec = aggregate_outcomes(std::move(outcomes), cfg_l,
                                           train_secs / static_cast<double>(lambdas.size()), lam);
        mean_ha[lam] = rec.ha.mean;
        mean_ef1[lam] = rec.example_f1.mean;
        mean_mif1[lam] = rec.micro_f1.mean;
        mean_maf1[lam] = rec.macro_f1.mean;
        res.records.push_back(std::move(rec));
    }
    res.delta_ha = delta_m(mean_ha);
    res.delta_example_f1 = delta_m(mean_ef1);
    res.delta_micro_f1 = delta_m(mean_mif1);
    res.delta_macro_f1 = delta_m(mean_maf1);
    return res;
}

AblationResult ablation(const ExperimentConfig& cfg) {
    ExperimentConfig c2 = cfg;
    c2.mode = Mode::it2;
    ExperimentConfig c1 = cfg;
    c1.mode = Mode::type1;

    AblationResult res;
    res.it2 = run_pipeline(c2);
    res.type1 = run_pipeline(c1);
    res.d_ha = res.it2.ha.mean - res.type1.ha.mean;
    res.d_example_f1 = res.it2.example_f1.mean - res.type1.example_f1.mean;
    res.d_micro_f1 = res.it2.micro_f1.mean - res.type1.micro_f1.mean;
    res.d_macro_f1 = res.it2.macro_f1.mean - res.type1.macro_f1.mean;
    return res;
}

// ---------------------------------------------------------------------------
// reports

namespace {

std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t hash_from_hex(const std::string& s) {
    return std::strtoull(s.c_str(), nullptr, 16);
}

}  // namespace

void emit_report(const RunRecord& record, ReportFormat format, const std::string& path) {
    if (record.outcomes.empty()) throw InputError("cannot emit a record with no seeds");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);

    if (format == ReportFormat::json_lines) {
        json meta{{"type", "meta"},
                  {"config_hash", hash_hex(record.config_hash)},
                  {"dataset", record.dataset},
                  {"mode", record.mode},
                  {"lambda", record.lambda},
                  {"wall_seconds", record.wall_seconds}};
        out << meta.dump() << '\n';
        for (const auto& o : record.outcomes) {
            if (o.ok) {
                json r{{"type", "report"},        {"seed", o.seed},
                       {"ha", o.report.ha},       {"example_f1", o.report.example_f1},
                       {"micro_f1", o.report.micro_f1}, {"macro_f1", o.report.macro_f1},
                       {"n_instances", o.report.n_instances}};
                out << r.dump() << '\n';
            } else {
                json r{{"type", "failure"}, {"seed", o.seed}, {"error", o.error}};
                out << r.dump() << '\n';
            }
        }
        json agg{{"type", "aggregate"},
                 {"ha_mean", record.ha.mean},
                 {"ha_std", record.ha.stddev},
                 {"example_f1_mean", record.example_f1.mean},
                 {"example_f1_std", record.example_f1.stddev},
                 {"micro_f1_mean", record.micro_f1.mean},
                 {"micro_f1_std", record.micro_f1.stddev},
                 {"macro_f1_mean", record.macro_f1.mean},
                 {"macro_f1_std", record.macro_f1.stddev}};
        out << agg.dump() << '\n';
        return;
    }

    out << "dataset=" << record.dataset << " mode=" << record.mode
        << " lambda=" << record.lambda << " config=" << hash_hex(record.config_hash) << "\n";
    out << "seeds: " << record.outcomes.size() << ", wall: " << record.wall_seconds << " s\n\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %10s %10s\n", "metric", "mean", "std");
    out << line;
    const auto row = [&](const char* name, const Aggregate& a) {
        std::snprintf(line, sizeof(line), "%-12s %10.4f %10.4f\n", name, a.mean, a.stddev);
        out << line;
    };
    row("HA", record.ha);
    row("example-F1", record.example_f1);
    row("micro-F1", record.micro_f1);
    row("macro-F1", record.macro_f1);
    out << "\nper-seed:\n";
    std::snprintf(line, sizeof(line), "%-8s %10s %10s %10s %10s\n", "seed", "HA", "ex-F1", "mi-F1",
                  "ma-F1");
    out << line;
    for (const auto& o : record.outcomes) {
        if (o.ok) {
            std::snprintf(line, sizeof(line), "%-8llu %10.4f %10.4f %10.4f %10.4f\n",
                          static_cast<unsigned long long>(o.seed), o.report.ha,
                          o.report.example_f1, o.report.micro_f1, o.report.macro_f1);
            out << line;
        } else {
            std::snprintf(line, sizeof(line), "%-8llu FAILED: %s\n",
                          static_cast<unsigned long long>(o.seed), o.error.c_str());
            out << line;
        }
    }
}

RunRecord parse_report_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    RunRecord rec;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path, 0, std::string("bad json line: ") + e.what());
        }
        const std::string type = j.value("type", "");
        if (type == "meta") {
            rec.config_hash = hash_from_hex(j["config_hash"].get<std::string>());
            rec.dataset = j.value("dataset", "");
            rec.mode = j.value("mode", "");
            rec.lambda = j.value("lambda", 0.0);
            rec.wall_seconds = j.value("wall_seconds", 0.0);
        } else if (type == "report") {
            SeedOutcome o;
            o.seed = j["seed"].get<std::uint64_t>();
            o.ok = true;
            o.report.seed = o.seed;
            o.report.ha = j["ha"].get<double>();
            o.report.example_f1 = j["example_f1"].get<double>();
            o.report.micro_f1 = j["micro_f1"].get<double>();
            o.report.macro_f1 = j["macro_f1"].get<double>();
            o.report.n_instances = j["n_instances"].get<std::int64_t>();
            rec.outcomes.push_back(std::move(o));
        } else if (type == "failure") {
            SeedOutcome o;
            o.seed = j["seed"].get<std::uint64_t>();
            o.ok = false;
            o.error = j.value("error", "");
            rec.outcomes.push_back(std::move(o));
        } else if (type == "aggregate") {
            rec.ha = {j["ha_mean"].get<double>(), j["ha_std"].get<double>()};
            rec.example_f1 = {j["example_f1_mean"].get<double>(),
                              j["example_f1_std"].get<double>()};
            rec.micro_f1 = {j["micro_f1_mean"].get<double>(), j["micro_f1_std"].get<double>()};
            rec.macro_f1 = {j["macro_f1_mean"].get<double>(), j["macro_f1_std"].get<double>()};
        } else {
            throw ParseError(path, 0, "unknown record type '" + type + "'");
        }
    }
    return rec;
}

// ---------------------------------------------------------------------------
// model bundles

namespace {

constexpr char kBundleMagic[8] = {'I', 'T', '2', 'M', 'L', 'B', '0', '1'};

void put_u64(std::string& out, std::uint64_t v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_f64(std::string& out, double v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_doubles(std::string& out, const std::vector<double>& v) {
    put_u64(out, v.size());
    out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

void put_net(std::string& out, const DenseNet& net) {
    put_u64(out, net.depth());
    for (const auto& layer : net.layers()) {
        put_u64(out, layer.out_dim());
        put_u64(out, layer.in_dim());
        out.push_back(layer.act == Activation::relu ? 1 : 0);
        put_doubles(out, layer.W.data);
        put_doubles(out, layer.b);
    }
}

struct BundleReader {
    const std::string& buf;
    std::size_t pos = 0;

    std::uint64_t u64() {
        if (pos + 8 > buf.size()) throw IoError("bundle truncated");
        std::uint64_t v;
        std::memcpy(&v, buf.data() + pos, 8);
        pos += 8;
        return v;
    }
    double f64() {
        if (pos + 8 > buf.size()) throw IoError("bundle truncated");
        double v;
        std::memcpy(&v, buf.data() + pos, 8);
        pos += 8;
        return v;
    }
    char byte() {
        if (pos + 1 > buf.size()) throw IoError("bundle truncated");
        return buf[pos++];
    }
    std::vector<double> doubles() {
        const auto n = u64();
        if (pos + n * 8 > buf.size()) throw IoError("bundle truncated");
        std::vector<double> v(n);
        std::memcpy(v.data(), buf.data() + pos, n * 8);
        pos += n * 8;
        return v;
    }
    DenseNet net() {
        DenseNet out;
        const auto depth = u64();
        for (std::uint64_t k = 0; k < depth; ++k) {
            Layer layer;
            const auto o = u64();
            const auto i = u64();
            layer.act = byte() ? Activation::relu : Activation::linear;
            layer.W = Matrix(o, i);
            layer.W.data = doubles();
            if (layer.W.data.size() != o * i) throw IoError("bundle layer shape mismatch");
            layer.b = doubles();
            if (layer.b.size() != o) throw IoError("bundle bias shape mismatch");
            out.layers().push_back(std::move(layer));
        }
        return out;
    }
};

}  // namespace

void save_bundle(const TrainedModel& model, std::uint64_t cfg_hash, const std::string& path) {
    std::string out;
    out.append(kBundleMagic, sizeof(kBundleMagic));
    put_u64(out, 1);  // version
    put_u64(out, cfg_hash);
    put_u64(out, model.seed);
    out.push_back(model.mode == Mode::it2 ? 0 : 1);
    out.push_back(model.threshold_by_label_count ? 1 : 0);
    put_f64(out, model.lambda);
    put_f64(out, model.ae.eta);
    put_doubles(out, model.scaler.mean);
    put_doubles(out, model.scaler.stddev);
    put_net(out, model.ae.encoder);
    put_net(out, model.ae.decoder);
    put_net(out, model.ae.card_head);
    put_doubles(out, model.reg.coefficients);
    put_f64(out, model.reg.intercept);
    put_f64(out, model.reg.clamp_lo);
    put_f64(out, model.reg.clamp_hi);
    put_net(out, model.backbone);
    put_u64(out, model.head.labels());
    put_u64(out, model.head.input_dim());
    put_doubles(out, model.head.weights().data);
    put_doubles(out, model.head.alpha());
    put_u64(out, fnv1a_bytes(out.data(), out.size()));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

TrainedModel load_bundle(const std::string& path, std::uint64_t* cfg_hash_out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string buf = ss.str();
    if (buf.size() < sizeof(kBundleMagic) + 8) throw IoError("bundle truncated");
    if (std::memcmp(buf.data(), kBundleMagic, sizeof(kBundleMagic)) != 0)
        throw IoError("bad bundle magic");
    std::uint64_t stored;
    std::memcpy(&stored, buf.data() + buf.size() - 8, 8);
    if (fnv1a_bytes(buf.data(), buf.size() - 8) != stored)
        throw IoError("bundle checksum mismatch");

    BundleReader r{buf, sizeof(kBundleMagic)};
    const auto version = r.u64();
    if (version != 1) throw IoError("unsupported bundle version");
    const auto cfg_hash = r.u64();
    if (cfg_hash_out) *cfg_hash_out = cfg_hash;

    TrainedModel m;
    m.seed = r.u64();
    m.mode = r.byte() == 0 ? Mode::it2 : Mode::type1;
    m.threshold_by_label_count = r.byte() != 0;
    m.lambda = r.f64();
    m.ae.eta = r.f64();
    m.scaler.mean = r.doubles();
    m.scaler.stddev = r.doubles();
    m.ae.encoder = r.net();
    m.ae.decoder = r.net();
    m.ae.card_head = r.net();
    m.reg.coefficients = r.doubles();
    m.reg.intercept = r.f64();
    m.reg.clamp_lo = r.f64();
    m.reg.clamp_hi = r.f64();
    m.backbone = r.net();
    const auto L = r.u64();
    const auto din = r.u64();
    Rng dummy(0);
    m.head = MembershipHead(L, din, dummy);
    m.head.weights().data = r.doubles();
    if (m.head.weights().data.size() != L * din) throw IoError("bundle head shape mismatch");
    m.head.alpha() = r.doubles();
    if (m.head.alpha().size() != L) throw IoError("bundle head alpha mismatch");
    return m;
}

}  // namespace it2ml
