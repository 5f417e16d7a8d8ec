// it2ml command-line harness.
//
// Subcommands:
//   train      full pipeline over the configured seeds, writes results +
//              model bundles
//   eval       evaluate a saved bundle on the configured test split
//   sweep      re-defuzzify trained models over a lambda grid, report deltas
//   ablate     paired it2 vs type1 runs on shared seeds/splits
//   stats      dataset statistics (and validation against expected values)
//   gradcheck  finite-difference verification of the analytic gradients
//
// A JSON config supplies dataset paths and hyperparameters; command-line
// flags override config fields. --dataset accepts the built-in presets
// "scene" (data/scene ARFF pair) and "synthetic".

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>

#include "it2ml/grad_check.hpp"
#include "it2ml/kernels.hpp"
#include "it2ml/pipeline.hpp"

using namespace it2ml;

namespace {

void apply_dataset_preset(ExperimentConfig& cfg, const std::string& name) {
    if (name == "scene") {
        cfg.data.name = "scene";
        cfg.data.format = "arff";
        cfg.data.train_path = "data/scene/scene-train.arff";
        cfg.data.test_path = "data/scene/scene-test.arff";
        cfg.data.label_count = 6;
        ExpectedStats e;
        e.n_samples = 2407;
        e.n_labels = 6;
        e.feature_dim = 294;
        e.mean_labels_per_sample = 1.07;
        e.tolerance = 0.01;
        cfg.data.expect = e;
    } else if (name == "synthetic") {
        cfg.data.name = "synthetic";
        cfg.data.format = "synthetic";
    } else {
        throw InputError("unknown dataset preset '" + name + "' (use scene or synthetic)");
    }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const std::string tok = s.substr(start, comma == std::string::npos ? comma : comma - start);
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (seeds.empty()) throw InputError("empty seed list");
    return seeds;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> vals;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const std::string tok = s.substr(start, comma == std::string::npos ? comma : comma - start);
        if (!tok.empty()) vals.push_back(std::stod(tok));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return vals;
}

void print_record(const RunRecord& rec) {
    std::printf("dataset=%s mode=%s lambda=%g (%zu seeds, %.1f s)\n", rec.dataset.c_str(),
                rec.mode.c_str(), rec.lambda, rec.outcomes.size(), rec.wall_seconds);
    std::printf("  %-12s %8.4f +- %.4f\n", "HA", rec.ha.mean, rec.ha.stddev);
    std::printf("  %-12s %8.4f +- %.4f\n", "example-F1", rec.example_f1.mean,
                rec.example_f1.stddev);
    std::printf("  %-12s %8.4f +- %.4f\n", "micro-F1", rec.micro_f1.mean, rec.micro_f1.stddev);
    std::printf("  %-12s %8.4f +- %.4f\n", "macro-F1", rec.macro_f1.mean, rec.macro_f1.stddev);
    for (const auto& o : rec.outcomes) {
        if (!o.ok) std::printf("  seed %llu FAILED: %s\n",
                               static_cast<unsigned long long>(o.seed), o.error.c_str());
    }
}

void write_outputs(const RunRecord& rec, const std::string& out_dir, const std::string& stem) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    emit_report(rec, ReportFormat::json_lines, out_dir + "/" + stem + ".jsonl");
    emit_report(rec, ReportFormat::text_table, out_dir + "/" + stem + ".txt");
}

// Shared flag plumbing: returns the config with overrides applied.
struct CommonFlags {
    std::string config_path, dataset, mode, out;
    std::string seeds_csv;
    std::int64_t seed = -1;
    double lambda = -1, eta = -1;

    ExperimentConfig resolve() const {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = config_from_json_file(config_path);
        if (!dataset.empty()) apply_dataset_preset(cfg, dataset);
        if (!mode.empty()) cfg.mode = mode_from_name(mode);
        if (!seeds_csv.empty()) cfg.seeds = parse_seed_list(seeds_csv);
        if (seed >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed)};
        if (lambda >= 0) cfg.hyper.lambda = lambda;
        if (eta >= 0) cfg.hyper.eta = eta;
        if (!out.empty()) cfg.out_dir = out;
        if (cfg.data.format == "arff" && cfg.data.train_path.empty() && cfg.data.path.empty())
            apply_dataset_preset(const_cast<ExperimentConfig&>(cfg), "scene");
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file");
    cmd->add_option("--dataset", f.dataset, "dataset preset (scene|synthetic)");
    cmd->add_option("--mode", f.mode, "it2 or type1")
        ->check(CLI::IsMember({"it2", "type1"}));
    cmd->add_option("--seeds", f.seeds_csv, "comma-separated seed list");
    cmd->add_option("--seed", f.seed, "single seed (overrides --seeds)");
    cmd->add_option("--lambda", f.lambda, "defuzzification lambda");
    cmd->add_option("--eta", f.eta, "cross-entropy weight in the autoencoder objective");
    cmd->add_option("--out", f.out, "output directory");
}

int cmd_train(const CommonFlags& flags) {
    ExperimentConfig cfg = flags.resolve();
    const DataBundle data = prepare_data(cfg);
    std::printf("train: %s n=%zu/%zu/%zu d=%zu L=%zu\n", cfg.data.name.c_str(),
                data.train.size(), data.val.size(), data.test.size(), data.train.feature_dim(),
                data.train.label_count());

    const RunRecord rec = run_pipeline(cfg);
    print_record(rec);
    write_outputs(rec, cfg.out_dir, "results");

    if (!cfg.out_dir.empty()) {
        const std::uint64_t h = config_hash(cfg);
        for (std::uint64_t seed : cfg.seeds) {
            const TrainedModel model = train_one_seed(cfg, data, seed);
            save_bundle(model, h,
                        cfg.out_dir + "/bundle_seed" + std::to_string(seed) + ".bin");
        }
        std::printf("wrote results and %zu bundles to %s\n", cfg.seeds.size(),
                    cfg.out_dir.c_str());
    }
    const bool any_ok =
        std::any_of(rec.outcomes.begin(), rec.outcomes.end(), [](auto& o) { return o.ok; });
    return any_ok ? 0 : 1;
}

int cmd_eval(const CommonFlags& flags, const std::string& bundle_path) {
    ExperimentConfig cfg = flags.resolve();
    cfg.hyper.normalize_features = false;  // the bundle carries its own scaler
    DataBundle data = prepare_data(cfg);

    TrainedModel model = load_bundle(bundle_path);
    model.scaler.apply(data.test.X);
    const double lam = flags.lambda >= 0 ? flags.lambda : model.lambda;
    const MetricsReport rep = evaluate_model(model, data.test, lam, model.seed);

    std::printf("eval %s on %s (lambda=%g, %lld instances)\n", bundle_path.c_str(),
                cfg.data.name.c_str(), lam, static_cast<long long>(rep.n_instances));
    std::printf("  HA=%.4f example-F1=%.4f micro-F1=%.4f macro-F1=%.4f\n", rep.ha,
                rep.example_f1, rep.micro_f1, rep.macro_f1);

    SeedOutcome o{model.seed, true, "", rep};
    RunRecord rec = aggregate_outcomes({o}, cfg, 0.0, lam);
    write_outputs(rec, cfg.out_dir, "eval");
    return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& lambdas_csv) {
    ExperimentConfig cfg = flags.resolve();
    std::vector<double> lambdas = parse_double_list(lambdas_csv);
    if (lambdas.empty()) lambdas = {0.0, 0.05, 0.1, 0.2, 0.3, 0.5};

    const SweepResult res = lambda_sweep(cfg, lambdas);
    std::printf("lambda sweep on %s (%zu seeds)\n", cfg.data.name.c_str(), cfg.seeds.size());
    std::printf("%8s %10s %10s %10s %10s %12s\n", "lambda", "HA", "ex-F1", "mi-F1", "ma-F1",
                "dM(ex-F1)");
    for (std::size_t i = 0; i < res.lambdas.size(); ++i) {
        const RunRecord& r = res.records[i];
        std::printf("%8.3f %10.4f %10.4f %10.4f %10.4f %12.5f\n", res.lambdas[i], r.ha.mean,
                    r.example_f1.mean, r.micro_f1.mean, r.macro_f1.mean,
                    res.delta_example_f1.at(res.lambdas[i]));
    }
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        for (std::size_t i = 0; i < res.lambdas.size(); ++i) {
            char stem[64];
            std::snprintf(stem, sizeof(stem), "sweep_lambda_%g", res.lambdas[i]);
            emit_report(res.records[i], ReportFormat::json_lines,
                        cfg.out_dir + "/" + stem + ".jsonl");
        }
    }
    return 0;
}

int cmd_ablate(const CommonFlags& flags) {
    ExperimentConfig cfg = flags.resolve();
    const AblationResult res = ablation(cfg);
    std::printf("=== it2 ===\n");
    print_record(res.it2);
    std::printf("=== type1 ===\n");
    print_record(res.type1);
    std::printf("deltas (it2 - type1): HA %+0.4f  ex-F1 %+0.4f  mi-F1 %+0.4f  ma-F1 %+0.4f\n",
                res.d_ha, res.d_example_f1, res.d_micro_f1, res.d_macro_f1);
    if (!cfg.out_dir.empty()) {
        write_outputs(res.it2, cfg.out_dir, "ablate_it2");
        write_outputs(res.type1, cfg.out_dir, "ablate_type1");
    }
    return 0;
}

int cmd_stats(const CommonFlags& flags) {
    ExperimentConfig cfg = flags.resolve();
    cfg.hyper.normalize_features = false;
    const DataBundle data = prepare_data(cfg);  // runs the expectation check

    auto show = [](const char* tag, const Dataset& ds) {
        const DatasetStats st = stats(ds);
        std::printf("%-6s n=%zu d=%zu L=%zu mean-labels=%.4f mean-samples-per-label=%.2f\n", tag,
                    st.n_samples, st.feature_dim, st.n_labels, st.mean_labels_per_sample,
                    st.mean_samples_per_label);
    };
    show("train", data.train);
    show("val", data.val);
    show("test", data.test);
    return 0;
}

int cmd_gradcheck(double tolerance) {
    int failures = 0;
    auto report_line = [&](const char* name, const GradCheckReport& rep) {
        std::printf("%-28s checked=%-5zu max-rel-err=%.3e  %s\n", name, rep.checked,
                    rep.max_rel_err, rep.ok() ? "OK" : "FAIL");
        if (!rep.ok()) ++failures;
    };

    // dense net under a quadratic head, each activation
    for (const Activation act : {Activation::linear, Activation::relu}) {
        Rng rng(11);
        DenseNet net({4, 8, 3}, {act, Activation::linear}, rng);
        Matrix x(5, 4);
        for (auto& v : x.data) v = rng.uniform(-1, 1);
        auto loss = [&]() {
            const Matrix out = net.predict(x);
            double s = 0;
            for (double v : out.data) s += v * v;
            return 0.5 * s;
        };
        net.forward(x);
        const NetGradients g = net.backward(net.predict(x));
        std::vector<std::vector<double>> analytic;
        for (auto gv : DenseNet::grad_views(g)) analytic.emplace_back(gv.begin(), gv.end());
        report_line(act == Activation::relu ? "dense-net (relu)" : "dense-net (linear)",
                    grad_check(net.param_views(), loss, analytic, 1e-5, tolerance));
    }

    // membership head at an interior point
    {
        Rng rng(12);
        MembershipHead head(3, 6, rng);
        Matrix h(4, 6);
        for (auto& v : h.data) v = rng.uniform(-0.5, 0.5);
        Matrix up(4, 3);
        for (auto& v : up.data) v = rng.uniform(-1, 1);
        auto loss = [&]() {
            const Matrix y = head.predict(h);
            double s = 0;
            for (std::size_t i = 0; i < y.data.size(); ++i) s += up.data[i] * y.data[i];
            return s;
        };
        head.forward(h);
        const MembershipHead::Grads g = head.backward(up);
        std::vector<std::vector<double>> analytic{
            {g.w.data.begin(), g.w.data.end()}, {g.alpha.begin(), g.alpha.end()}};
        report_line("membership head",
                    grad_check(head.param_views(), loss, analytic, 1e-5, tolerance));
    }

    // full pipeline loss: interval F1 surrogate through head and backbone
    {
        Rng rng(13);
        DenseNet backbone({6, 10}, {Activation::relu}, rng);
        MembershipHead head(3, 10, rng);
        Matrix x(5, 6);
        for (auto& v : x.data) v = rng.uniform(-1, 1);
        LabelMatrix ys(5, 3);
        std::vector<FuzzifierPair> pairs;
        for (std::size_t i = 0; i < 5; ++i) {
            ys(i, i % 3) = 1;
            if (i % 2 == 0) ys(i, (i + 1) % 3) = 1;
            pairs.push_back(derive_fuzzifiers(1.0 + 0.3 * static_cast<double>(i % 3),
                                              ys.cardinality(i), 3));
        }
        auto loss = [&]() {
            const Matrix y = head.predict(backbone.predict(x));
            double s = 0;
            for (std::size_t i = 0; i < 5; ++i) {
                s += it2_loss(build_interval(y.row(i), pairs[i]), ys.row(i));
            }
            return s / 5.0;
        };
        backbone.forward(x);
        const Matrix& y = head.forward(backbone.predict(x));
        Matrix upstream(5, 3);
        for (std::size_t i = 0; i < 5; ++i) {
            const auto g = it2_loss_grad(build_interval(y.row(i), pairs[i]), ys.row(i));
            for (std::size_t j = 0; j < 3; ++j) upstream(i, j) = g[j] / 5.0;
        }
        const MembershipHead::Grads hg = head.backward(upstream);
        const NetGradients bg = backbone.backward(hg.h);
        auto params = backbone.param_views();
        {
            auto hp = head.param_views();
            params.insert(params.end(), hp.begin(), hp.end());
        }
        std::vector<std::vector<double>> analytic;
        for (auto gv : DenseNet::grad_views(bg)) analytic.emplace_back(gv.begin(), gv.end());
        analytic.emplace_back(hg.w.data.begin(), hg.w.data.end());
        analytic.emplace_back(hg.alpha.begin(), hg.alpha.end());
        report_line("pipeline loss (it2)", grad_check(params, loss, analytic, 1e-5, tolerance));
    }

    std::printf(failures ? "gradcheck: %d check(s) FAILED\n" : "gradcheck: all checks passed\n",
                failures);
    return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interval type-2 fuzzy multi-label classification harness"};
    app.require_subcommand(1);

    CommonFlags train_flags, eval_flags, sweep_flags, ablate_flags, stats_flags;
    std::string bundle_path, lambdas_csv;
    double gc_tol = 1e-4;

    add_common(app.add_subcommand("train", "run the full training pipeline"), train_flags);
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved model bundle");
    add_common(eval_cmd, eval_flags);
    eval_cmd->add_option("--bundle", bundle_path, "model bundle file")->required();
    auto* sweep_cmd = app.add_subcommand("sweep", "lambda sweep over trained models");
    add_common(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--lambdas", lambdas_csv, "comma-separated lambda grid");
    add_common(app.add_subcommand("ablate", "paired it2 vs type1 comparison"), ablate_flags);
    add_common(app.add_subcommand("stats", "dataset statistics"), stats_flags);
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gc_cmd->add_option("--tolerance", gc_tol, "relative-error threshold");

    CLI11_PARSE(app, argc, argv);

    try {
        std::printf("kernels: %s\n",
                    kernels::backend_name(kernels::active_backend()).c_str());
        if (app.got_subcommand("train")) return cmd_train(train_flags);
        if (app.got_subcommand("eval")) return cmd_eval(eval_flags, bundle_path);
        if (app.got_subcommand("sweep")) return cmd_sweep(sweep_flags, lambdas_csv);
        if (app.got_subcommand("ablate")) return cmd_ablate(ablate_flags);
        if (app.got_subcommand("stats")) return cmd_stats(stats_flags);
        if (app.got_subcommand("gradcheck")) return cmd_gradcheck(gc_tol);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
