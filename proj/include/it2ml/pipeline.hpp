#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "it2ml/autoencoder.hpp"
#include "it2ml/cardinality_regressor.hpp"
#include "it2ml/dataset.hpp"
#include "it2ml/dense_net.hpp"
#include "it2ml/membership_head.hpp"
#include "it2ml/metrics.hpp"
#include "it2ml/it2.hpp"

namespace it2ml {

enum class Mode { it2, type1 };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& s);

struct DatasetConfig {
    std::string name = "dataset";
    std::string format = "arff";  // arff | csv | cache | synthetic
    // two-file style (published train/test split)
    std::string train_path, test_path;
    // single-file style
    std::string path;
    // csv pair style
    std::string features_path, labels_path;
    std::size_t label_count = 0;  // trailing-label convention for ARFF
    std::vector<std::string> label_names;
    // synthetic generator knobs
    std::size_t synth_n = 200, synth_d = 10, synth_labels = 3;
    std::uint64_t synth_seed = 7;
    std::optional<ExpectedStats> expect;
};

struct HyperParams {
    std::vector<std::size_t> init_hidden{512, 512};
    std::vector<std::size_t> ae_hidden{256};
    std::size_t bottleneck = 64;
    double eta = 1.0;
    double lambda = 0.1;
    double lr = 1e-3;
    std::size_t batch = 128;
    std::size_t epochs = 100;
    std::size_t patience = 10;
    std::size_t ae_epochs = 40;
    // staged lr decay: x0.1 at anneal_epoch, x0.01 at 1.5x anneal_epoch (0 = off)
    std::size_t anneal_epoch = 0;
    // decoupled weight decay on backbone weight matrices (shrink per step is
    // lr * weight_decay); keeps the membership scores from saturating the
    // clamp, which preserves ranking information at defuzzification time
    double weight_decay = 0.0;
    double ridge = 1e-6;
    bool normalize_features = true;
    // type-1 ablation threshold: 1/[m_hat] by default, 1/L when set
    bool type1_threshold_by_label_count = false;
    std::string optimizer = "adam";  // adam | sgd
};

struct ExperimentConfig {
    DatasetConfig data;
    SplitSpec split;                    // used for single-file formats
    double val_fraction = 0.1;          // carved from train for two-file style
    std::uint64_t val_carve_seed = 13;  // fixed: seeds re-randomize init only
    HyperParams hyper;
    Mode mode = Mode::it2;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::size_t threads = 0;  // 0 = hardware concurrency
    std::string out_dir;
};

ExperimentConfig config_from_json(const std::string& json_text);
ExperimentConfig config_from_json_file(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Synthetic linearly-separable multi-label data (each instance gets at least
// one label). Used by the harness smoke paths and tests.
Dataset make_synthetic(std::size_t n, std::size_t d, std::size_t labels, std::uint64_t seed);

struct DataBundle {
    Dataset train, val, test;
    Scaler scaler;
};

// Load + split + normalize according to the config. The validation carve-out
// and random splits use fixed split seeds, independent of run seeds.
DataBundle prepare_data(const ExperimentConfig& cfg);

struct TrainedModel {
    std::uint64_t seed = 0;
    Mode mode = Mode::it2;
    double lambda = 0.1;
    bool threshold_by_label_count = false;
    Scaler scaler;
    Autoencoder ae;
    CardinalityRegressor reg;
    DenseNet backbone;  // zero layers when the head sits directly on features
    MembershipHead head;

    std::size_t label_count() const { return head.labels(); }

    // All take already-normalized features.
    Matrix memberships(const Matrix& x) const;
    std::vector<double> mhats(const Matrix& x) const;
    LabelMatrix predict(const Matrix& x, double lambda_override) const;
};

TrainedModel train_one_seed(const ExperimentConfig& cfg, const DataBundle& data,
                            std::uint64_t seed);

MetricsReport evaluate_model(const TrainedModel& model, const Dataset& test_normalized,
                             double lambda, std::uint64_t seed);

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    MetricsReport report;
};

struct Aggregate {
    double mean = 0;
    double stddev = 0;

    bool operator==(const Aggregate&) const = default;
};

struct RunRecord {
    std::uint64_t config_hash = 0;
    std::string dataset;
    std::string mode;
    double lambda = 0;
    std::vector<SeedOutcome> outcomes;
    Aggregate ha, example_f1, micro_f1, macro_f1;
    double wall_seconds = 0;

    std::vector<MetricsReport> reports() const;
};

RunRecord aggregate_outcomes(std::vector<SeedOutcome> outcomes, const ExperimentConfig& cfg,
                             double wall_seconds, double lambda);

// Three-stage pipeline over every configured seed: train the autoencoder,
// fit the cardinality regressor, train the fuzziness initializer against the
// interval loss, then defuzzify and score the test split. A failing seed is
// recorded and does not abort the others.
RunRecord run_pipeline(const ExperimentConfig& cfg);

struct SweepResult {
    std::vector<double> lambdas;
    std::vector<RunRecord> records;  // parallel to lambdas
    // delta-to-best per metric, on seed means
    std::map<double, double> delta_ha, delta_example_f1, delta_micro_f1, delta_macro_f1;
};

// Trains once per seed, then re-runs only defuzzification + metrics per
// lambda (lambda enters after training).
SweepResult lambda_sweep(const ExperimentConfig& cfg, const std::vector<double>& lambdas);

struct AblationResult {
    RunRecord it2;
    RunRecord type1;
    double d_ha = 0, d_example_f1 = 0, d_micro_f1 = 0, d_macro_f1 = 0;  // it2 - type1 means
};

AblationResult ablation(const ExperimentConfig& cfg);

enum class ReportFormat { text_table, json_lines };

void emit_report(const RunRecord& record, ReportFormat format, const std::string& path);
RunRecord parse_report_jsonl(const std::string& path);

void save_bundle(const TrainedModel& model, std::uint64_t cfg_hash, const std::string& path);
TrainedModel load_bundle(const std::string& path, std::uint64_t* cfg_hash_out = nullptr);

}  // namespace it2ml
