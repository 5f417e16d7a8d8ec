#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "it2ml/matrix.hpp"

namespace it2ml {

struct Provenance {
    std::vector<std::string> paths;
    std::uint64_t content_hash = 0;  // FNV-1a over the source bytes
};

struct Dataset {
    std::string name;
    Matrix X;       // n x d
    LabelMatrix Y;  // n x L, strictly binary
    std::vector<std::string> feature_names;
    std::vector<std::string> label_names;
    Provenance provenance;

    std::size_t size() const { return X.rows; }
    std::size_t feature_dim() const { return X.cols; }
    std::size_t label_count() const { return Y.cols; }
};

// How to locate label attributes in an ARFF file: by explicit names, or by
// the MULAN convention that the last `trailing_count` attributes are labels.
struct LabelSpec {
    std::size_t trailing_count = 0;
    std::vector<std::string> names;
};

// MULAN-style ARFF, dense or sparse ("{idx value, ...}") instance syntax.
// Label values must be exactly 0 or 1. Any malformed construct raises
// ParseError with the offending line number.
Dataset parse_arff(const std::string& path, const LabelSpec& labels);

// Plain numeric CSV pair: one file of features, one of binary labels, equal
// row counts.
Dataset parse_csv(const std::string& features_path, const std::string& labels_path,
                  const std::string& name = "");

struct SplitSpec {
    enum class Mode { original, random };
    Mode mode = Mode::random;
    double train_fraction = 0.8;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;
    // original mode: index files, one 0-based instance index per line
    std::string train_index_path, val_index_path, test_index_path;
};

struct Split {
    Dataset train, val, test;
};

// Disjoint exhaustive partition; deterministic for a given spec.
Split split(const Dataset& ds, const SplitSpec& spec);

// Row subset in the given index order.
Dataset subset(const Dataset& ds, std::span<const std::size_t> indices, const std::string& name);

// Per-feature z-scoring fitted on a training split. Zero-variance features
// map to 0.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;  // 0 marks a constant feature

    void apply(Matrix& x) const;
};

Scaler fit_scaler(const Matrix& train_x);
// Fits on train and applies to train plus every dataset in others.
Scaler normalize(Dataset& train, const std::vector<Dataset*>& others);

struct DatasetStats {
    std::size_t n_samples = 0;
    std::size_t n_labels = 0;
    std::size_t feature_dim = 0;
    double mean_labels_per_sample = 0;
    double mean_samples_per_label = 0;
};

DatasetStats stats(const Dataset& ds);

// Expected statistics for validating a parsed dataset against its published
// table entry (configurable because distributions disagree for some sets).
struct ExpectedStats {
    std::optional<std::size_t> n_samples;
    std::optional<std::size_t> n_labels;
    std::optional<std::size_t> feature_dim;
    std::optional<double> mean_labels_per_sample;
    double tolerance = 0.01;
};

// Throws InputError describing the first mismatch, if any.
void validate_stats(const Dataset& ds, const ExpectedStats& expect);

// Flat binary cache with shape headers, row-major 64-bit floats and an
// FNV-1a checksum; reload is bit-identical.
void save_cache(const Dataset& ds, const std::string& path);
Dataset load_cache(const std::string& path);

std::uint64_t fnv1a_bytes(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace it2ml
