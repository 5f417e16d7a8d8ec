#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "it2ml/matrix.hpp"

namespace it2ml {

struct ConfusionCounts {
    std::vector<std::int64_t> tp, fp, fn, tn;  // per label
    std::int64_t n_instances = 0;

    std::size_t label_count() const { return tp.size(); }
    std::int64_t tp_total() const;
    std::int64_t fp_total() const;
    std::int64_t fn_total() const;
};

ConfusionCounts count_confusion(const LabelMatrix& preds, const LabelMatrix& trues);

// Mean over instances of the per-instance label-position agreement.
double hamming_accuracy(const LabelMatrix& preds, const LabelMatrix& trues);

// Mean over instances of 2|pred & true| / (|pred| + |true|). An instance with
// both vectors empty counts as 1.
double example_f1(const LabelMatrix& preds, const LabelMatrix& trues);

// Pooled-counts F1: 2 tp / (2 tp + fp + fn). All-zero counts define 1.
// paper_printed_form switches the numerator to the literal printed variant
// (tp instead of 2 tp), kept for auditing; it cannot reach 1.
double micro_f1(const ConfusionCounts& counts, bool paper_printed_form = false);

// Per-label F1 averaged over labels. Labels with tp=fp=fn=0 contribute
// vacuous_value (1 by default).
double macro_f1(const ConfusionCounts& counts, double vacuous_value = 1.0);

// For a lambda -> metric map, returns lambda -> (value - best), so every
// entry is <= 0 and the best lambda maps to 0.
std::map<double, double> delta_m(const std::map<double, double>& values);

struct MetricsReport {
    double ha = 0;
    double example_f1 = 0;
    double micro_f1 = 0;
    double macro_f1 = 0;
    std::int64_t n_instances = 0;
    std::uint64_t seed = 0;

    bool operator==(const MetricsReport&) const = default;
};

MetricsReport evaluate(const LabelMatrix& preds, const LabelMatrix& trues, std::uint64_t seed);

}  // namespace it2ml
