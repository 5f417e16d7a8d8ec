#include "it2ml/metrics.hpp"

#include <numeric>

#include "it2ml/errors.hpp"

namespace it2ml {

namespace {
void check_shapes(const LabelMatrix& preds, const LabelMatrix& trues) {
    if (preds.rows != trues.rows || preds.cols != trues.cols)
        throw ShapeError("prediction/groundtruth shape mismatch");
}
}  // namespace

std::int64_t ConfusionCounts::tp_total() const {
    return std::accumulate(tp.begin(), tp.end(), std::int64_t{0});
}
std::int64_t ConfusionCounts::fp_total() const {
    return std::accumulate(fp.begin(), fp.end(), std::int64_t{0});
}
std::int64_t ConfusionCounts::fn_total() const {
    return std::accumulate(fn.begin(), fn.end(), std::int64_t{0});
}

ConfusionCounts count_confusion(const LabelMatrix& preds, const LabelMatrix& trues) {
    check_shapes(preds, trues);
    ConfusionCounts c;
    c.tp.assign(preds.cols, 0);
    c.fp.assign(preds.cols, 0);
    c.fn.assign(preds.cols, 0);
    c.tn.assign(preds.cols, 0);
    c.n_instances = static_cast<std::int64_t>(preds.rows);
    for (std::size_t i = 0; i < preds.rows; ++i) {
        for (std::size_t j = 0; j < preds.cols; ++j) {
            const bool p = preds(i, j) != 0, t = trues(i, j) != 0;
            if (p && t)
                ++c.tp[j];
            else if (p && !t)
                ++c.fp[j];
            else if (!p && t)
                ++c.fn[j];
            else
                ++c.tn[j];
        }
    }
    return c;
}

double hamming_accuracy(const LabelMatrix& preds, const LabelMatrix& trues) {
    check_shapes(preds, trues);
    if (preds.rows == 0) return 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.rows; ++i) {
        std::size_t agree = 0;
        for (std::size_t j = 0; j < preds.cols; ++j) agree += preds(i, j) == trues(i, j);
        acc += static_cast<double>(agree) / static_cast<double>(preds.cols);
    }
    return acc / static_cast<double>(preds.rows);
}

double example_f1(const LabelMatrix& preds, const LabelMatrix& trues) {
    check_shapes(preds, trues);
    if (preds.rows == 0) return 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.rows; ++i) {
        std::int64_t inter = 0, total = 0;
        for (std::size_t j = 0; j < preds.cols; ++j) {
            inter += preds(i, j) & trues(i, j);
            total += preds(i, j) + trues(i, j);
        }
        acc += total == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(total);
    }
    return acc / static_cast<double>(preds.rows);
}

double micro_f1(const ConfusionCounts& counts, bool paper_printed_form) {
    const std::int64_t tp = counts.tp_total(), fp = counts.fp_total(), fn = counts.fn_total();
    const std::int64_t denom = 2 * tp + fp + fn;
    if (denom == 0) return 1.0;
    const std::int64_t num = paper_printed_form ? tp : 2 * tp;
    return static_cast<double>(num) / static_cast<double>(denom);
}

double macro_f1(const ConfusionCounts& counts, double vacuous_value) {
    if (counts.label_count() == 0) throw InputError("macro_f1: no labels");
    double acc = 0.0;
    for (std::size_t j = 0; j < counts.label_count(); ++j) {
        const std::int64_t denom = 2 * counts.tp[j] + counts.fp[j] + counts.fn[j];
        acc += denom == 0 ? vacuous_value
                          : 2.0 * static_cast<double>(counts.tp[j]) / static_cast<double>(denom);
    }
    return acc / static_cast<double>(counts.label_count());
}

std::map<double, double> delta_m(const std::map<double, double>& values) {
    if (values.empty()) throw InputError("delta_m: empty map");
    double best = values.begin()->second;
    for (const auto& [k, v] : values) best = std::max(best, v);
    std::map<double, double> out;
    for (const auto& [k, v] : values) out[k] = v - best;
    return out;
}

MetricsReport evaluate(const LabelMatrix& preds, const LabelMatrix& trues, std::uint64_t seed) {
    MetricsReport r;
    const ConfusionCounts c = count_confusion(preds, trues);
    r.ha = hamming_accuracy(preds, trues);
    r.example_f1 = example_f1(preds, trues);
    r.micro_f1 = micro_f1(c);
    r.macro_f1 = macro_f1(c);
    r.n_instances = c.n_instances;
    r.seed = seed;
    return r;
}

}  // namespace it2ml
