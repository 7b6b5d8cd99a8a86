#include "vistra/metrics.hpp"

#include <algorithm>
#include <map>

#include "vistra/error.hpp"

namespace vistra {

namespace {

double safe_ratio(double num, double den) {
    return den == 0.0 ? 0.0 : num / den;
}

std::int64_t total_count(const ConfusionMatrix& m) {
    std::int64_t total = 0;
    for (const auto& row : m)
        for (auto v : row) total += v;
    return total;
}

double accuracy_from(const ConfusionMatrix& m) {
    std::int64_t diag = 0;
    for (std::size_t i = 0; i < m.size(); ++i) diag += m[i][i];
    return safe_ratio(static_cast<double>(diag), static_cast<double>(total_count(m)));
}

// Per-class recall (row-normalized diagonal), macro-averaged; the binary form
// TP/(TP+FN) with class 1 positive falls out of the same counts.
double recall_from(const ConfusionMatrix& m, bool binary) {
    auto class_recall = [&](std::size_t c) {
        std::int64_t row = 0;
        for (auto v : m[c]) row += v;
        return safe_ratio(static_cast<double>(m[c][c]), static_cast<double>(row));
    };
    if (binary) return class_recall(1);
    double sum = 0.0;
    for (std::size_t c = 0; c < m.size(); ++c) sum += class_recall(c);
    return sum / static_cast<double>(m.size());
}

double precision_from(const ConfusionMatrix& m, bool binary) {
    auto class_precision = [&](std::size_t c) {
        std::int64_t col = 0;
        for (const auto& row : m) col += row[c];
        return safe_ratio(static_cast<double>(m[c][c]), static_cast<double>(col));
    };
    if (binary) return class_precision(1);
    double sum = 0.0;
    for (std::size_t c = 0; c < m.size(); ++c) sum += class_precision(c);
    return sum / static_cast<double>(m.size());
}

std::map<std::string, MetricFactory>& registry() {
    static std::map<std::string, MetricFactory> reg = {
        {"accuracy",
         [](const TaskSpec&) { return MetricComputer("accuracy", accuracy_from); }},
        {"recall",
         [](const TaskSpec& task) {
             const bool binary = task.mode == "binary";
             return MetricComputer(
                 "recall", [binary](const ConfusionMatrix& m) { return recall_from(m, binary); });
         }},
        {"precision", [](const TaskSpec& task) {
             const bool binary = task.mode == "binary";
             return MetricComputer("precision", [binary](const ConfusionMatrix& m) {
                 return precision_from(m, binary);
             });
         }}};
    return reg;
}

}  // namespace

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred, int k) {
    if (y_true.size() != y_pred.size())
        throw EvalError("confusion: y_true has " + std::to_string(y_true.size()) +
                        " entries but y_pred has " + std::to_string(y_pred.size()));
    if (k <= 0) throw EvalError("confusion: class count must be positive");
    ConfusionMatrix m(static_cast<std::size_t>(k),
                      std::vector<std::int64_t>(static_cast<std::size_t>(k), 0));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i], p = y_pred[i];
        if (t < 0 || t >= k || p < 0 || p >= k)
            throw EvalError("confusion: class id out of range at row " + std::to_string(i) +
                            " (true " + std::to_string(t) + ", pred " + std::to_string(p) +
                            ", k " + std::to_string(k) + ")");
        ++m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }
    return m;
}

std::vector<int> argmax_labels(const Tensor& prob_rows, const TaskSpec& task) {
    std::vector<int> ids;
    if (task.mode == "binary") {
        if (prob_rows.rank() == 2 && prob_rows.dim(1) != 1)
            throw EvalError("binary task expects scalar rows, got width " +
                            std::to_string(prob_rows.dim(1)));
        if (prob_rows.rank() > 2) throw EvalError("probability tensor must be rank 1 or 2");
        const int n = prob_rows.dim(0);
        ids.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) ids.push_back(prob_rows[i] >= 0.5f ? 1 : 0);
        return ids;
    }
    if (prob_rows.rank() != 2 || prob_rows.dim(1) != task.num_classes)
        throw EvalError("multiclass task expects rows of width " +
                        std::to_string(task.num_classes) + ", got shape " + prob_rows.shape_str());
    const int n = prob_rows.dim(0), k = prob_rows.dim(1);
    ids.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int j = 1; j < k; ++j)
            if (prob_rows[prob_rows.idx2(i, j)] > prob_rows[prob_rows.idx2(i, best)]) best = j;
        ids.push_back(best);
    }
    return ids;
}

std::vector<int> label_ids(const Tensor& labels, const TaskSpec& task) {
    std::vector<int> ids;
    if (task.mode == "binary") {
        const int n = labels.dim(0);
        ids.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) ids.push_back(labels[i] >= 0.5f ? 1 : 0);
        return ids;
    }
    if (labels.rank() != 2 || labels.dim(1) != task.num_classes)
        throw EvalError("one-hot labels must have width " + std::to_string(task.num_classes) +
                        ", got shape " + labels.shape_str());
    const int n = labels.dim(0), k = labels.dim(1);
    ids.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int j = 1; j < k; ++j)
            if (labels[labels.idx2(i, j)] > labels[labels.idx2(i, best)]) best = j;
        ids.push_back(best);
    }
    return ids;
}

double MetricComputer::evaluate(const Tensor& prob_rows, const Tensor& labels,
                                const TaskSpec& task) const {
    return from_confusion(
        confusion(label_ids(labels, task), argmax_labels(prob_rows, task), task.num_classes));
}

MetricComputer normalize_metric(const std::string& name, const TaskSpec& task) {
    auto& reg = registry();
    auto it = reg.find(name);
    if (it == reg.end()) {
        std::string known;
        for (const auto& [k, v] : reg) {
            if (!known.empty()) known += ", ";
            known += k;
        }
        throw EvalError("unknown metric '" + name + "' (registered: " + known + ")");
    }
    return it->second(task);
}

void register_metric(const std::string& name, MetricFactory factory) {
    registry()[name] = std::move(factory);
}

std::vector<std::string> registered_metrics() {
    std::vector<std::string> names;
    for (const auto& [name, factory] : registry()) names.push_back(name);
    return names;
}

}  // namespace vistra
