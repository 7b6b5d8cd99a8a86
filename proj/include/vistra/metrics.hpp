#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vistra/data.hpp"
#include "vistra/tensor.hpp"

namespace vistra {

// Row = true class, column = predicted class.
using ConfusionMatrix = std::vector<std::vector<std::int64_t>>;

// Entry (i,j) = count of samples with true class i predicted as j.
ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred, int k);

// Model outputs -> class ids. Binary scalars decide 1 iff p >= 0.5; multiclass
// rows pick the lowest index among tied maxima.
std::vector<int> argmax_labels(const Tensor& prob_rows, const TaskSpec& task);

// Encoded label tensors ({n} binary, {n,K} one-hot) -> class ids.
std::vector<int> label_ids(const Tensor& labels, const TaskSpec& task);

// A named, task-normalized metric over classification outputs. Binary tasks
// use the standard binary form with class 1 positive at threshold 0.5;
// multiclass tasks macro-average over classes. Undefined ratios count as 0.
class MetricComputer {
public:
    MetricComputer(std::string name, std::function<double(const ConfusionMatrix&)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}

    const std::string& name() const { return name_; }
    double from_confusion(const ConfusionMatrix& m) const { return fn_(m); }
    double evaluate(const Tensor& prob_rows, const Tensor& labels, const TaskSpec& task) const;

private:
    std::string name_;
    std::function<double(const ConfusionMatrix&)> fn_;
};

using MetricFactory = std::function<MetricComputer(const TaskSpec&)>;

// Throws on unknown names; accuracy, recall, and precision come registered.
MetricComputer normalize_metric(const std::string& name, const TaskSpec& task);

// Extension point for additional confusion-based metrics.
void register_metric(const std::string& name, MetricFactory factory);
std::vector<std::string> registered_metrics();  // sorted

}  // namespace vistra
