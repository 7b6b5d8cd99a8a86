#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vistra/metrics.hpp"
#include "vistra/trainer.hpp"

namespace vistra {

// Inference-mode predictions over a split in its stable index order.
Tensor predict_split(BuiltModel& model, const DatasetBundle& data, const std::string& split);

struct SplitEvaluation {
    MetricRecord metrics;  // "loss" plus each requested metric
    ConfusionMatrix confusion;
};

SplitEvaluation evaluate_split(BuiltModel& model, const DatasetBundle& data,
                               const std::string& split,
                               const std::vector<std::string>& metric_names);

struct EvaluationReport {
    // split ("val"/"test"/"external_test") -> values
    std::map<std::string, MetricRecord> metrics;
    std::map<std::string, ConfusionMatrix> confusions;
    std::map<std::string, int> class_index;
};

// Evaluates val, test, and (when present) external_test. auto_mode reloads
// the best checkpointed weights first; without a checkpoint that is an error.
EvaluationReport auto_evaluate(BuiltModel& model, const CheckpointStore& store,
                               const DatasetBundle& data, bool auto_mode,
                               const std::vector<std::string>& metric_names);

// Training curves, one PNG per metric (train + validation series, warm phase
// separated), plus optional extrema ("minmax.png") and per-split confusion
// heat maps. Returns the written paths.
std::vector<std::string> render_curves(const TrainingHistory& history, const std::string& out_dir,
                                       bool min_max_plot);
std::vector<std::string> render_confusions(const EvaluationReport& report,
                                           const std::string& out_dir);

struct ResultsBundle {
    nlohmann::json config_snapshot;
    TrainingHistory history;  // warm + main, in order
    EvaluationReport report;
    std::string monitor;
    int best_epoch = -1;
    double best_value = 0.0;
    MetricRecord best_epoch_record;
    nn::WeightMap best_weights;         // in-memory copy for export
    std::string best_weights_filename;  // canonical file name for the copy
    // artifact kind ("plots" | "weights") -> existing file paths
    std::map<std::string, std::vector<std::string>> artifacts;
};

// Assembles the bundle and checks that every artifact path exists.
ResultsBundle build_results(const ExperimentConfig& config, const TrainingHistory& history,
                            const EvaluationReport& report, const CheckpointStore& store,
                            const std::vector<std::string>& plot_paths);

nlohmann::json results_to_json(const ResultsBundle& bundle);
// Inverse of results_to_json for everything but the weight map.
ResultsBundle results_from_json(const nlohmann::json& doc);

}  // namespace vistra
