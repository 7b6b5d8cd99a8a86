#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "vistra/config.hpp"
#include "vistra/evaluation.hpp"
#include "vistra/inference.hpp"
#include "vistra/trainer.hpp"

namespace vistra {

// One self-driving experiment: from a validated config it discovers the
// dataset, assembles the model, trains (optionally warm-pretraining the
// head), evaluates with best-weight reload, renders plots, and assembles the
// results bundle. Prediction, feature extraction, and export run against the
// trained state.
class Experiment {
public:
    Experiment(ExperimentConfig config, std::uint64_t seed, std::string output_dir = ".");

    // Idempotent: the first call trains, later calls return the same bundle.
    const ResultsBundle& run();

    bool has_run() const { return results_ != nullptr; }
    const ExperimentConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }
    const std::string& output_dir() const { return output_dir_; }

    // Test seam, forwarded to the trainer; set before run().
    void set_val_evaluator(ValEvaluator evaluator) { val_override_ = std::move(evaluator); }

    BuiltModel& model();
    DatasetBundle& data();
    CheckpointStore& checkpoint_store();

    FolderPredictions model_predict(const std::string& folder, const std::string& sort_by,
                                    bool keep_thumbnails = false);
    FeatureSplit model_feature_extract(std::optional<int> layer_index,
                                       const std::optional<std::string>& layer_name);
    // Returns the run directory written under base_path (defaults to
    // <output_dir>/exports).
    std::string export_all(bool export_model = true, bool additive = true,
                           const std::string& base_path = "",
                           const RunIdGenerator& id_gen = {});

private:
    void prepare();  // dataset + model, shared by run() and the accessors

    ExperimentConfig config_;
    std::uint64_t seed_;
    std::string output_dir_;
    ValEvaluator val_override_;

    std::unique_ptr<DatasetBundle> data_;
    std::unique_ptr<BuiltModel> model_;
    std::unique_ptr<CheckpointStore> store_;
    std::unique_ptr<ResultsBundle> results_;
};

// An exported run directory reloaded for prediction/extraction/re-export.
struct LoadedRun {
    std::string run_dir;
    ExperimentConfig config;  // reconstructed from the embedded snapshot
    ResultsBundle bundle;     // artifact paths rewritten to absolute
    BuiltModel model;         // best weights restored
};

// Reads results.json plus the weight or model file from an export directory.
LoadedRun load_run(const std::string& run_dir);

}  // namespace vistra
