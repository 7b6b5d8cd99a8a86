#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vistra/data.hpp"
#include "vistra/evaluation.hpp"
#include "vistra/model.hpp"

namespace vistra {

struct PredictionRecord {
    std::string path;
    std::string predicted_label;
    double confidence = 0.0;  // max of the probability vector
    double variance = 0.0;    // population variance across labels
    std::vector<double> probabilities;
    Image thumbnail;  // populated only when requested
};

struct FolderPredictions {
    std::vector<PredictionRecord> records;
    std::vector<std::string> skipped;  // undecodable files, with reasons
};

// Population variance (1/K)*sum (p_i - 1/K)^2 of a probability vector; a
// uniform vector gives exactly 0. Entries must be nonnegative and sum to 1
// within 1e-3.
double prediction_variance(const std::vector<double>& probs);

// Predicts every decodable image directly inside `folder` (resized and
// preprocessed exactly as in training, no augmentation). sort_by: "none"
// keeps lexicographic path order; "variance"/"confidence" sort ascending so
// the most confusing/least certain images come first.
FolderPredictions model_predict(BuiltModel& model, const std::string& folder,
                                const std::string& sort_by, bool keep_thumbnails = false);

// CSV with header: path,predicted_label,confidence,variance
void write_predictions_csv(const FolderPredictions& predictions, std::ostream& out);

struct FeatureSplit {
    int layer_index = -1;
    std::string layer_name;
    int width = 0;
    std::map<std::string, Tensor> features;           // split -> {n_split, width}
    std::map<std::string, std::vector<int>> labels;   // split -> aligned label ids
};

// Activations of one layer (selected by exactly one of index/name) for every
// split, rows in the split's stable file-index order, augmentation off.
// 4-D feature maps are flattened row-major.
FeatureSplit model_feature_extract(BuiltModel& model, const DatasetBundle& data,
                                   std::optional<int> layer_index,
                                   const std::optional<std::string>& layer_name);

// Self-contained model file: architecture descriptor plus all weights.
void save_model(BuiltModel& model, const std::string& path);
BuiltModel load_model(const std::string& path);

using RunIdGenerator = std::function<std::string()>;

// Writes results.json, manifest.json, the best-weights file, plot copies,
// and optionally the model into a run directory under base_path: a randomly
// named one per call when additive, the fixed "latest" (overwritten)
// otherwise. Returns the run directory.
std::string export_all(const ResultsBundle& results, const std::string& base_path,
                       bool export_model, bool additive, std::uint64_t seed,
                       BuiltModel* model = nullptr, const RunIdGenerator& id_gen = {});

}  // namespace vistra
