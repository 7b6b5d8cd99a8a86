#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vistra/data.hpp"

namespace vistra {

using MetricRecord = std::map<std::string, double>;

// Post-epoch observer; receives the merged train+val metric record. Must not
// mutate the model.
struct CallbackHook {
    std::string name;
    std::function<void(int epoch, const MetricRecord&)> fn;
};

struct PathsSection {
    std::string train_val_data;
    std::string test_data_folder;
    std::optional<std::string> external_test_data_folder;
};

struct ModelSection {
    std::optional<std::pair<int, int>> image_size;  // resolved from backbone when absent
    std::string transfer_arch = "VGG16";
    std::string pre_trained = "imagenet";
    std::string before_dense = "Flatten";
    std::vector<int> dense_layers;
    std::string dense_activations = "elu";
    std::string initializer = "he_normal";
    bool batch_norm = false;
    std::string regularization = "None";
    double l2_strength = 0.0;
    double dropout_rate = 0.0;
    std::vector<std::string> unfreeze_block;
    std::optional<std::string> freeze_up_to;
};

struct TrainingSection {
    int epochs = 10;
    int batch_size = 32;
    double learning_rate = 2e-5;
    std::string optimizer_name = "Adam";
    std::map<std::string, double> add_optimizer_params;
    bool class_weights = true;
    std::vector<std::string> metrics = {"accuracy"};
    std::string augmentation = "basic";
    std::vector<AugmentationHook> custom_augmentation;  // library API only
    std::vector<CallbackHook> callback;                 // library API only
    double early_stop = 0.0;                            // fraction of epochs; 0 disables
    bool warm_pretrain_dense = false;
    int warm_pretrain_epochs = 0;
};

struct EvaluationSection {
    bool auto_mode = true;
};

struct SavingSection {
    bool save_weights = true;
    std::string save_weights_folder = "weights";
    std::string save_best_weights = "val_loss";
};

struct MiscSection {
    bool show_summary = true;
    bool plot_curves = true;
    bool show_min_max_plot = true;
    bool plot_conf = true;
};

struct ExperimentConfig {
    PathsSection paths;
    ModelSection model;
    TrainingSection training;
    EvaluationSection evaluation;
    SavingSection saving;
    MiscSection misc;
};

// Fills every unspecified key with its documented default. Unknown sections
// or keys raise a ConfigError naming the offender. Hook-valued keys
// ("callback", "custom_augmentation") cannot be expressed as data and are
// rejected; the snapshot metadata keys (callback_count/names, ...) are
// accepted and ignored so snapshots re-load cleanly.
ExperimentConfig apply_defaults(const nlohmann::json& partial);

// Collects every violation (empty means valid). Never throws.
std::vector<std::string> validate(const ExperimentConfig& config);

// Data-only image of the config; hooks appear as counts plus names.
// apply_defaults(snapshot(c)) == c on all serializable fields.
nlohmann::json snapshot(const ExperimentConfig& config);

// Reads a JSON config file into its raw document form (comments allowed).
nlohmann::json read_config_document(const std::string& path);

// Reads a JSON config file (six-section layout) and applies defaults.
ExperimentConfig load_config_file(const std::string& path);

// Applies one dotted-path override ("training.epochs=5") onto a raw config
// document; the value parses as JSON when possible, else as a string.
void apply_override(nlohmann::json& raw, const std::string& assignment);

}  // namespace vistra
