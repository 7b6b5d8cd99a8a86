#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vistra/tensor.hpp"

namespace vistra {

// Discovered directory-based dataset.
//
// Expected layout (bit-exact):
//   train_val_data/{train,val|validation}/<class>/<image>
//   test_data_folder/<class>/<image>
//   external test folder with the same per-class layout (optional)
struct SplitLayout {
    std::string train_dir;
    std::string val_dir;
    std::string test_dir;
    std::optional<std::string> external_test_dir;
    std::vector<std::string> class_names;  // sorted
    // split name ("train"/"val"/"test"/"external_test") -> class -> image count
    std::map<std::string, std::map<std::string, std::int64_t>> per_split_counts;
};

struct TaskSpec {
    int num_classes = 0;
    std::string mode;               // "binary" | "multiclass"
    int output_units = 0;
    std::string output_activation;  // "sigmoid" | "softmax"
    std::string loss_name;          // "binary_crossentropy" | "categorical_crossentropy"
    std::map<std::string, int> class_index;  // label -> contiguous id, sorted order
};

// A single image as float RGB, HWC, values in [0,255].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> rgb;  // height*width*3

    float& at(int y, int x, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int y, int x, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

using ImageTransform = std::function<void(Image&, std::mt19937&)>;

struct AugmentationHook {
    std::string name;
    ImageTransform fn;
};

// Per-image augmentation steps, applied after resize and before the backbone
// preprocessing transform. Only the train split ever sees these.
struct AugmentationPlan {
    std::string mode;  // "none" | "basic" | "custom"
    std::vector<AugmentationHook> steps;

    bool identity() const { return steps.empty(); }
};

// Batch preprocessing transform supplied by the backbone (NHWC batch in place).
using PreprocessFn = std::function<void(Tensor&)>;

struct IndexedFile {
    std::string path;
    int label = 0;
};

struct Batch {
    Tensor images;  // {n, h, w, 3}
    Tensor labels;  // {n} binary, {n, K} one-hot otherwise
};

// Batched, resized, preprocessed, optionally augmented views over all splits,
// with a stable per-split file index.
class DatasetBundle {
public:
    DatasetBundle(const SplitLayout& layout, const TaskSpec& task, std::pair<int, int> image_size,
                  PreprocessFn preprocess, AugmentationPlan plan, int batch_size,
                  std::uint64_t seed);

    const TaskSpec& task() const { return task_; }
    std::pair<int, int> image_size() const { return image_size_; }
    int batch_size() const { return batch_size_; }
    std::uint64_t seed() const { return seed_; }
    const AugmentationPlan& plan() const { return plan_; }

    std::vector<std::string> split_names() const;  // train, val, test[, external_test]
    bool has_split(const std::string& split) const;
    const std::vector<IndexedFile>& split_index(const std::string& split) const;

    // Batch boundaries over the stable index (ceiling division); shuffled
    // within the split when a shuffle rng is given.
    std::vector<std::vector<int>> batch_positions(const std::string& split,
                                                  std::mt19937* shuffle_rng = nullptr) const;

    // Decodes, resizes, optionally augments, and preprocesses the requested
    // rows of a split. Augmentation requires an rng and is intended for the
    // train split only.
    Batch load_batch(const std::string& split, const std::vector<int>& positions, bool augment,
                     std::mt19937* augment_rng = nullptr) const;

    Tensor encode_labels(const std::vector<int>& label_ids) const;

private:
    TaskSpec task_;
    std::pair<int, int> image_size_;
    PreprocessFn preprocess_;
    AugmentationPlan plan_;
    int batch_size_;
    std::uint64_t seed_;
    std::map<std::string, std::vector<IndexedFile>> index_;
};

// --- operations -------------------------------------------------------------

SplitLayout discover_splits(const std::string& train_val_root, const std::string& test_root,
                            const std::optional<std::string>& external_root = std::nullopt);

TaskSpec infer_task(const SplitLayout& layout);

// Rebuilds the task from a persisted class_index (e.g. a results document).
TaskSpec task_from_class_index(const std::map<std::string, int>& class_index);

// Balanced weighting w_c = N / (K * n_c); satisfies sum_c n_c * w_c == N.
std::map<std::string, double> compute_class_weights(
    const std::map<std::string, std::int64_t>& counts);

AugmentationPlan resolve_augmentation(const std::string& mode,
                                      const std::vector<AugmentationHook>& custom_hooks);

DatasetBundle build_bundle(const SplitLayout& layout, const TaskSpec& task,
                           std::pair<int, int> image_size, PreprocessFn preprocess,
                           AugmentationPlan plan, int batch_size, std::uint64_t seed);

// The "basic" plan's fixed parameter set.
struct BasicAugmentationParams {
    double horizontal_flip_prob = 0.5;
    double rotation_degrees = 15.0;
    double shift_fraction = 0.10;
    double zoom_fraction = 0.10;
};
BasicAugmentationParams basic_augmentation_params();

bool has_image_extension(const std::string& filename);

}  // namespace vistra
