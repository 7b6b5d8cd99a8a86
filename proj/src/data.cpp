#include "vistra/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "vistra/error.hpp"
#include "vistra/image_io.hpp"
#include "vistra/rng.hpp"

namespace fs = std::filesystem;

namespace vistra {

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Class subdirectories of a split directory, sorted.
std::vector<std::string> class_dirs(const fs::path& split_dir) {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(split_dir))
        if (entry.is_directory()) out.push_back(entry.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> image_files(const fs::path& class_dir) {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(class_dir))
        if (entry.is_regular_file() && has_image_extension(entry.path().filename().string()))
            out.push_back(entry.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += ", ";
        out += p;
    }
    return out;
}

// Counts one split directory and enforces its classes against the train set.
// `allow_missing` lets test splits drop classes; novel classes always fail.
std::map<std::string, std::int64_t> count_split(const fs::path& dir, const std::string& split,
                                                const std::vector<std::string>& train_classes,
                                                bool allow_missing) {
    const auto classes = class_dirs(dir);
    std::vector<std::string> novel;
    for (const auto& c : classes)
        if (std::find(train_classes.begin(), train_classes.end(), c) == train_classes.end())
            novel.push_back(c);
    if (!novel.empty())
        throw DataError("split '" + split + "' at " + dir.string() +
                        " introduces classes not present in train: " + join(novel));
    if (!allow_missing) {
        std::vector<std::string> missing;
        for (const auto& c : train_classes)
            if (std::find(classes.begin(), classes.end(), c) == classes.end())
                missing.push_back(c);
        if (!missing.empty())
            throw DataError("split '" + split + "' at " + dir.string() +
                            " is missing classes present in train: " + join(missing));
    }
    std::map<std::string, std::int64_t> counts;
    for (const auto& c : classes) {
        const auto files = image_files(dir / c);
        if (files.empty())
            throw DataError("class folder '" + (dir / c).string() + "' in split '" + split +
                            "' contains no image files");
        counts[c] = static_cast<std::int64_t>(files.size());
    }
    return counts;
}

}  // namespace

bool has_image_extension(const std::string& filename) {
    const auto dot = filename.find_last_of('.');
    if (dot == std::string::npos) return false;
    const std::string ext = to_lower(filename.substr(dot + 1));
    return ext == "png" || ext == "jpg" || ext == "jpeg" || ext == "bmp";
}

SplitLayout discover_splits(const std::string& train_val_root, const std::string& test_root,
                            const std::optional<std::string>& external_root) {
    const fs::path root(train_val_root);
    if (!fs::is_directory(root))
        throw DataError("train_val_data directory '" + train_val_root + "' does not exist");

    const fs::path train_dir = root / "train";
    if (!fs::is_directory(train_dir))
        throw DataError("expected a 'train' subdirectory under '" + train_val_root +
                        "' (layout: train_val_data/{train,val|validation}/<class>/<image>)");
    fs::path val_dir = root / "val";
    if (!fs::is_directory(val_dir)) {
        val_dir = root / "validation";
        if (!fs::is_directory(val_dir))
            throw DataError("expected a 'val' or 'validation' subdirectory under '" +
                            train_val_root +
                            "' (layout: train_val_data/{train,val|validation}/<class>/<image>)");
    }
    if (!fs::is_directory(test_root))
        throw DataError("test_data_folder '" + test_root + "' does not exist");

    SplitLayout layout;
    layout.train_dir = train_dir.string();
    layout.val_dir = val_dir.string();
    layout.test_dir = test_root;

    layout.class_names = class_dirs(train_dir);
    if (layout.class_names.empty())
        throw DataError("no class subdirectories found under '" + train_dir.string() + "'");
    if (layout.class_names.size() < 2)
        throw DataError("classification needs at least 2 class folders, found only '" +
                        layout.class_names.front() + "' under '" + train_dir.string() + "'");

    const auto val_classes = class_dirs(val_dir);
    if (val_classes != layout.class_names) {
        std::vector<std::string> only_train, only_val;
        for (const auto& c : layout.class_names)
            if (std::find(val_classes.begin(), val_classes.end(), c) == val_classes.end())
                only_train.push_back(c);
        for (const auto& c : val_classes)
            if (std::find(layout.class_names.begin(), layout.class_names.end(), c) ==
                layout.class_names.end())
                only_val.push_back(c);
        std::ostringstream msg;
        msg << "train and val class sets differ";
        if (!only_train.empty()) msg << "; only in train: " << join(only_train);
        if (!only_val.empty()) msg << "; only in val: " << join(only_val);
        throw DataError(msg.str());
    }

    std::map<std::string, std::int64_t> train_counts;
    for (const auto& c : layout.class_names) {
        const auto files = image_files(train_dir / c);
        if (files.empty())
            throw DataError("class folder '" + (train_dir / c).string() +
                            "' in split 'train' contains no image files");
        train_counts[c] = static_cast<std::int64_t>(files.size());
    }
    layout.per_split_counts["train"] = train_counts;
    layout.per_split_counts["val"] = count_split(val_dir, "val", layout.class_names, false);
    layout.per_split_counts["test"] = count_split(test_root, "test", layout.class_names, true);
    if (external_root) {
        if (!fs::is_directory(*external_root))
            throw DataError("external_test_data_folder '" + *external_root + "' does not exist");
        layout.external_test_dir = *external_root;
        layout.per_split_counts["external_test"] =
            count_split(*external_root, "external_test", layout.class_names, true);
    }
    return layout;
}

namespace {

TaskSpec task_from_count(int k, std::map<std::string, int> class_index) {
    if (k < 2)
        throw DataError("classification needs at least 2 classes, found " + std::to_string(k));
    TaskSpec task;
    task.num_classes = k;
    task.class_index = std::move(class_index);
    if (k == 2) {
        task.mode = "binary";
        task.output_units = 1;
        task.output_activation = "sigmoid";
        task.loss_name = "binary_crossentropy";
    } else {
        task.mode = "multiclass";
        task.output_units = k;
        task.output_activation = "softmax";
        task.loss_name = "categorical_crossentropy";
    }
    return task;
}

}  // namespace

TaskSpec infer_task(const SplitLayout& layout) {
    std::map<std::string, int> class_index;
    for (std::size_t i = 0; i < layout.class_names.size(); ++i)
        class_index[layout.class_names[i]] = static_cast<int>(i);
    return task_from_count(static_cast<int>(layout.class_names.size()), std::move(class_index));
}

TaskSpec task_from_class_index(const std::map<std::string, int>& class_index) {
    const int k = static_cast<int>(class_index.size());
    std::vector<bool> seen(static_cast<std::size_t>(std::max(k, 0)), false);
    for (const auto& [label, id] : class_index) {
        if (id < 0 || id >= k || seen[static_cast<std::size_t>(id)])
            throw DataError("class_index is not a bijection onto 0.." + std::to_string(k - 1));
        seen[static_cast<std::size_t>(id)] = true;
    }
    return task_from_count(k, class_index);
}

std::map<std::string, double> compute_class_weights(
    const std::map<std::string, std::int64_t>& counts) {
    if (counts.empty()) throw DataError("cannot compute class weights from empty counts");
    std::int64_t total = 0;
    for (const auto& [label, n] : counts) {
        if (n <= 0)
            throw DataError("class '" + label + "' has count " + std::to_string(n) +
                            "; class weights require every count >= 1");
        total += n;
    }
    const double k = static_cast<double>(counts.size());
    std::map<std::string, double> weights;
    for (const auto& [label, n] : counts)
        weights[label] = static_cast<double>(total) / (k * static_cast<double>(n));
    return weights;
}

BasicAugmentationParams basic_augmentation_params() {
    return {};
}

AugmentationPlan resolve_augmentation(const std::string& mode,
                                      const std::vector<AugmentationHook>& custom_hooks) {
    AugmentationPlan plan;
    plan.mode = mode;
    if (mode == "none") return plan;
    if (mode == "basic") {
        const auto p = basic_augmentation_params();
        plan.steps.push_back({"horizontal_flip", [p](Image& img, std::mt19937& rng) {
                                  std::uniform_real_distribution<double> u(0.0, 1.0);
                                  if (u(rng) < p.horizontal_flip_prob) flip_horizontal(img);
                              }});
        plan.steps.push_back({"affine_jitter", [p](Image& img, std::mt19937& rng) {
                                  std::uniform_real_distribution<double> rot(-p.rotation_degrees,
                                                                             p.rotation_degrees);
                                  std::uniform_real_distribution<double> shift(-p.shift_fraction,
                                                                               p.shift_fraction);
                                  std::uniform_real_distribution<double> zoom(
                                      1.0 - p.zoom_fraction, 1.0 + p.zoom_fraction);
                                  warp_affine(img, rot(rng), shift(rng), shift(rng), zoom(rng));
                              }});
        return plan;
    }
    if (mode == "custom") {
        if (custom_hooks.empty())
            throw ConfigError("augmentation mode 'custom' requires at least one custom hook");
        plan.steps = custom_hooks;
        return plan;
    }
    throw ConfigError("unknown augmentation mode '" + mode + "' (known: none, basic, custom)");
}

// ---------------------------------------------------------------------------
// DatasetBundle

namespace {

std::vector<IndexedFile> build_index(const std::string& split_dir, const TaskSpec& task) {
    std::vector<IndexedFile> out;
    for (const auto& entry : fs::directory_iterator(split_dir)) {
        if (!entry.is_directory()) continue;
        const std::string label = entry.path().filename().string();
        auto it = task.class_index.find(label);
        if (it == task.class_index.end()) continue;  // novel classes rejected at discovery
        for (const auto& file : fs::directory_iterator(entry.path()))
            if (file.is_regular_file() && has_image_extension(file.path().filename().string()))
                out.push_back({file.path().string(), it->second});
    }
    std::sort(out.begin(), out.end(),
              [](const IndexedFile& a, const IndexedFile& b) { return a.path < b.path; });
    return out;
}

}  // namespace

DatasetBundle::DatasetBundle(const SplitLayout& layout, const TaskSpec& task,
                             std::pair<int, int> image_size, PreprocessFn preprocess,
                             AugmentationPlan plan, int batch_size, std::uint64_t seed)
    : task_(task),
      image_size_(image_size),
      preprocess_(std::move(preprocess)),
      plan_(std::move(plan)),
      batch_size_(batch_size),
      seed_(seed) {
    if (image_size_.first <= 0 || image_size_.second <= 0)
        throw DataError("image size must be positive, got (" + std::to_string(image_size_.first) +
                        ", " + std::to_string(image_size_.second) + ")");
    if (batch_size_ <= 0)
        throw DataError("batch size must be positive, got " + std::to_string(batch_size_));

    index_["train"] = build_index(layout.train_dir, task_);
    index_["val"] = build_index(layout.val_dir, task_);
    index_["test"] = build_index(layout.test_dir, task_);
    if (layout.external_test_dir)
        index_["external_test"] = build_index(*layout.external_test_dir, task_);
    for (const auto& [split, files] : index_)
        if (files.empty()) throw DataError("split '" + split + "' contains no images");
}

std::vector<std::string> DatasetBundle::split_names() const {
    std::vector<std::string> out = {"train", "val", "test"};
    if (index_.count("external_test")) out.push_back("external_test");
    return out;
}

bool DatasetBundle::has_split(const std::string& split) const {
    return index_.count(split) > 0;
}

const std::vector<IndexedFile>& DatasetBundle::split_index(const std::string& split) const {
    auto it = index_.find(split);
    if (it == index_.end()) throw DataError("unknown split '" + split + "'");
    return it->second;
}

std::vector<std::vector<int>> DatasetBundle::batch_positions(const std::string& split,
                                                             std::mt19937* shuffle_rng) const {
    const auto& files = split_index(split);
    std::vector<int> order(files.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    if (shuffle_rng) std::shuffle(order.begin(), order.end(), *shuffle_rng);
    std::vector<std::vector<int>> batches;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size_)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size_));
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

Batch DatasetBundle::load_batch(const std::string& split, const std::vector<int>& positions,
                                bool augment, std::mt19937* augment_rng) const {
    const auto& files = split_index(split);
    const int n = static_cast<int>(positions.size());
    const int h = image_size_.first, w = image_size_.second;
    Batch batch;
    batch.images = Tensor({n, h, w, 3});
    std::vector<int> label_ids(positions.size());
    for (int i = 0; i < n; ++i) {
        const int pos = positions[static_cast<std::size_t>(i)];
        if (pos < 0 || pos >= static_cast<int>(files.size()))
            throw DataError("batch position " + std::to_string(pos) + " outside split '" +
                            split + "' with " + std::to_string(files.size()) + " files");
        const auto& file = files[static_cast<std::size_t>(pos)];
        Image img = resize_image(decode_image(file.path), h, w);
        if (augment && !plan_.identity()) {
            if (!augment_rng) throw DataError("augmentation requested without an rng");
            for (const auto& step : plan_.steps) step.fn(img, *augment_rng);
        }
        std::copy(img.rgb.begin(), img.rgb.end(),
                  batch.images.data.begin() + batch.images.idx4(i, 0, 0, 0));
        label_ids[static_cast<std::size_t>(i)] = file.label;
    }
    if (preprocess_) preprocess_(batch.images);
    batch.labels = encode_labels(label_ids);
    return batch;
}

Tensor DatasetBundle::encode_labels(const std::vector<int>& label_ids) const {
    const int n = static_cast<int>(label_ids.size());
    for (int id : label_ids)
        if (id < 0 || id >= task_.num_classes)
            throw DataError("label id " + std::to_string(id) + " outside the class range 0.." +
                            std::to_string(task_.num_classes - 1));
    if (task_.mode == "binary") {
        Tensor labels({n});
        for (int i = 0; i < n; ++i) labels[i] = static_cast<float>(label_ids[static_cast<std::size_t>(i)]);
        return labels;
    }
    Tensor labels({n, task_.num_classes});
    for (int i = 0; i < n; ++i) labels[labels.idx2(i, label_ids[static_cast<std::size_t>(i)])] = 1.0f;
    return labels;
}

DatasetBundle build_bundle(const SplitLayout& layout, const TaskSpec& task,
                           std::pair<int, int> image_size, PreprocessFn preprocess,
                           AugmentationPlan plan, int batch_size, std::uint64_t seed) {
    return DatasetBundle(layout, task, image_size, std::move(preprocess), std::move(plan),
                         batch_size, seed);
}

}  // namespace vistra
