#pragma once

// Small end-to-end training fixture shared by the trainer/evaluation/
// inference tests: TinyNet on a synthetic 2- or 3-class dataset with a tiny
// dense head, frozen backbone, augmentation off.

#include <memory>
#include <string>
#include <vector>

#include "support/synthetic_dataset.hpp"
#include "vistra/backbone.hpp"
#include "vistra/config.hpp"
#include "vistra/data.hpp"
#include "vistra/model.hpp"
#include "vistra/trainer.hpp"

namespace testsupport {

struct TrainFixture {
    std::string root;
    vistra::SplitLayout layout;
    vistra::TaskSpec task;
    vistra::BuiltModel model;
    std::unique_ptr<vistra::DatasetBundle> data;
    vistra::ExperimentConfig config;

    explicit TrainFixture(int classes = 2, int per_class = 4, int epochs = 2,
                          bool external = false) {
        root = unique_temp_dir("train");
        DatasetSpec spec;
        spec.root = root;
        spec.classes = classes;
        spec.train_per_class = per_class;
        spec.val_per_class = 2;
        spec.test_per_class = 2;
        spec.external_test = external;
        spec.external_per_class = 2;
        spec.size = 32;
        make_synthetic_dataset(spec);

        layout = vistra::discover_splits(
            root + "/train_val_data", root + "/test_data",
            external ? std::optional<std::string>(root + "/external_test_data")
                     : std::nullopt);
        task = vistra::infer_task(layout);

        const vistra::BackboneHandle bb = vistra::get_backbone("TinyNet", "none");
        vistra::HeadSpec head;
        head.dense_layers = {8};
        model = vistra::assemble(bb, task, head, 42);
        vistra::apply_freeze_policy(model, {}, std::nullopt);

        config = vistra::apply_defaults(nlohmann::json::object());
        config.paths.train_val_data = root + "/train_val_data";
        config.paths.test_data_folder = root + "/test_data";
        if (external) config.paths.external_test_data_folder = root + "/external_test_data";
        config.model.transfer_arch = "TinyNet";
        config.model.dense_layers = {8};
        config.training.epochs = epochs;
        config.training.batch_size = 4;
        config.training.learning_rate = 1e-3;
        config.training.augmentation = "none";

        data = std::make_unique<vistra::DatasetBundle>(vistra::build_bundle(
            layout, task, model.image_size, model.backbone.preprocess,
            vistra::resolve_augmentation("none", {}), 4, 42));
    }
    ~TrainFixture() { remove_tree(root); }

    vistra::CheckpointStore store(bool save_files = false) {
        return vistra::CheckpointStore(root + "/weights", config.saving.save_best_weights,
                                       save_files);
    }
};

// Scripted validation evaluator: epoch -> fixed val metrics.
inline vistra::ValEvaluator scripted(std::vector<double> losses) {
    return [losses](vistra::BuiltModel&, int epoch) {
        vistra::MetricRecord r;
        r["loss"] = losses[static_cast<std::size_t>(epoch)];
        r["accuracy"] = 1.0 - losses[static_cast<std::size_t>(epoch)];
        return r;
    };
}

}  // namespace testsupport
