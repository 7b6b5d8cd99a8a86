#include "vistra/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "vistra/error.hpp"

namespace fs = std::filesystem;

namespace vistra {

namespace {

std::string resolve_under(const std::string& base, const std::string& path) {
    const fs::path p(path);
    return p.is_absolute() ? path : (fs::path(base) / p).string();
}

}  // namespace

Experiment::Experiment(ExperimentConfig config, std::uint64_t seed, std::string output_dir)
    : config_(std::move(config)), seed_(seed), output_dir_(std::move(output_dir)) {
    const auto violations = validate(config_);
    if (!violations.empty()) {
        std::string message = "invalid configuration:";
        for (const auto& v : violations) message += "\n  - " + v;
        throw ConfigError(message);
    }
}

void Experiment::prepare() {
    if (model_) return;

    const SplitLayout layout =
        discover_splits(config_.paths.train_val_data, config_.paths.test_data_folder,
                        config_.paths.external_test_data_folder);
    const TaskSpec task = infer_task(layout);

    const BackboneHandle backbone =
        get_backbone(config_.model.transfer_arch, config_.model.pre_trained);
    const auto image_size = config_.model.image_size.value_or(backbone.input_size);

    HeadSpec head;
    head.dense_layers = config_.model.dense_layers;
    head.dense_activations = config_.model.dense_activations;
    head.initializer = config_.model.initializer;
    head.batch_norm = config_.model.batch_norm;
    head.regularization = config_.model.regularization;
    head.l2_strength = config_.model.l2_strength;
    head.dropout_rate = config_.model.dropout_rate;
    head.bridge = config_.model.before_dense;

    model_ = std::make_unique<BuiltModel>(
        assemble(backbone, task, head, seed_, image_size));
    apply_freeze_policy(*model_, config_.model.unfreeze_block, config_.model.freeze_up_to);

    const AugmentationPlan plan = resolve_augmentation(config_.training.augmentation,
                                                       config_.training.custom_augmentation);
    data_ = std::make_unique<DatasetBundle>(
        build_bundle(layout, task, image_size, backbone.preprocess, plan,
                     config_.training.batch_size, seed_));

    store_ = std::make_unique<CheckpointStore>(
        resolve_under(output_dir_, config_.saving.save_weights_folder),
        config_.saving.save_best_weights, config_.saving.save_weights);
}

const ResultsBundle& Experiment::run() {
    if (results_) return *results_;
    prepare();

    if (config_.misc.show_summary) std::cout << summary(*model_) << std::flush;

    TrainingHistory history;
    if (config_.training.warm_pretrain_dense && config_.training.warm_pretrain_epochs > 0)
        history.append(warm_pretrain(*model_, *data_, config_,
                                     config_.training.warm_pretrain_epochs, seed_,
                                     config_.training.callback, val_override_));
    history.append(train(*model_, *data_, config_, config_.training.callback, *store_, seed_,
                         val_override_));

    const EvaluationReport report = auto_evaluate(*model_, *store_, *data_,
                                                  config_.evaluation.auto_mode,
                                                  config_.training.metrics);

    std::vector<std::string> plot_paths;
    const std::string plot_dir = (fs::path(output_dir_) / "plots").string();
    if (config_.misc.plot_curves) {
        auto curves = render_curves(history, plot_dir, config_.misc.show_min_max_plot);
        plot_paths.insert(plot_paths.end(), curves.begin(), curves.end());
    }
    if (config_.misc.plot_conf) {
        auto heat = render_confusions(report, plot_dir);
        plot_paths.insert(plot_paths.end(), heat.begin(), heat.end());
    }

    results_ = std::make_unique<ResultsBundle>(
        build_results(config_, history, report, *store_, plot_paths));
    return *results_;
}

BuiltModel& Experiment::model() {
    prepare();
    return *model_;
}

DatasetBundle& Experiment::data() {
    prepare();
    return *data_;
}

CheckpointStore& Experiment::checkpoint_store() {
    prepare();
    return *store_;
}

FolderPredictions Experiment::model_predict(const std::string& folder,
                                            const std::string& sort_by, bool keep_thumbnails) {
    run();
    return vistra::model_predict(*model_, folder, sort_by, keep_thumbnails);
}

FeatureSplit Experiment::model_feature_extract(std::optional<int> layer_index,
                                               const std::optional<std::string>& layer_name) {
    run();
    return vistra::model_feature_extract(*model_, *data_, layer_index, layer_name);
}

std::string Experiment::export_all(bool export_model, bool additive,
                                   const std::string& base_path, const RunIdGenerator& id_gen) {
    run();
    const std::string base =
        base_path.empty() ? (fs::path(output_dir_) / "exports").string() : base_path;
    return vistra::export_all(*results_, base, export_model, additive, seed_, model_.get(),
                              id_gen);
}

LoadedRun load_run(const std::string& run_dir) {
    const fs::path dir(run_dir);
    const fs::path results_path = dir / "results.json";
    if (!fs::is_regular_file(results_path))
        throw ExportError("'" + run_dir + "' is not a run directory (no results.json)");

    std::ifstream in(results_path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ExportError("cannot parse '" + results_path.string() + "': " + e.what());
    }

    ResultsBundle bundle = results_from_json(doc);
    LoadedRun loaded{run_dir, apply_defaults(bundle.config_snapshot), std::move(bundle),
                     BuiltModel{}};

    // Exported artifact paths are relative to the run directory.
    for (auto& [kind, paths] : loaded.bundle.artifacts)
        for (auto& path : paths)
            if (!fs::path(path).is_absolute()) path = (dir / path).string();

    const fs::path model_file = dir / "model.bin";
    const fs::path weights_file = dir / loaded.bundle.best_weights_filename;
    if (fs::is_regular_file(model_file)) {
        loaded.model = load_model(model_file.string());
    } else if (fs::is_regular_file(weights_file)) {
        const TaskSpec task = task_from_class_index(loaded.bundle.report.class_index);
        const auto& mc = loaded.config.model;
        const BackboneHandle backbone = get_backbone(mc.transfer_arch, "none");
        HeadSpec head;
        head.dense_layers = mc.dense_layers;
        head.dense_activations = mc.dense_activations;
        head.initializer = mc.initializer;
        head.batch_norm = mc.batch_norm;
        head.regularization = mc.regularization;
        head.l2_strength = mc.l2_strength;
        head.dropout_rate = mc.dropout_rate;
        head.bridge = mc.before_dense;
        loaded.model = assemble(backbone, task, head, /*seed=*/0,
                                mc.image_size.value_or(backbone.input_size));
        loaded.model.net.load_weights(weights_file.string());
    } else {
        throw ExportError("run directory '" + run_dir + "' holds neither model.bin nor " +
                          loaded.bundle.best_weights_filename);
    }
    loaded.bundle.best_weights = loaded.model.net.weight_snapshot();
    return loaded;
}

}  // namespace vistra
