#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vistra/error.hpp"
#include "vistra/experiment.hpp"

namespace fs = std::filesystem;

namespace {

vistra::ExperimentConfig config_from_flags(const std::string& config_path,
                                           const std::vector<std::string>& overrides) {
    nlohmann::json raw = config_path.empty() ? nlohmann::json::object()
                                             : vistra::read_config_document(config_path);
    for (const auto& assignment : overrides) vistra::apply_override(raw, assignment);
    return vistra::apply_defaults(raw);
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            std::uint64_t seed, const std::string& out_dir, bool export_model) {
    vistra::Experiment experiment(config_from_flags(config_path, overrides), seed, out_dir);
    experiment.run();
    std::cout << experiment.export_all(export_model, /*additive=*/true) << std::endl;
    return 0;
}

int cmd_predict(const std::string& run_dir, const std::string& folder,
                const std::string& sort_by, const std::string& out_path) {
    vistra::LoadedRun run = vistra::load_run(run_dir);
    const auto predictions = vistra::model_predict(run.model, folder, sort_by);
    if (out_path.empty()) {
        vistra::write_predictions_csv(predictions, std::cout);
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw vistra::ExportError("cannot write CSV to '" + out_path + "'");
        vistra::write_predictions_csv(predictions, out);
        std::cout << out_path << std::endl;
    }
    return 0;
}

int cmd_extract(const std::string& run_dir, std::optional<int> layer_index,
                const std::optional<std::string>& layer_name, const std::string& out_dir) {
    vistra::LoadedRun run = vistra::load_run(run_dir);

    const vistra::SplitLayout layout = vistra::discover_splits(
        run.config.paths.train_val_data, run.config.paths.test_data_folder,
        run.config.paths.external_test_data_folder);
    vistra::DatasetBundle bundle = vistra::build_bundle(
        layout, run.model.task, run.model.image_size, run.model.backbone.preprocess,
        vistra::resolve_augmentation("none", {}), run.config.training.batch_size, /*seed=*/0);

    const auto features = vistra::model_feature_extract(run.model, bundle, layer_index,
                                                        layer_name);
    fs::create_directories(out_dir);
    for (const auto& [split, matrix] : features.features) {
        const std::string path =
            (fs::path(out_dir) / ("features_" + split + ".csv")).string();
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw vistra::ExportError("cannot write features to '" + path + "'");
        out << "label";
        for (int j = 0; j < features.width; ++j) out << ",f" << j;
        out << "\n";
        out.precision(9);
        const auto& labels = features.labels.at(split);
        for (int i = 0; i < matrix.dim(0); ++i) {
            out << labels[static_cast<std::size_t>(i)];
            for (int j = 0; j < features.width; ++j) out << ',' << matrix[matrix.idx2(i, j)];
            out << "\n";
        }
        std::cout << path << "\n";
    }
    return 0;
}

int cmd_export(const std::string& run_dir, const std::string& out_base, bool overwrite,
               bool export_model, std::uint64_t seed) {
    vistra::LoadedRun run = vistra::load_run(run_dir);
    const bool has_model = fs::is_regular_file(fs::path(run_dir) / "model.bin");
    const std::string exported =
        vistra::export_all(run.bundle, out_base, export_model && has_model, !overwrite, seed,
                           &run.model);
    std::cout << exported << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Directory-driven transfer-learning: train, predict, extract, export"};
    app.require_subcommand(1);

    // run
    auto* run_cmd = app.add_subcommand("run", "Train, evaluate, and export an experiment");
    std::string run_config, run_out = ".";
    std::vector<std::string> run_sets;
    std::uint64_t run_seed = 42;
    bool run_no_model = false;
    run_cmd->add_option("--config", run_config, "Config file (JSON, six sections)")
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--set", run_sets, "Override, e.g. training.epochs=5 (repeatable)");
    run_cmd->add_option("--seed", run_seed, "Experiment seed");
    run_cmd->add_option("--out", run_out, "Output directory for weights/plots/exports");
    run_cmd->add_flag("--no-model", run_no_model, "Skip the model file in the export");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Predict a folder of images as CSV");
    std::string predict_run_dir, predict_folder, predict_sort = "none", predict_out;
    predict_cmd->add_option("--run-dir", predict_run_dir, "Exported run directory")
        ->required();
    predict_cmd->add_option("--folder", predict_folder, "Folder of images to predict")
        ->required();
    predict_cmd->add_option("--sort-by", predict_sort, "none | confidence | variance")
        ->check(CLI::IsMember({"none", "confidence", "variance"}));
    predict_cmd->add_option("--out", predict_out, "CSV output path (default: stdout)");

    // extract
    auto* extract_cmd = app.add_subcommand("extract", "Write per-split feature matrices");
    std::string extract_run_dir, extract_out = "features";
    std::string extract_layer_name;
    int extract_layer_index = -1;
    auto* name_opt = extract_cmd->add_option("--layer-name", extract_layer_name,
                                             "Layer to read activations from");
    auto* index_opt = extract_cmd->add_option("--layer-index", extract_layer_index,
                                              "Layer index to read activations from");
    name_opt->excludes(index_opt);
    extract_cmd->add_option("--run-dir", extract_run_dir, "Exported run directory")->required();
    extract_cmd->add_option("--out", extract_out, "Directory for the CSV files");

    // export
    auto* export_cmd = app.add_subcommand("export", "Re-export a run directory");
    std::string export_run_dir, export_out = "exports";
    bool export_overwrite = false, export_no_model = false;
    std::uint64_t export_seed = 42;
    export_cmd->add_option("--run-dir", export_run_dir, "Run directory to re-export")
        ->required();
    export_cmd->add_option("--out", export_out, "Export base directory");
    export_cmd->add_option("--seed", export_seed, "Seed for the run-id stream");
    export_cmd->add_flag("--overwrite", export_overwrite,
                         "Write to the fixed 'latest' directory instead of a new one");
    export_cmd->add_flag("--no-model", export_no_model, "Skip the model file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (run_cmd->parsed())
            return cmd_run(run_config, run_sets, run_seed, run_out, !run_no_model);
        if (predict_cmd->parsed())
            return cmd_predict(predict_run_dir, predict_folder, predict_sort, predict_out);
        if (extract_cmd->parsed()) {
            if (name_opt->count() == 0 && index_opt->count() == 0) {
                std::cerr << "extract requires exactly one of --layer-name/--layer-index\n\n"
                          << extract_cmd->help() << std::flush;
                return 2;
            }
            return cmd_extract(extract_run_dir,
                               index_opt->count() ? std::optional<int>(extract_layer_index)
                                                  : std::nullopt,
                               name_opt->count() ? std::optional<std::string>(extract_layer_name)
                                                 : std::nullopt,
                               extract_out);
        }
        if (export_cmd->parsed())
            return cmd_export(export_run_dir, export_out, export_overwrite, !export_no_model,
                              export_seed);
    } catch (const vistra::Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 2;  // unreachable: require_subcommand(1)
}
