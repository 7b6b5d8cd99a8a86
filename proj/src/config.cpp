#include "vistra/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "vistra/backbone.hpp"
#include "vistra/error.hpp"
#include "vistra/metrics.hpp"

using nlohmann::json;

namespace vistra {

namespace {

[[noreturn]] void bad_key(const std::string& section, const std::string& key,
                          const std::string& why) {
    throw ConfigError("config key '" + key + "' in section '" + section + "': " + why);
}

template <typename T>
void assign(const json& value, const std::string& section, const std::string& key, T& out) {
    try {
        out = value.get<T>();
    } catch (const json::exception& e) {
        bad_key(section, key, std::string("invalid value (") + e.what() + ")");
    }
}

void assign_optional_string(const json& value, const std::string& section, const std::string& key,
                            std::optional<std::string>& out) {
    if (value.is_null()) {
        out.reset();
        return;
    }
    std::string s;
    assign(value, section, key, s);
    out = s;
}

void assign_image_size(const json& value, std::optional<std::pair<int, int>>& out) {
    if (value.is_null()) {
        out.reset();
        return;
    }
    if (!value.is_array() || value.size() != 2 || !value[0].is_number_integer() ||
        !value[1].is_number_integer())
        bad_key("model", "image_size", "expected [height, width] with two integers");
    out = std::make_pair(value[0].get<int>(), value[1].get<int>());
}

// Keys that snapshot() emits in place of hook lists; accepted and ignored on
// the way back in so a snapshot re-loads as a config.
const std::set<std::string> kHookMetadataKeys = {"callback_count", "callback_names",
                                                 "custom_augmentation_count",
                                                 "custom_augmentation_names"};

void parse_paths(const json& j, PathsSection& out) {
    for (const auto& [key, value] : j.items()) {
        if (key == "train_val_data")
            assign(value, "paths", key, out.train_val_data);
        else if (key == "test_data_folder")
            assign(value, "paths", key, out.test_data_folder);
        else if (key == "external_test_data_folder")
            assign_optional_string(value, "paths", key, out.external_test_data_folder);
        else
            throw ConfigError("unknown config key '" + key + "' in section 'paths'");
    }
}

void parse_model(const json& j, ModelSection& out) {
    for (const auto& [key, value] : j.items()) {
        if (key == "image_size")
            assign_image_size(value, out.image_size);
        else if (key == "transfer_arch")
            assign(value, "model", key, out.transfer_arch);
        else if (key == "pre_trained")
            assign(value, "model", key, out.pre_trained);
        else if (key == "before_dense")
            assign(value, "model", key, out.before_dense);
        else if (key == "dense_layers")
            assign(value, "model", key, out.dense_layers);
        else if (key == "dense_activations")
            assign(value, "model", key, out.dense_activations);
        else if (key == "initializer")
            assign(value, "model", key, out.initializer);
        else if (key == "batch_norm")
            assign(value, "model", key, out.batch_norm);
        else if (key == "regularization")
            assign(value, "model", key, out.regularization);
        else if (key == "l2_strength")
            assign(value, "model", key, out.l2_strength);
        else if (key == "dropout_rate")
            assign(value, "model", key, out.dropout_rate);
        else if (key == "unfreeze_block")
            assign(value, "model", key, out.unfreeze_block);
        else if (key == "freeze_up_to")
            assign_optional_string(value, "model", key, out.freeze_up_to);
        else
            throw ConfigError("unknown config key '" + key + "' in section 'model'");
    }
}

void parse_training(const json& j, TrainingSection& out) {
    for (const auto& [key, value] : j.items()) {
        if (key == "epochs")
            assign(value, "training", key, out.epochs);
        else if (key == "batch_size")
            assign(value, "training", key, out.batch_size);
        else if (key == "learning_rate")
            assign(value, "training", key, out.learning_rate);
        else if (key == "optimizer_name")
            assign(value, "training", key, out.optimizer_name);
        else if (key == "add_optimizer_params")
            assign(value, "training", key, out.add_optimizer_params);
        else if (key == "class_weights")
            assign(value, "training", key, out.class_weights);
        else if (key == "metrics")
            assign(value, "training", key, out.metrics);
        else if (key == "augmentation")
            assign(value, "training", key, out.augmentation);
        else if (key == "early_stop")
            assign(value, "training", key, out.early_stop);
        else if (key == "warm_pretrain_dense")
            assign(value, "training", key, out.warm_pretrain_dense);
        else if (key == "warm_pretrain_epochs")
            assign(value, "training", key, out.warm_pretrain_epochs);
        else if (key == "callback" || key == "custom_augmentation")
            bad_key("training", key,
                    "holds hooks and is only settable through the library API, not config data");
        else if (kHookMetadataKeys.count(key))
            continue;  // snapshot metadata, informational only
        else
            throw ConfigError("unknown config key '" + key + "' in section 'training'");
    }
}

void parse_evaluation(const json& j, EvaluationSection& out) {
    for (const auto& [key, value] : j.items()) {
        if (key == "auto_mode")
            assign(value, "evaluation", key, out.auto_mode);
        else
            throw ConfigError("unknown config key '" + key + "' in section 'evaluation'");
    }
}

void parse_saving(const json& j, SavingSection& out) {
    for (const auto& [key, value] : j.items()) {
        if (key == "save_weights")
            assign(value, "saving", key, out.save_weights);
        else if (key == "save_weights_folder")
            assign(value, "saving", key, out.save_weights_folder);
        else if (key == "save_best_weights")
            assign(value, "saving", key, out.save_best_weights);
        else
            throw ConfigError("unknown config key '" + key + "' in section 'saving'");
    }
}

void parse_misc(const json& j, MiscSection& out) {
    for (const auto& [key, value] : j.items()) {
        if (key == "show_summary")
            assign(value, "misc", key, out.show_summary);
        else if (key == "plot_curves")
            assign(value, "misc", key, out.plot_curves);
        else if (key == "show_min_max_plot")
            assign(value, "misc", key, out.show_min_max_plot);
        else if (key == "plot_conf")
            assign(value, "misc", key, out.plot_conf);
        else
            throw ConfigError("unknown config key '" + key + "' in section 'misc'");
    }
}

}  // namespace

ExperimentConfig apply_defaults(const json& partial) {
    if (!partial.is_object())
        throw ConfigError("config document must be an object with the six known sections");
    ExperimentConfig config;
    for (const auto& [section, body] : partial.items()) {
        if (!body.is_object())
            throw ConfigError("config section '" + section + "' must be an object");
        if (section == "paths")
            parse_paths(body, config.paths);
        else if (section == "model")
            parse_model(body, config.model);
        else if (section == "training")
            parse_training(body, config.training);
        else if (section == "evaluation")
            parse_evaluation(body, config.evaluation);
        else if (section == "saving")
            parse_saving(body, config.saving);
        else if (section == "misc")
            parse_misc(body, config.misc);
        else
            throw ConfigError("unknown config section '" + section +
                              "' (known: paths, model, training, evaluation, saving, misc)");
    }
    return config;
}

std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> report;
    auto flag = [&report](const std::string& msg) { report.push_back(msg); };

    if (c.paths.train_val_data.empty()) flag("paths.train_val_data must be set");
    if (c.paths.test_data_folder.empty()) flag("paths.test_data_folder must be set");

    const auto backbones = list_backbones();
    if (std::find(backbones.begin(), backbones.end(), c.model.transfer_arch) == backbones.end())
        flag("model.transfer_arch '" + c.model.transfer_arch + "' is not a registered backbone");
    if (c.model.pre_trained != "none" && c.model.pre_trained != "imagenet")
        flag("model.pre_trained '" + c.model.pre_trained + "' must be 'none' or 'imagenet'");
    if (c.model.before_dense != "Flatten" && c.model.before_dense != "GlobalAveragePooling")
        flag("model.before_dense '" + c.model.before_dense +
             "' must be 'Flatten' or 'GlobalAveragePooling'");
    for (int w : c.model.dense_layers)
        if (w < 1) flag("model.dense_layers entries must be >= 1, found " + std::to_string(w));
    if (c.model.regularization != "None" && c.model.regularization != "Dropout" &&
        c.model.regularization != "L2" && c.model.regularization != "Dropout+L2")
        flag("model.regularization '" + c.model.regularization +
             "' must be one of None, Dropout, L2, Dropout+L2");
    if (c.model.l2_strength < 0.0) flag("model.l2_strength must be nonnegative");
    if (c.model.dropout_rate < 0.0 || c.model.dropout_rate >= 1.0)
        flag("model.dropout_rate must lie in [0,1)");
    if (c.model.image_size &&
        (c.model.image_size->first < 1 || c.model.image_size->second < 1))
        flag("model.image_size entries must be positive");

    if (c.training.epochs < 1) flag("training.epochs must be >= 1");
    if (c.training.batch_size < 1) flag("training.batch_size must be >= 1");
    if (c.training.learning_rate <= 0.0) flag("training.learning_rate must be positive");
    if (c.training.early_stop < 0.0 || c.training.early_stop > 1.0)
        flag("training.early_stop must lie in [0,1]");
    if (c.training.warm_pretrain_epochs < 0) flag("training.warm_pretrain_epochs must be >= 0");
    if (c.training.augmentation != "none" && c.training.augmentation != "basic" &&
        c.training.augmentation != "custom")
        flag("training.augmentation '" + c.training.augmentation +
             "' must be one of none, basic, custom");
    if (c.training.augmentation == "custom" && c.training.custom_augmentation.empty())
        flag("training.augmentation 'custom' requires a non-empty custom_augmentation list");
    const auto metric_names = registered_metrics();
    for (const auto& m : c.training.metrics)
        if (std::find(metric_names.begin(), metric_names.end(), m) == metric_names.end())
            flag("training.metrics entry '" + m + "' is not a registered metric");

    if (c.saving.save_weights_folder.empty()) flag("saving.save_weights_folder must be set");
    if (c.saving.save_best_weights.empty()) flag("saving.save_best_weights must be set");

    return report;
}

json snapshot(const ExperimentConfig& c) {
    json j;
    j["paths"]["train_val_data"] = c.paths.train_val_data;
    j["paths"]["test_data_folder"] = c.paths.test_data_folder;
    j["paths"]["external_test_data_folder"] =
        c.paths.external_test_data_folder ? json(*c.paths.external_test_data_folder)
                                          : json(nullptr);

    auto& m = j["model"];
    m["image_size"] = c.model.image_size
                          ? json::array({c.model.image_size->first, c.model.image_size->second})
                          : json(nullptr);
    m["transfer_arch"] = c.model.transfer_arch;
    m["pre_trained"] = c.model.pre_trained;
    m["before_dense"] = c.model.before_dense;
    m["dense_layers"] = c.model.dense_layers;
    m["dense_activations"] = c.model.dense_activations;
    m["initializer"] = c.model.initializer;
    m["batch_norm"] = c.model.batch_norm;
    m["regularization"] = c.model.regularization;
    m["l2_strength"] = c.model.l2_strength;
    m["dropout_rate"] = c.model.dropout_rate;
    m["unfreeze_block"] = c.model.unfreeze_block;
    m["freeze_up_to"] = c.model.freeze_up_to ? json(*c.model.freeze_up_to) : json(nullptr);

    auto& t = j["training"];
    t["epochs"] = c.training.epochs;
    t["batch_size"] = c.training.batch_size;
    t["learning_rate"] = c.training.learning_rate;
    t["optimizer_name"] = c.training.optimizer_name;
    t["add_optimizer_params"] = c.training.add_optimizer_params;
    t["class_weights"] = c.training.class_weights;
    t["metrics"] = c.training.metrics;
    t["augmentation"] = c.training.augmentation;
    t["early_stop"] = c.training.early_stop;
    t["warm_pretrain_dense"] = c.training.warm_pretrain_dense;
    t["warm_pretrain_epochs"] = c.training.warm_pretrain_epochs;
    t["callback_count"] = c.training.callback.size();
    t["callback_names"] = json::array();
    for (const auto& cb : c.training.callback) t["callback_names"].push_back(cb.name);
    t["custom_augmentation_count"] = c.training.custom_augmentation.size();
    t["custom_augmentation_names"] = json::array();
    for (const auto& hook : c.training.custom_augmentation)
        t["custom_augmentation_names"].push_back(hook.name);

    j["evaluation"]["auto_mode"] = c.evaluation.auto_mode;

    j["saving"]["save_weights"] = c.saving.save_weights;
    j["saving"]["save_weights_folder"] = c.saving.save_weights_folder;
    j["saving"]["save_best_weights"] = c.saving.save_best_weights;

    j["misc"]["show_summary"] = c.misc.show_summary;
    j["misc"]["plot_curves"] = c.misc.plot_curves;
    j["misc"]["show_min_max_plot"] = c.misc.show_min_max_plot;
    j["misc"]["plot_conf"] = c.misc.plot_conf;
    return j;
}

json read_config_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

ExperimentConfig load_config_file(const std::string& path) {
    return apply_defaults(read_config_document(path));
}

void apply_override(json& raw, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' must have the form section.key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    const auto dot = path.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == path.size())
        throw ConfigError("override key '" + path + "' must have the form section.key");
    const std::string section = path.substr(0, dot);
    const std::string key = path.substr(dot + 1);
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;  // plain strings need no quoting
    raw[section][key] = parsed;
}

}  // namespace vistra
