#include "vistra/model.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "vistra/error.hpp"
#include "vistra/rng.hpp"

namespace vistra {

namespace {

bool mode_has_dropout(const std::string& mode) {
    return mode == "Dropout" || mode == "Dropout+L2";
}

bool mode_has_l2(const std::string& mode) {
    return mode == "L2" || mode == "Dropout+L2";
}

void check_head_spec(const HeadSpec& spec) {
    static const std::set<std::string> modes = {"None", "Dropout", "L2", "Dropout+L2"};
    if (!modes.count(spec.regularization))
        throw ModelError("unknown regularization mode '" + spec.regularization +
                         "' (valid: None, Dropout, L2, Dropout+L2)");
    for (int w : spec.dense_layers)
        if (w < 1) throw ModelError("dense layer widths must be >= 1, got " + std::to_string(w));
    if (spec.dropout_rate < 0.0 || spec.dropout_rate >= 1.0)
        throw ModelError("dropout_rate must lie in [0,1), got " +
                         std::to_string(spec.dropout_rate));
    if (spec.l2_strength < 0.0)
        throw ModelError("l2_strength must be nonnegative, got " +
                         std::to_string(spec.l2_strength));
    if (spec.bridge != "Flatten" && spec.bridge != "GlobalAveragePooling")
        throw ModelError("unknown bridge '" + spec.bridge +
                         "' (valid: Flatten, GlobalAveragePooling)");
    nn::activation_from_name(spec.dense_activations);  // throws on unknown names
}

std::string shape_text(const std::vector<int>& shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ", ";
        out += shape[i] < 0 ? std::string("None") : std::to_string(shape[i]);
    }
    return out + ")";
}

}  // namespace

std::vector<HeadLayerDesc> build_head(const TaskSpec& task, const HeadSpec& spec) {
    check_head_spec(spec);
    const double l2 = mode_has_l2(spec.regularization) ? spec.l2_strength : 0.0;
    std::vector<HeadLayerDesc> head;
    int i = 0;
    for (int width : spec.dense_layers) {
        ++i;
        const std::string suffix = "_" + std::to_string(i);
        head.push_back({"dense", "dense" + suffix, width, "", 0.0, l2});
        if (spec.batch_norm) head.push_back({"batchnorm", "batchnorm" + suffix, 0, "", 0.0, 0.0});
        head.push_back({"activation", "activation" + suffix, 0, spec.dense_activations, 0.0, 0.0});
        if (mode_has_dropout(spec.regularization) && spec.dropout_rate > 0.0)
            head.push_back({"dropout", "dropout" + suffix, 0, "", spec.dropout_rate, 0.0});
    }
    head.push_back({"dense", "output", task.output_units, "", 0.0, l2});
    head.push_back({"activation", "output_activation", 0, task.output_activation, 0.0, 0.0});
    return head;
}

std::map<std::string, bool> BuiltModel::trainability_mask() {
    std::map<std::string, bool> mask;
    for (int i = 0; i < net.layer_count(); ++i) {
        auto* layer = net.layer(i);
        if (layer->param_count() > 0) mask[layer->name()] = layer->trainable();
    }
    return mask;
}

BuiltModel assemble(const BackboneHandle& backbone, const TaskSpec& task, const HeadSpec& spec,
                    std::uint64_t seed, std::optional<std::pair<int, int>> image_size) {
    const auto head = build_head(task, spec);  // validates spec up front

    BuiltModel model;
    model.task = task;
    model.backbone = backbone;
    model.head = spec;
    model.image_size = image_size.value_or(backbone.input_size);
    if (model.image_size.first <= 0 || model.image_size.second <= 0)
        throw ModelError("image size must be positive, got (" +
                         std::to_string(model.image_size.first) + ", " +
                         std::to_string(model.image_size.second) + ")");

    instantiate_backbone(backbone, model.net, seed);
    model.backbone_layer_count = model.net.layer_count();

    // Shape propagation through the backbone to size the bridge and head.
    std::vector<int> shape = {-1, model.image_size.first, model.image_size.second, 3};
    for (int i = 0; i < model.net.layer_count(); ++i) {
        shape = model.net.layer(i)->output_shape(shape);
        if (shape.size() == 4 && (shape[1] < 1 || shape[2] < 1))
            throw ModelError("image size (" + std::to_string(model.image_size.first) + ", " +
                             std::to_string(model.image_size.second) +
                             ") collapses to zero spatial extent inside backbone '" +
                             backbone.name + "' at layer '" + model.net.layer(i)->name() + "'");
    }

    model.bridge_index = model.net.layer_count();
    if (spec.bridge == "Flatten")
        model.net.add(std::make_unique<nn::Flatten>("flatten"));
    else
        model.net.add(std::make_unique<nn::GlobalAveragePooling>("global_average_pooling"));
    shape = model.net.layer(model.bridge_index)->output_shape(shape);

    auto head_rng = make_rng(seed, "head_init");
    int width = shape[1];
    for (const auto& desc : head) {
        nn::Layer* added = nullptr;
        if (desc.kind == "dense") {
            added = model.net.add(std::make_unique<nn::Dense>(desc.name, width, desc.units,
                                                              desc.l2));
            added->init_weights(head_rng, spec.initializer);
            width = desc.units;
        } else if (desc.kind == "batchnorm") {
            added = model.net.add(std::make_unique<nn::BatchNorm>(desc.name, width));
        } else if (desc.kind == "activation") {
            added = model.net.add(std::make_unique<nn::ActivationLayer>(
                desc.name, nn::activation_from_name(desc.activation)));
        } else {
            added = model.net.add(std::make_unique<nn::Dropout>(
                desc.name, desc.dropout_rate, derive_seed(seed, "dropout/" + desc.name)));
        }
        (void)added;
    }

    // Shape table for the summary and for feature extraction width checks.
    shape = {-1, model.image_size.first, model.image_size.second, 3};
    for (int i = 0; i < model.net.layer_count(); ++i) {
        auto* layer = model.net.layer(i);
        shape = layer->output_shape(shape);
        model.shapes.push_back({layer->name(), layer->type_name(), shape, layer->param_count()});
    }
    return model;
}

void apply_freeze_policy(BuiltModel& model, const std::vector<std::string>& unfreeze_blocks,
                         const std::optional<std::string>& freeze_up_to) {
    const std::set<std::string> unfrozen = resolve_blocks(model.backbone, unfreeze_blocks);

    for (int i = 0; i < model.backbone_layer_count; ++i) {
        auto* layer = model.net.layer(i);
        layer->set_trainable(unfrozen.count(layer->name()) > 0);
    }
    for (int i = model.backbone_layer_count; i < model.net.layer_count(); ++i)
        model.net.layer(i)->set_trainable(true);

    if (freeze_up_to) {
        const int boundary = model.net.index_of(*freeze_up_to);
        if (boundary < 0)
            throw ModelError("freeze_up_to layer '" + *freeze_up_to + "' does not exist");
        // Positional freeze below the boundary; explicitly unfrozen blocks and
        // head layers keep their trainability.
        const int stop = std::min(boundary, model.backbone_layer_count);
        for (int i = 0; i < stop; ++i) {
            auto* layer = model.net.layer(i);
            if (!unfrozen.count(layer->name())) layer->set_trainable(false);
        }
    }
}

std::pair<std::int64_t, std::int64_t> parameter_counts(BuiltModel& model) {
    std::int64_t trainable = 0, frozen = 0;
    for (int i = 0; i < model.net.layer_count(); ++i) {
        auto* layer = model.net.layer(i);
        (layer->trainable() ? trainable : frozen) += layer->param_count();
    }
    return {trainable, frozen};
}

std::string summary(BuiltModel& model) {
    std::ostringstream out;
    out << "Model: " << model.backbone.name << " + " << model.head.bridge << " head\n";
    out << std::left << std::setw(28) << "Layer" << std::setw(22) << "Type" << std::setw(22)
        << "Output shape" << std::setw(12) << "Params"
        << "Trainable\n";
    out << std::string(90, '-') << "\n";
    for (std::size_t i = 0; i < model.shapes.size(); ++i) {
        const auto& row = model.shapes[i];
        const auto* layer = model.net.layer(static_cast<int>(i));
        out << std::left << std::setw(28) << row.name << std::setw(22) << row.type
            << std::setw(22) << shape_text(row.output_shape) << std::setw(12) << row.param_count
            << (row.param_count > 0 ? (layer->trainable() ? "yes" : "no") : "-") << "\n";
    }
    const auto [trainable, frozen] = parameter_counts(model);
    out << std::string(90, '-') << "\n";
    out << "Total params: " << trainable + frozen << " (trainable " << trainable << ", frozen "
        << frozen << ")\n";
    return out.str();
}

}  // namespace vistra
