#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vistra/backbone.hpp"
#include "vistra/data.hpp"
#include "vistra/nn/network.hpp"

namespace vistra {

// Head construction recipe (bridge + dense stack + per-layer extras).
struct HeadSpec {
    std::vector<int> dense_layers;
    std::string dense_activations = "elu";
    std::string initializer = "he_normal";
    bool batch_norm = false;
    std::string regularization = "None";  // None | Dropout | L2 | Dropout+L2
    double l2_strength = 0.0;
    double dropout_rate = 0.0;
    std::string bridge = "Flatten";  // Flatten | GlobalAveragePooling
};

struct HeadLayerDesc {
    std::string kind;  // "dense" | "batchnorm" | "activation" | "dropout"
    std::string name;
    int units = 0;           // dense only
    std::string activation;  // activation layers
    double dropout_rate = 0.0;
    double l2 = 0.0;  // dense kernel penalty
};

// Expands a HeadSpec into the ordered layer descriptions: per hidden width,
// Dense -> [BatchNorm] -> activation -> [Dropout]; then the task output
// Dense + activation with no dropout after it.
std::vector<HeadLayerDesc> build_head(const TaskSpec& task, const HeadSpec& spec);

struct LayerShapeRow {
    std::string name;
    std::string type;
    std::vector<int> output_shape;  // batch dim recorded as -1
    std::int64_t param_count = 0;
};

// Assembled network plus the metadata the rest of the pipeline needs.
struct BuiltModel {
    nn::Network net;
    TaskSpec task;
    BackboneHandle backbone;
    HeadSpec head;
    std::pair<int, int> image_size;  // resolved (h, w)
    int backbone_layer_count = 0;    // layers [0, n) belong to the backbone
    int bridge_index = 0;            // index of the bridge layer
    std::vector<LayerShapeRow> shapes;

    bool is_backbone_layer(int index) const { return index < backbone_layer_count; }
    std::map<std::string, bool> trainability_mask();  // parameterized layers only
};

// Builds backbone + bridge + head into one network. image_size falls back to
// the backbone's canonical input size when not supplied. All randomness
// (backbone random init, head init, dropout masks) derives from `seed`.
BuiltModel assemble(const BackboneHandle& backbone, const TaskSpec& task, const HeadSpec& spec,
                    std::uint64_t seed,
                    std::optional<std::pair<int, int>> image_size = std::nullopt);

// Freezes the backbone, unfreezes the named blocks, then applies the optional
// positional freeze: layers ordered before `freeze_up_to` are frozen unless
// their block was explicitly unfrozen. Head layers stay trainable.
void apply_freeze_policy(BuiltModel& model, const std::vector<std::string>& unfreeze_blocks,
                         const std::optional<std::string>& freeze_up_to);

// (trainable, frozen) parameter partition.
std::pair<std::int64_t, std::int64_t> parameter_counts(BuiltModel& model);

// Text table: layer name, type, output shape, parameter count, trainable flag.
std::string summary(BuiltModel& model);

}  // namespace vistra
