#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vistra/data.hpp"
#include "vistra/nn/network.hpp"

namespace vistra {

// One backbone layer as declared by the registry (instantiated on demand).
struct BackboneLayerDef {
    std::string kind;  // "conv" | "maxpool"
    std::string name;
    int filters = 0;  // conv only
};

// Architecture metadata plus everything needed to materialize the feature
// extractor: ordered layer defs, per-layer parameter counts, the conv-block
// map used by freeze policies, and the pretraining-matched preprocessing.
struct BackboneHandle {
    std::string name;
    std::pair<int, int> input_size;  // (h, w)
    std::string weight_source;       // "none" | "imagenet"
    std::vector<std::pair<std::string, std::int64_t>> layers;  // (name, param count)
    std::map<std::string, std::set<std::string>> block_map;    // cblockN -> layer names
    PreprocessFn preprocess;
    std::vector<BackboneLayerDef> defs;
    int output_channels = 0;
};

std::vector<std::string> list_backbones();  // sorted

// weight_source "none" initializes randomly at instantiation; "imagenet"
// loads from the on-disk weight cache (lazily, at instantiation time).
BackboneHandle get_backbone(const std::string& name, const std::string& weight_source);

// Union of the named blocks' layer sets.
std::set<std::string> resolve_blocks(const BackboneHandle& handle,
                                     const std::vector<std::string>& block_names);

// Appends the backbone's layers to `net` and fills in weights: seeded random
// init for "none", cache file for "imagenet".
void instantiate_backbone(const BackboneHandle& handle, nn::Network& net,
                          std::uint64_t init_seed);

// Cache directory for pretrained weights (override with VISTRA_WEIGHTS_DIR).
std::string weight_cache_dir();
std::string weight_cache_file(const std::string& backbone, const std::string& source);

}  // namespace vistra
