#include "vistra/backbone.hpp"

#include <cstdlib>
#include <filesystem>

#include "vistra/error.hpp"
#include "vistra/rng.hpp"

namespace vistra {

namespace {

constexpr int kWeightsFormatVersion = 1;

// ImageNet channel means in BGR order (caffe-style preprocessing).
constexpr float kBgrMeans[3] = {103.939f, 116.779f, 123.68f};

// RGB -> BGR plus mean subtraction, in place over an NHWC batch.
void vgg_preprocess(Tensor& batch) {
    const std::int64_t pixels = batch.size() / 3;
    for (std::int64_t p = 0; p < pixels; ++p) {
        float* px = batch.data.data() + p * 3;
        const float r = px[0], g = px[1], b = px[2];
        px[0] = b - kBgrMeans[0];
        px[1] = g - kBgrMeans[1];
        px[2] = r - kBgrMeans[2];
    }
}

void unit_scale_preprocess(Tensor& batch) {
    for (auto& v : batch.data) v /= 255.0f;
}

std::int64_t conv_params(int in_c, int out_c) {
    return static_cast<std::int64_t>(3) * 3 * in_c * out_c + out_c;
}

struct BackboneDef {
    std::pair<int, int> input_size;
    PreprocessFn preprocess;
    // Per block: conv filter counts; each block ends with a 2x2 max pool.
    std::vector<std::vector<int>> blocks;
    std::string layer_prefix;  // "block" -> block1_conv1, block1_pool, ...
};

BackboneHandle make_handle(const std::string& name, const BackboneDef& def,
                           const std::string& weight_source) {
    BackboneHandle h;
    h.name = name;
    h.input_size = def.input_size;
    h.weight_source = weight_source;
    h.preprocess = def.preprocess;
    int in_c = 3;
    for (std::size_t b = 0; b < def.blocks.size(); ++b) {
        const std::string block_label = def.layer_prefix + std::to_string(b + 1);
        std::set<std::string> block_layers;
        for (std::size_t c = 0; c < def.blocks[b].size(); ++c) {
            const int out_c = def.blocks[b][c];
            const std::string lname = block_label + "_conv" + std::to_string(c + 1);
            h.defs.push_back({"conv", lname, out_c});
            h.layers.emplace_back(lname, conv_params(in_c, out_c));
            block_layers.insert(lname);
            in_c = out_c;
        }
        const std::string pname = block_label + "_pool";
        h.defs.push_back({"maxpool", pname, 0});
        h.layers.emplace_back(pname, 0);
        h.block_map["cblock" + std::to_string(b + 1)] = std::move(block_layers);
    }
    h.output_channels = in_c;
    return h;
}

const std::map<std::string, BackboneDef>& registry() {
    static const std::map<std::string, BackboneDef> reg = {
        {"VGG16",
         {{224, 224},
          vgg_preprocess,
          {{64, 64}, {128, 128}, {256, 256, 256}, {512, 512, 512}, {512, 512, 512}},
          "block"}},
        {"VGG19",
         {{224, 224},
          vgg_preprocess,
          {{64, 64}, {128, 128}, {256, 256, 256, 256}, {512, 512, 512, 512},
           {512, 512, 512, 512}},
          "block"}},
        // Desk-scale stub: two conv blocks, 9,468 parameters, 32x32 input.
        {"TinyNet", {{32, 32}, unit_scale_preprocess, {{12, 12}, {24, 24}}, "block"}},
    };
    return reg;
}

std::string registered_names_csv() {
    std::string out;
    for (const auto& [name, def] : registry()) {
        if (!out.empty()) out += ", ";
        out += name;
    }
    return out;
}

}  // namespace

std::vector<std::string> list_backbones() {
    std::vector<std::string> names;
    for (const auto& [name, def] : registry()) names.push_back(name);
    return names;  // std::map iterates sorted
}

BackboneHandle get_backbone(const std::string& name, const std::string& weight_source) {
    auto it = registry().find(name);
    if (it == registry().end())
        throw BackboneError("unknown backbone '" + name +
                            "' (registered: " + registered_names_csv() + ")");
    if (weight_source != "none" && weight_source != "imagenet")
        throw BackboneError("unavailable weight source '" + weight_source +
                            "' for backbone '" + name + "' (available: none, imagenet)");
    return make_handle(name, it->second, weight_source);
}

std::set<std::string> resolve_blocks(const BackboneHandle& handle,
                                     const std::vector<std::string>& block_names) {
    std::set<std::string> out;
    for (const auto& block : block_names) {
        auto it = handle.block_map.find(block);
        if (it == handle.block_map.end()) {
            std::string valid;
            for (const auto& [k, v] : handle.block_map) {
                if (!valid.empty()) valid += ", ";
                valid += k;
            }
            throw BackboneError("unknown block '" + block + "' for backbone '" + handle.name +
                                "' (valid: " + valid + ")");
        }
        out.insert(it->second.begin(), it->second.end());
    }
    return out;
}

std::string weight_cache_dir() {
    if (const char* env = std::getenv("VISTRA_WEIGHTS_DIR")) return env;
    if (const char* home = std::getenv("HOME"))
        return (std::filesystem::path(home) / ".cache" / "vistra" / "weights").string();
    return ".vistra_weights";
}

std::string weight_cache_file(const std::string& backbone, const std::string& source) {
    return (std::filesystem::path(weight_cache_dir()) /
            (backbone + "_" + source + "_v" + std::to_string(kWeightsFormatVersion) + ".wts"))
        .string();
}

void instantiate_backbone(const BackboneHandle& handle, nn::Network& net,
                          std::uint64_t init_seed) {
    int in_c = 3;
    std::vector<nn::Layer*> added;
    for (const auto& def : handle.defs) {
        if (def.kind == "conv") {
            added.push_back(net.add(std::make_unique<nn::Conv2D>(def.name, in_c, def.filters, 3,
                                                                 nn::Activation::Relu)));
            in_c = def.filters;
        } else {
            added.push_back(net.add(std::make_unique<nn::MaxPool2D>(def.name, 2)));
        }
    }
    if (handle.weight_source == "none") {
        auto rng = make_rng(init_seed, "backbone_init/" + handle.name);
        for (auto* layer : added) layer->init_weights(rng, "glorot_uniform");
        return;
    }
    const std::string cache = weight_cache_file(handle.name, handle.weight_source);
    if (!std::filesystem::exists(cache))
        throw BackboneError("pretrained weights for '" + handle.name + "' (source '" +
                            handle.weight_source + "') not found in cache at " + cache +
                            "; set VISTRA_WEIGHTS_DIR to a directory holding them");
    const nn::WeightMap weights = nn::read_weight_map(cache);
    for (auto* layer : added) {
        for (auto& param : layer->state()) {
            auto it = weights.find(param.name);
            if (it == weights.end())
                throw BackboneError("weight cache " + cache + " is missing tensor '" +
                                    param.name + "'");
            if (it->second.shape != param.value->shape)
                throw BackboneError("weight cache tensor '" + param.name + "' has shape " +
                                    it->second.shape_str() + ", expected " +
                                    param.value->shape_str());
            *param.value = it->second;
        }
    }
}

}  // namespace vistra
