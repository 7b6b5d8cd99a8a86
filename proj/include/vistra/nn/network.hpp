#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vistra/nn/layers.hpp"

namespace vistra::nn {

using WeightMap = std::map<std::string, Tensor>;

// A plain sequential stack of layers.
class Network {
public:
    Network() = default;
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    Layer* add(std::unique_ptr<Layer> layer);

    int layer_count() const { return static_cast<int>(layers_.size()); }
    Layer* layer(int i) { return layers_[static_cast<std::size_t>(i)].get(); }
    const Layer* layer(int i) const { return layers_[static_cast<std::size_t>(i)].get(); }
    Layer* find(const std::string& name);
    int index_of(const std::string& name) const;  // -1 when absent

    Tensor forward(const Tensor& x, bool training);
    // Forward pass truncated after layer `upto` (inclusive), inference mode.
    Tensor forward_to(const Tensor& x, int upto);
    // Propagates loss gradient back through every layer; parameter gradients
    // accumulate, so call zero_grads() first.
    void backward(const Tensor& dy);
    void zero_grads();

    std::vector<ParamRef> params(bool trainable_only);
    std::vector<ParamRef> state();

    std::int64_t param_count_total();
    std::int64_t param_count_trainable();

    WeightMap weight_snapshot();
    void restore_weights(const WeightMap& weights);

    void save_weights(const std::string& path);
    void load_weights(const std::string& path);

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

void write_weight_map(const std::string& path, const WeightMap& weights);
WeightMap read_weight_map(const std::string& path);

// Header-less forms for embedding a weight block inside another file.
void write_weight_block(std::ostream& out, const WeightMap& weights);
WeightMap read_weight_block(std::istream& in);

}  // namespace vistra::nn
