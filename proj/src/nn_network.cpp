#include "vistra/nn/network.hpp"

#include <cstring>
#include <fstream>

#include "vistra/error.hpp"

namespace vistra::nn {

namespace {
constexpr char kMagic[4] = {'V', 'S', 'W', 'T'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

Layer* Network::add(std::unique_ptr<Layer> layer) {
    if (find(layer->name()) != nullptr)
        throw ModelError("duplicate layer name '" + layer->name() + "'");
    layers_.push_back(std::move(layer));
    return layers_.back().get();
}

Layer* Network::find(const std::string& name) {
    for (auto& l : layers_)
        if (l->name() == name) return l.get();
    return nullptr;
}

int Network::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (layers_[i]->name() == name) return static_cast<int>(i);
    return -1;
}

Tensor Network::forward(const Tensor& x, bool training) {
    Tensor cur = x;
    for (auto& l : layers_) cur = l->forward(cur, training);
    return cur;
}

Tensor Network::forward_to(const Tensor& x, int upto) {
    if (upto < 0 || upto >= layer_count())
        throw ModelError("layer index " + std::to_string(upto) + " out of range [0, " +
                         std::to_string(layer_count()) + ")");
    Tensor cur = x;
    for (int i = 0; i <= upto; ++i) cur = layers_[static_cast<std::size_t>(i)]->forward(cur, false);
    return cur;
}

void Network::backward(const Tensor& dy) {
    Tensor cur = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
}

void Network::zero_grads() {
    for (auto& l : layers_)
        for (auto& p : l->params())
            if (p.grad) p.grad->fill(0.0f);
}

std::vector<ParamRef> Network::params(bool trainable_only) {
    std::vector<ParamRef> out;
    for (auto& l : layers_) {
        if (trainable_only && !l->trainable()) continue;
        for (auto& p : l->params()) out.push_back(p);
    }
    return out;
}

std::vector<ParamRef> Network::state() {
    std::vector<ParamRef> out;
    for (auto& l : layers_)
        for (auto& p : l->state()) out.push_back(p);
    return out;
}

std::int64_t Network::param_count_total() {
    std::int64_t n = 0;
    for (auto& l : layers_) n += l->param_count();
    return n;
}

std::int64_t Network::param_count_trainable() {
    std::int64_t n = 0;
    for (auto& l : layers_)
        if (l->trainable()) n += l->param_count();
    return n;
}

WeightMap Network::weight_snapshot() {
    WeightMap out;
    for (auto& p : state()) out[p.name] = *p.value;
    return out;
}

void Network::restore_weights(const WeightMap& weights) {
    for (auto& p : state()) {
        auto it = weights.find(p.name);
        if (it == weights.end())
            throw ModelError("weight snapshot is missing entry '" + p.name + "'");
        if (it->second.shape != p.value->shape)
            throw ModelError("weight '" + p.name + "' has shape " + it->second.shape_str() +
                             ", expected " + p.value->shape_str());
        *p.value = it->second;
    }
}

void Network::save_weights(const std::string& path) {
    write_weight_map(path, weight_snapshot());
}

void Network::load_weights(const std::string& path) {
    restore_weights(read_weight_map(path));
}

void write_weight_block(std::ostream& out, const WeightMap& weights) {
    const std::uint32_t count = static_cast<std::uint32_t>(weights.size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& [name, tensor] : weights) {
        const std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
        out.write(reinterpret_cast<const char*>(&name_len), 4);
        out.write(name.data(), name_len);
        const std::uint32_t rank = static_cast<std::uint32_t>(tensor.shape.size());
        out.write(reinterpret_cast<const char*>(&rank), 4);
        for (int d : tensor.shape) {
            const std::int32_t dim = d;
            out.write(reinterpret_cast<const char*>(&dim), 4);
        }
        out.write(reinterpret_cast<const char*>(tensor.data.data()),
                  static_cast<std::streamsize>(tensor.data.size() * sizeof(float)));
    }
    if (!out) throw ModelError("failed writing weight block");
}

WeightMap read_weight_block(std::istream& in) {
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    WeightMap out;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = 0;
        in.read(reinterpret_cast<char*>(&name_len), 4);
        std::string name(name_len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(name_len));
        std::uint32_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), 4);
        std::vector<int> shape(rank);
        for (auto& d : shape) {
            std::int32_t dim = 0;
            in.read(reinterpret_cast<char*>(&dim), 4);
            d = dim;
        }
        if (!in) throw ModelError("truncated weight block");
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!in) throw ModelError("truncated weight block");
        out[name] = std::move(t);
    }
    return out;
}

void write_weight_map(const std::string& path, const WeightMap& weights) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ModelError("cannot open '" + path + "' for writing");
    f.write(kMagic, 4);
    const std::uint32_t version = kVersion;
    f.write(reinterpret_cast<const char*>(&version), 4);
    write_weight_block(f, weights);
    if (!f) throw ModelError("failed writing weights to '" + path + "'");
}

WeightMap read_weight_map(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ModelError("cannot open weight file '" + path + "'");
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw ModelError("'" + path + "' is not a weight file");
    std::uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    if (version != kVersion)
        throw ModelError("unsupported weight file version " + std::to_string(version));
    try {
        return read_weight_block(f);
    } catch (const ModelError&) {
        throw ModelError("truncated weight file '" + path + "'");
    }
}

}  // namespace vistra::nn
