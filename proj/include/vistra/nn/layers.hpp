#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vistra/tensor.hpp"

namespace vistra::nn {

// A named parameter (or non-trainable buffer when grad == nullptr).
struct ParamRef {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
};

enum class Activation { Linear, Relu, Elu, Sigmoid, Tanh, Softmax };

Activation activation_from_name(const std::string& name);
const char* activation_name(Activation a);

Tensor apply_activation(Activation a, const Tensor& x);
// dy -> dx given the activation's cached output y.
Tensor activation_backward(Activation a, const Tensor& y, const Tensor& dy);

class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;

    const std::string& name() const { return name_; }
    bool trainable() const { return trainable_; }
    void set_trainable(bool t) { trainable_ = t; }

    virtual std::string type_name() const = 0;
    virtual Tensor forward(const Tensor& x, bool training) = 0;
    // Valid only after a forward(x, true) call: inference-mode forwards skip
    // caching the activations backward needs.
    virtual Tensor backward(const Tensor& dy) = 0;

    // Trainable parameters.
    virtual std::vector<ParamRef> params() { return {}; }
    // Everything persisted in a weight file (params plus buffers).
    virtual std::vector<ParamRef> state() { return params(); }
    virtual std::vector<int> output_shape(const std::vector<int>& in) const = 0;
    virtual void init_weights(std::mt19937& rng, const std::string& initializer);

    std::int64_t param_count();

private:
    std::string name_;
    bool trainable_ = true;
};

// 3x3-style convolution, stride 1, "same" padding, optional fused activation.
class Conv2D : public Layer {
public:
    Conv2D(std::string name, int in_channels, int out_channels, int kernel,
           Activation act = Activation::Relu);

    std::string type_name() const override { return "Conv2D"; }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<ParamRef> params() override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    void init_weights(std::mt19937& rng, const std::string& initializer) override;

    int in_channels() const { return in_c_; }
    int out_channels() const { return out_c_; }

    Tensor kernel;  // {k, k, in_c, out_c}
    Tensor bias;    // {out_c}
    Tensor dkernel;
    Tensor dbias;

private:
    int in_c_, out_c_, k_;
    Activation act_;
    Tensor input_;   // cached for backward
    Tensor output_;  // post-activation, cached for activation backward
};

class MaxPool2D : public Layer {
public:
    explicit MaxPool2D(std::string name, int pool = 2);

    std::string type_name() const override { return "MaxPool2D"; }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;

private:
    int pool_;
    std::vector<int> in_shape_;
    std::vector<std::int64_t> argmax_;
};

class Flatten : public Layer {
public:
    explicit Flatten(std::string name) : Layer(std::move(name)) {}

    std::string type_name() const override { return "Flatten"; }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;

private:
    std::vector<int> in_shape_;
};

class GlobalAveragePooling : public Layer {
public:
    explicit GlobalAveragePooling(std::string name) : Layer(std::move(name)) {}

    std::string type_name() const override { return "GlobalAveragePooling"; }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;

private:
    std::vector<int> in_shape_;
};

class Dense : public Layer {
public:
    Dense(std::string name, int in_width, int out_width, double l2 = 0.0);

    std::string type_name() const override { return "Dense"; }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<ParamRef> params() override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    void init_weights(std::mt19937& rng, const std::string& initializer) override;

    int in_width() const { return in_w_; }
    int out_width() const { return out_w_; }
    double l2_strength() const { return l2_; }

    Tensor weight;  // {in, out}
    Tensor bias;    // {out}
    Tensor dweight;
    Tensor dbias;

private:
    int in_w_, out_w_;
    double l2_;
    Tensor input_;
};

class BatchNorm : public Layer {
public:
    explicit BatchNorm(std::string name, int width, float momentum = 0.99f,
                       float epsilon = 1e-3f);

    std::string type_name() const override { return "BatchNorm"; }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<ParamRef> params() override;
    std::vector<ParamRef> state() override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;

    Tensor gamma, beta, dgamma, dbeta;
    Tensor running_mean, running_var;

private:
    int width_;
    float momentum_, eps_;
    bool used_batch_stats_ = false;
    Tensor input_, xhat_, batch_mean_, batch_var_;
};

class Dropout : public Layer {
public:
    Dropout(std::string name, double rate, std::uint64_t seed);

    std::string type_name() const override { return "Dropout"; }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;

    double rate() const { return rate_; }

private:
    double rate_;
    std::mt19937 rng_;
    std::vector<float> mask_;
    bool masked_ = false;
};

class ActivationLayer : public Layer {
public:
    ActivationLayer(std::string name, Activation act);

    std::string type_name() const override { return "Activation"; }
    Activation activation() const { return act_; }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;

private:
    Activation act_;
    Tensor output_;
};

}  // namespace vistra::nn
