#include "vistra/nn/optimizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>

#include "vistra/error.hpp"

namespace vistra::nn {

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double take(std::map<std::string, double>& extra, const std::string& key, double fallback) {
    auto it = extra.find(key);
    if (it == extra.end()) return fallback;
    const double v = it->second;
    extra.erase(it);
    return v;
}

void reject_leftovers(const std::map<std::string, double>& extra, const std::string& optimizer) {
    if (extra.empty()) return;
    std::string names;
    for (const auto& [k, _] : extra) {
        if (!names.empty()) names += ", ";
        names += "'" + k + "'";
    }
    throw TrainError("optimizer '" + optimizer + "' does not support extra parameter(s) " + names);
}

class SGD : public Optimizer {
public:
    SGD(double lr, double clipnorm, double clipvalue, double momentum, bool nesterov)
        : Optimizer(lr, clipnorm, clipvalue), momentum_(momentum), nesterov_(nesterov) {}

    std::string name() const override { return "SGD"; }
    void reset() override { velocity_.clear(); }

protected:
    void update(const ParamRef& p) override {
        auto& v = slot(p);
        const float lr = static_cast<float>(lr_);
        const float mu = static_cast<float>(momentum_);
        for (std::size_t i = 0; i < p.value->data.size(); ++i) {
            const float g = p.grad->data[i];
            v[i] = mu * v[i] - lr * g;
            p.value->data[i] += nesterov_ ? mu * v[i] - lr * g : v[i];
        }
    }

private:
    std::vector<float>& slot(const ParamRef& p) {
        auto& v = velocity_[p.value];
        if (v.size() != p.value->data.size()) v.assign(p.value->data.size(), 0.0f);
        return v;
    }

    double momentum_;
    bool nesterov_;
    std::unordered_map<const Tensor*, std::vector<float>> velocity_;
};

class RMSprop : public Optimizer {
public:
    RMSprop(double lr, double clipnorm, double clipvalue, double rho, double epsilon)
        : Optimizer(lr, clipnorm, clipvalue), rho_(rho), eps_(epsilon) {}

    std::string name() const override { return "RMSprop"; }
    void reset() override { acc_.clear(); }

protected:
    void update(const ParamRef& p) override {
        auto& acc = slot(p);
        const float lr = static_cast<float>(lr_);
        const float rho = static_cast<float>(rho_);
        const float eps = static_cast<float>(eps_);
        for (std::size_t i = 0; i < p.value->data.size(); ++i) {
            const float g = p.grad->data[i];
            acc[i] = rho * acc[i] + (1.0f - rho) * g * g;
            p.value->data[i] -= lr * g / (std::sqrt(acc[i]) + eps);
        }
    }

private:
    std::vector<float>& slot(const ParamRef& p) {
        auto& v = acc_[p.value];
        if (v.size() != p.value->data.size()) v.assign(p.value->data.size(), 0.0f);
        return v;
    }

    double rho_, eps_;
    std::unordered_map<const Tensor*, std::vector<float>> acc_;
};

class Adam : public Optimizer {
public:
    Adam(double lr, double clipnorm, double clipvalue, double beta1, double beta2, double epsilon)
        : Optimizer(lr, clipnorm, clipvalue), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

    std::string name() const override { return "Adam"; }
    void reset() override {
        slots_.clear();
        t_ = 0;
    }

    void begin_step() { ++t_; }

protected:
    void update(const ParamRef& p) override {
        auto& s = slots_[p.value];
        if (s.m.size() != p.value->data.size()) {
            s.m.assign(p.value->data.size(), 0.0f);
            s.v.assign(p.value->data.size(), 0.0f);
        }
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        const float lr = static_cast<float>(lr_);
        const float b1 = static_cast<float>(beta1_);
        const float b2 = static_cast<float>(beta2_);
        const float eps = static_cast<float>(eps_);
        for (std::size_t i = 0; i < p.value->data.size(); ++i) {
            const float g = p.grad->data[i];
            s.m[i] = b1 * s.m[i] + (1.0f - b1) * g;
            s.v[i] = b2 * s.v[i] + (1.0f - b2) * g * g;
            const float mhat = s.m[i] / static_cast<float>(bc1);
            const float vhat = s.v[i] / static_cast<float>(bc2);
            p.value->data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }

private:
    struct Slot {
        std::vector<float> m, v;
    };
    double beta1_, beta2_, eps_;
    int t_ = 0;
    std::unordered_map<const Tensor*, Slot> slots_;
};

}  // namespace

void Optimizer::step(const std::vector<ParamRef>& params) {
    if (auto* adam = dynamic_cast<Adam*>(this)) adam->begin_step();
    for (const auto& p : params) {
        if (!p.grad) continue;
        if (clipvalue_ > 0.0) {
            const float cv = static_cast<float>(clipvalue_);
            for (auto& g : p.grad->data) g = std::clamp(g, -cv, cv);
        }
        if (clipnorm_ > 0.0) {
            // per-tensor norm clipping
            double sq = 0.0;
            for (float g : p.grad->data) sq += static_cast<double>(g) * g;
            const double norm = std::sqrt(sq);
            if (norm > clipnorm_) {
                const float scale = static_cast<float>(clipnorm_ / norm);
                for (auto& g : p.grad->data) g *= scale;
            }
        }
        update(p);
    }
}

std::unique_ptr<Optimizer> build_optimizer(const std::string& name, double learning_rate,
                                           const std::map<std::string, double>& extra_in) {
    if (learning_rate <= 0.0)
        throw TrainError("learning rate must be positive, got " + std::to_string(learning_rate));
    std::map<std::string, double> extra = extra_in;
    const double clipnorm = take(extra, "clipnorm", 0.0);
    const double clipvalue = take(extra, "clipvalue", 0.0);
    const std::string key = to_lower(name);
    if (key == "adam") {
        const double b1 = take(extra, "beta_1", 0.9);
        const double b2 = take(extra, "beta_2", 0.999);
        const double eps = take(extra, "epsilon", 1e-7);
        reject_leftovers(extra, "Adam");
        return std::make_unique<Adam>(learning_rate, clipnorm, clipvalue, b1, b2, eps);
    }
    if (key == "sgd") {
        const double momentum = take(extra, "momentum", 0.0);
        const bool nesterov = take(extra, "nesterov", 0.0) != 0.0;
        reject_leftovers(extra, "SGD");
        return std::make_unique<SGD>(learning_rate, clipnorm, clipvalue, momentum, nesterov);
    }
    if (key == "rmsprop") {
        const double rho = take(extra, "rho", 0.9);
        const double eps = take(extra, "epsilon", 1e-7);
        reject_leftovers(extra, "RMSprop");
        return std::make_unique<RMSprop>(learning_rate, clipnorm, clipvalue, rho, eps);
    }
    throw TrainError("unknown optimizer '" + name + "' (registered: Adam, RMSprop, SGD)");
}

}  // namespace vistra::nn
