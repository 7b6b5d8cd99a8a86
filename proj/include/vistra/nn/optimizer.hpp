#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vistra/nn/layers.hpp"

namespace vistra::nn {

// Gradient-descent update rule with optional gradient clipping. State slots
// (momentum, moment estimates) are keyed per parameter tensor and survive
// across steps; reset() clears them for a fresh phase.
class Optimizer {
public:
    virtual ~Optimizer() = default;

    void step(const std::vector<ParamRef>& params);
    virtual void reset() = 0;
    virtual std::string name() const = 0;

    double learning_rate() const { return lr_; }

protected:
    Optimizer(double lr, double clipnorm, double clipvalue)
        : lr_(lr), clipnorm_(clipnorm), clipvalue_(clipvalue) {}

    virtual void update(const ParamRef& p) = 0;

    double lr_;
    double clipnorm_;   // <= 0 disables
    double clipvalue_;  // <= 0 disables
};

// name in {"Adam","SGD","RMSprop"} (case-insensitive); extras are optimizer
// specific, plus "clipnorm"/"clipvalue" accepted everywhere. An unsupported
// extra raises TrainError naming it.
std::unique_ptr<Optimizer> build_optimizer(const std::string& name, double learning_rate,
                                           const std::map<std::string, double>& extra = {});

}  // namespace vistra::nn
