#pragma once

#include <string>
#include <vector>

#include "vistra/tensor.hpp"

namespace vistra::nn {

// Batch loss over predicted probabilities. `sample_weights` may be empty
// (all ones). Loss = (1/n) * sum_i w_i * l_i; the returned gradient is
// d(loss)/d(probs) with the same weighting.
struct LossValue {
    double loss = 0.0;
    Tensor dprobs;
};

// probs {n,1} (or {n}), labels {n} with entries in {0,1}
LossValue binary_crossentropy(const Tensor& probs, const Tensor& labels,
                              const std::vector<float>& sample_weights);

// probs {n,K}, labels one-hot {n,K}
LossValue categorical_crossentropy(const Tensor& probs, const Tensor& labels,
                                   const std::vector<float>& sample_weights);

LossValue compute_loss(const std::string& loss_name, const Tensor& probs, const Tensor& labels,
                       const std::vector<float>& sample_weights);

}  // namespace vistra::nn
