#include "vistra/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "vistra/error.hpp"

namespace vistra::nn {

namespace {
constexpr float kEps = 1e-7f;

float clampp(float p) { return std::min(std::max(p, kEps), 1.0f - kEps); }

float weight_at(const std::vector<float>& w, int i) {
    return w.empty() ? 1.0f : w[static_cast<std::size_t>(i)];
}
}  // namespace

LossValue binary_crossentropy(const Tensor& probs, const Tensor& labels,
                              const std::vector<float>& sample_weights) {
    const int n = probs.shape[0];
    if (labels.size() != n)
        throw ModelError("binary loss: got " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " predictions");
    LossValue out;
    out.dprobs = Tensor(probs.shape);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const float p = clampp(probs[i]);
        const float y = labels[i];
        const float w = weight_at(sample_weights, i);
        total += w * -(y * std::log(p) + (1.0f - y) * std::log(1.0f - p));
        out.dprobs[i] = w * (p - y) / (p * (1.0f - p)) / static_cast<float>(n);
    }
    out.loss = total / n;
    return out;
}

LossValue categorical_crossentropy(const Tensor& probs, const Tensor& labels,
                                   const std::vector<float>& sample_weights) {
    const int n = probs.shape[0];
    const int k = probs.shape[1];
    if (!labels.same_shape(probs))
        throw ModelError("categorical loss: labels shape " + labels.shape_str() +
                         " does not match predictions " + probs.shape_str());
    LossValue out;
    out.dprobs = Tensor(probs.shape);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const float w = weight_at(sample_weights, i);
        for (int j = 0; j < k; ++j) {
            const std::int64_t idx = probs.idx2(i, j);
            const float y = labels[idx];
            if (y == 0.0f) continue;
            const float p = clampp(probs[idx]);
            total += w * -(y * std::log(p));
            out.dprobs[idx] = w * (-y / p) / static_cast<float>(n);
        }
    }
    out.loss = total / n;
    return out;
}

LossValue compute_loss(const std::string& loss_name, const Tensor& probs, const Tensor& labels,
                       const std::vector<float>& sample_weights) {
    if (loss_name == "binary_crossentropy")
        return binary_crossentropy(probs, labels, sample_weights);
    if (loss_name == "categorical_crossentropy")
        return categorical_crossentropy(probs, labels, sample_weights);
    throw ModelError("unknown loss '" + loss_name + "'");
}

}  // namespace vistra::nn
