#include "vistra/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vistra/error.hpp"

namespace vistra::nn {

namespace {

// C[m,n] += A[m,k] * B[k,n]
void gemm_acc(const float* a, const float* b, float* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const float* arow = a + static_cast<std::int64_t>(i) * k;
        float* crow = c + static_cast<std::int64_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const float av = arow[p];
            if (av == 0.0f) continue;
            const float* brow = b + static_cast<std::int64_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] += A^T[m,k] * B[k,n] where A is stored as {k, m}
void gemm_at_acc(const float* a, const float* b, float* c, int m, int k, int n) {
    for (int p = 0; p < k; ++p) {
        const float* arow = a + static_cast<std::int64_t>(p) * m;
        const float* brow = b + static_cast<std::int64_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const float av = arow[i];
            if (av == 0.0f) continue;
            float* crow = c + static_cast<std::int64_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] += A[m,k] * B^T[k,n] where B is stored as {n, k}
void gemm_bt_acc(const float* a, const float* b, float* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const float* arow = a + static_cast<std::int64_t>(i) * k;
        float* crow = c + static_cast<std::int64_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const float* brow = b + static_cast<std::int64_t>(j) * k;
            float acc = 0.0f;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

void he_normal_fill(Tensor& t, int fan_in, std::mt19937& rng) {
    std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
    for (auto& v : t.data) v = dist(rng);
}

void glorot_uniform_fill(Tensor& t, int fan_in, int fan_out, std::mt19937& rng) {
    const float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
    std::uniform_real_distribution<float> dist(-limit, limit);
    for (auto& v : t.data) v = dist(rng);
}

void init_kernel(Tensor& t, int fan_in, int fan_out, std::mt19937& rng,
                 const std::string& initializer) {
    if (initializer == "he_normal") {
        he_normal_fill(t, fan_in, rng);
    } else if (initializer == "glorot_uniform") {
        glorot_uniform_fill(t, fan_in, fan_out, rng);
    } else if (initializer == "zeros") {
        t.fill(0.0f);
    } else {
        throw ModelError("unknown initializer '" + initializer +
                         "' (known: he_normal, glorot_uniform, zeros)");
    }
}

}  // namespace

Activation activation_from_name(const std::string& name) {
    if (name == "linear") return Activation::Linear;
    if (name == "relu") return Activation::Relu;
    if (name == "elu") return Activation::Elu;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "tanh") return Activation::Tanh;
    if (name == "softmax") return Activation::Softmax;
    throw ModelError("unknown activation '" + name +
                     "' (known: linear, relu, elu, sigmoid, tanh, softmax)");
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::Relu: return "relu";
        case Activation::Elu: return "elu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Tanh: return "tanh";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

Tensor apply_activation(Activation a, const Tensor& x) {
    Tensor y = x;
    switch (a) {
        case Activation::Linear:
            break;
        case Activation::Relu:
            for (auto& v : y.data) v = v > 0.0f ? v : 0.0f;
            break;
        case Activation::Elu:
            for (auto& v : y.data) v = v > 0.0f ? v : std::expm1(v);
            break;
        case Activation::Sigmoid:
            for (auto& v : y.data) v = 1.0f / (1.0f + std::exp(-v));
            break;
        case Activation::Tanh:
            for (auto& v : y.data) v = std::tanh(v);
            break;
        case Activation::Softmax: {
            // rowwise over the last axis
            const int cols = y.shape.back();
            const std::int64_t rows = y.size() / cols;
            for (std::int64_t r = 0; r < rows; ++r) {
                float* p = y.data.data() + r * cols;
                float mx = -std::numeric_limits<float>::infinity();
                for (int j = 0; j < cols; ++j) mx = std::max(mx, p[j]);
                float sum = 0.0f;
                for (int j = 0; j < cols; ++j) {
                    p[j] = std::exp(p[j] - mx);
                    sum += p[j];
                }
                for (int j = 0; j < cols; ++j) p[j] /= sum;
            }
            break;
        }
    }
    return y;
}

Tensor activation_backward(Activation a, const Tensor& y, const Tensor& dy) {
    Tensor dx = dy;
    switch (a) {
        case Activation::Linear:
            break;
        case Activation::Relu:
            for (std::size_t i = 0; i < dx.data.size(); ++i)
                dx.data[i] = y.data[i] > 0.0f ? dx.data[i] : 0.0f;
            break;
        case Activation::Elu:
            // y = elu(x): dy/dx = 1 for x>0 (y>0), else y + 1
            for (std::size_t i = 0; i < dx.data.size(); ++i)
                dx.data[i] *= y.data[i] > 0.0f ? 1.0f : y.data[i] + 1.0f;
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < dx.data.size(); ++i)
                dx.data[i] *= y.data[i] * (1.0f - y.data[i]);
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < dx.data.size(); ++i)
                dx.data[i] *= 1.0f - y.data[i] * y.data[i];
            break;
        case Activation::Softmax: {
            // dx_k = p_k * (g_k - sum_i g_i p_i)
            const int cols = y.shape.back();
            const std::int64_t rows = y.size() / cols;
            for (std::int64_t r = 0; r < rows; ++r) {
                const float* p = y.data.data() + r * cols;
                float* g = dx.data.data() + r * cols;
                float dot = 0.0f;
                for (int j = 0; j < cols; ++j) dot += g[j] * p[j];
                for (int j = 0; j < cols; ++j) g[j] = p[j] * (g[j] - dot);
            }
            break;
        }
    }
    return dx;
}

void Layer::init_weights(std::mt19937&, const std::string&) {}

std::int64_t Layer::param_count() {
    std::int64_t n = 0;
    for (const auto& p : params()) n += p.value->size();
    return n;
}

// ---------------------------------------------------------------------------
// Conv2D

Conv2D::Conv2D(std::string name, int in_channels, int out_channels, int kernel, Activation act)
    : Layer(std::move(name)),
      kernel(Tensor::zeros({kernel, kernel, in_channels, out_channels})),
      bias(Tensor::zeros({out_channels})),
      dkernel(Tensor::zeros({kernel, kernel, in_channels, out_channels})),
      dbias(Tensor::zeros({out_channels})),
      in_c_(in_channels),
      out_c_(out_channels),
      k_(kernel),
      act_(act) {}

std::vector<ParamRef> Conv2D::params() {
    return {{name() + "/kernel", &kernel, &dkernel}, {name() + "/bias", &bias, &dbias}};
}

std::vector<int> Conv2D::output_shape(const std::vector<int>& in) const {
    return {in[0], in[1], in[2], out_c_};
}

void Conv2D::init_weights(std::mt19937& rng, const std::string& initializer) {
    init_kernel(kernel, k_ * k_ * in_c_, out_c_, rng, initializer);
    bias.fill(0.0f);
}

Tensor Conv2D::forward(const Tensor& x, bool training) {
    if (x.rank() != 4 || x.shape[3] != in_c_)
        throw ModelError("conv layer '" + name() + "' expects NHWC input with " +
                         std::to_string(in_c_) + " channels, got " + x.shape_str());
    const int n = x.shape[0], h = x.shape[1], w = x.shape[2];
    const int pad = k_ / 2;
    const int patch = k_ * k_ * in_c_;

    Tensor y({n, h, w, out_c_});
    std::vector<float> cols(static_cast<std::size_t>(h) * w * patch);
    for (int img = 0; img < n; ++img) {
        std::fill(cols.begin(), cols.end(), 0.0f);
        for (int oy = 0; oy < h; ++oy) {
            for (int ox = 0; ox < w; ++ox) {
                float* dst = cols.data() + (static_cast<std::int64_t>(oy) * w + ox) * patch;
                for (int ky = 0; ky < k_; ++ky) {
                    const int iy = oy + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < k_; ++kx) {
                        const int ix = ox + kx - pad;
                        if (ix < 0 || ix >= w) continue;
                        const float* src = x.data.data() + x.idx4(img, iy, ix, 0);
                        float* d = dst + (ky * k_ + kx) * in_c_;
                        for (int c = 0; c < in_c_; ++c) d[c] = src[c];
                    }
                }
            }
        }
        float* out = y.data.data() + y.idx4(img, 0, 0, 0);
        for (int cell = 0; cell < h * w; ++cell)
            for (int oc = 0; oc < out_c_; ++oc)
                out[static_cast<std::int64_t>(cell) * out_c_ + oc] = bias[oc];
        gemm_acc(cols.data(), kernel.data.data(), out, h * w, patch, out_c_);
    }
    y = apply_activation(act_, y);
    if (training) {
        input_ = x;
        output_ = y;
    }
    return y;
}

Tensor Conv2D::backward(const Tensor& dy_in) {
    Tensor dy = activation_backward(act_, output_, dy_in);
    const Tensor& x = input_;
    const int n = x.shape[0], h = x.shape[1], w = x.shape[2];
    const int pad = k_ / 2;
    const int patch = k_ * k_ * in_c_;

    Tensor dx({n, h, w, in_c_});
    std::vector<float> cols(static_cast<std::size_t>(h) * w * patch);
    std::vector<float> dcols(cols.size());
    for (int img = 0; img < n; ++img) {
        // rebuild the im2col matrix for this image
        std::fill(cols.begin(), cols.end(), 0.0f);
        for (int oy = 0; oy < h; ++oy) {
            for (int ox = 0; ox < w; ++ox) {
                float* dst = cols.data() + (static_cast<std::int64_t>(oy) * w + ox) * patch;
                for (int ky = 0; ky < k_; ++ky) {
                    const int iy = oy + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < k_; ++kx) {
                        const int ix = ox + kx - pad;
                        if (ix < 0 || ix >= w) continue;
                        const float* src = x.data.data() + x.idx4(img, iy, ix, 0);
                        float* d = dst + (ky * k_ + kx) * in_c_;
                        for (int c = 0; c < in_c_; ++c) d[c] = src[c];
                    }
                }
            }
        }
        const float* g = dy.data.data() + dy.idx4(img, 0, 0, 0);
        // dW += cols^T * dy
        gemm_at_acc(cols.data(), g, dkernel.data.data(), patch, h * w, out_c_);
        // db += column sums of dy
        for (int cell = 0; cell < h * w; ++cell)
            for (int oc = 0; oc < out_c_; ++oc)
                dbias[oc] += g[static_cast<std::int64_t>(cell) * out_c_ + oc];
        // dcols = dy * W^T, then scatter back (col2im)
        std::fill(dcols.begin(), dcols.end(), 0.0f);
        gemm_bt_acc(g, kernel.data.data(), dcols.data(), h * w, out_c_, patch);
        for (int oy = 0; oy < h; ++oy) {
            for (int ox = 0; ox < w; ++ox) {
                const float* src = dcols.data() + (static_cast<std::int64_t>(oy) * w + ox) * patch;
                for (int ky = 0; ky < k_; ++ky) {
                    const int iy = oy + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < k_; ++kx) {
                        const int ix = ox + kx - pad;
                        if (ix < 0 || ix >= w) continue;
                        float* d = dx.data.data() + dx.idx4(img, iy, ix, 0);
                        const float* s = src + (ky * k_ + kx) * in_c_;
                        for (int c = 0; c < in_c_; ++c) d[c] += s[c];
                    }
                }
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// MaxPool2D

MaxPool2D::MaxPool2D(std::string name, int pool) : Layer(std::move(name)), pool_(pool) {}

std::vector<int> MaxPool2D::output_shape(const std::vector<int>& in) const {
    return {in[0], in[1] / pool_, in[2] / pool_, in[3]};
}

Tensor MaxPool2D::forward(const Tensor& x, bool training) {
    const int n = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3];
    const int oh = h / pool_, ow = w / pool_;
    Tensor y({n, oh, ow, c});
    argmax_.assign(static_cast<std::size_t>(y.size()), 0);
    for (int img = 0; img < n; ++img) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                for (int ch = 0; ch < c; ++ch) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::int64_t best_idx = 0;
                    for (int py = 0; py < pool_; ++py) {
                        for (int px = 0; px < pool_; ++px) {
                            const std::int64_t idx =
                                x.idx4(img, oy * pool_ + py, ox * pool_ + px, ch);
                            if (x[idx] > best) {
                                best = x[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    const std::int64_t oidx = y.idx4(img, oy, ox, ch);
                    y[oidx] = best;
                    argmax_[static_cast<std::size_t>(oidx)] = best_idx;
                }
            }
        }
    }
    if (training) in_shape_ = x.shape;
    return y;
}

Tensor MaxPool2D::backward(const Tensor& dy) {
    Tensor dx(in_shape_);
    for (std::int64_t i = 0; i < dy.size(); ++i)
        dx[argmax_[static_cast<std::size_t>(i)]] += dy[i];
    return dx;
}

// ---------------------------------------------------------------------------
// Flatten / GlobalAveragePooling

Tensor Flatten::forward(const Tensor& x, bool training) {
    if (training) in_shape_ = x.shape;
    Tensor y = x;
    const int n = x.shape[0];
    y.shape = {n, static_cast<int>(x.size() / n)};
    return y;
}

Tensor Flatten::backward(const Tensor& dy) {
    Tensor dx = dy;
    dx.shape = in_shape_;
    return dx;
}

std::vector<int> Flatten::output_shape(const std::vector<int>& in) const {
    int w = 1;
    for (std::size_t i = 1; i < in.size(); ++i) w *= in[i];
    return {in[0], w};
}

Tensor GlobalAveragePooling::forward(const Tensor& x, bool training) {
    const int n = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3];
    Tensor y({n, c});
    const float scale = 1.0f / static_cast<float>(h * w);
    for (int img = 0; img < n; ++img) {
        for (int yy = 0; yy < h; ++yy)
            for (int xx = 0; xx < w; ++xx)
                for (int ch = 0; ch < c; ++ch)
                    y[y.idx2(img, ch)] += x[x.idx4(img, yy, xx, ch)];
        for (int ch = 0; ch < c; ++ch) y[y.idx2(img, ch)] *= scale;
    }
    if (training) in_shape_ = x.shape;
    return y;
}

Tensor GlobalAveragePooling::backward(const Tensor& dy) {
    Tensor dx(in_shape_);
    const int n = in_shape_[0], h = in_shape_[1], w = in_shape_[2], c = in_shape_[3];
    const float scale = 1.0f / static_cast<float>(h * w);
    for (int img = 0; img < n; ++img)
        for (int yy = 0; yy < h; ++yy)
            for (int xx = 0; xx < w; ++xx)
                for (int ch = 0; ch < c; ++ch)
                    dx[dx.idx4(img, yy, xx, ch)] = dy[dy.idx2(img, ch)] * scale;
    return dx;
}

std::vector<int> GlobalAveragePooling::output_shape(const std::vector<int>& in) const {
    return {in[0], in[3]};
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::string name, int in_width, int out_width, double l2)
    : Layer(std::move(name)),
      weight(Tensor::zeros({in_width, out_width})),
      bias(Tensor::zeros({out_width})),
      dweight(Tensor::zeros({in_width, out_width})),
      dbias(Tensor::zeros({out_width})),
      in_w_(in_width),
      out_w_(out_width),
      l2_(l2) {}

std::vector<ParamRef> Dense::params() {
    return {{name() + "/weight", &weight, &dweight}, {name() + "/bias", &bias, &dbias}};
}

std::vector<int> Dense::output_shape(const std::vector<int>& in) const {
    return {in[0], out_w_};
}

void Dense::init_weights(std::mt19937& rng, const std::string& initializer) {
    init_kernel(weight, in_w_, out_w_, rng, initializer);
    bias.fill(0.0f);
}

Tensor Dense::forward(const Tensor& x, bool training) {
    if (x.rank() != 2 || x.shape[1] != in_w_)
        throw ModelError("dense layer '" + name() + "' expects input width " +
                         std::to_string(in_w_) + ", got " + x.shape_str());
    const int n = x.shape[0];
    Tensor y({n, out_w_});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < out_w_; ++j) y[y.idx2(i, j)] = bias[j];
    gemm_acc(x.data.data(), weight.data.data(), y.data.data(), n, in_w_, out_w_);
    if (training) input_ = x;
    return y;
}

Tensor Dense::backward(const Tensor& dy) {
    const int n = input_.shape[0];
    gemm_at_acc(input_.data.data(), dy.data.data(), dweight.data.data(), in_w_, n, out_w_);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < out_w_; ++j) dbias[j] += dy[dy.idx2(i, j)];
    Tensor dx({n, in_w_});
    gemm_bt_acc(dy.data.data(), weight.data.data(), dx.data.data(), n, out_w_, in_w_);
    return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(std::string name, int width, float momentum, float epsilon)
    : Layer(std::move(name)),
      gamma(Tensor::zeros({width})),
      beta(Tensor::zeros({width})),
      dgamma(Tensor::zeros({width})),
      dbeta(Tensor::zeros({width})),
      running_mean(Tensor::zeros({width})),
      running_var(Tensor::zeros({width})),
      width_(width),
      momentum_(momentum),
      eps_(epsilon) {
    gamma.fill(1.0f);
    running_var.fill(1.0f);
}

std::vector<ParamRef> BatchNorm::params() {
    return {{name() + "/gamma", &gamma, &dgamma}, {name() + "/beta", &beta, &dbeta}};
}

std::vector<ParamRef> BatchNorm::state() {
    auto s = params();
    s.push_back({name() + "/running_mean", &running_mean, nullptr});
    s.push_back({name() + "/running_var", &running_var, nullptr});
    return s;
}

std::vector<int> BatchNorm::output_shape(const std::vector<int>& in) const {
    return in;
}

Tensor BatchNorm::forward(const Tensor& x, bool training) {
    const int n = x.shape[0];
    Tensor y({n, width_});
    // A frozen batch-norm layer runs on its stored statistics and leaves them
    // untouched.
    const bool batch_stats = training && trainable();
    used_batch_stats_ = batch_stats;
    if (batch_stats) {
        batch_mean_ = Tensor::zeros({width_});
        batch_var_ = Tensor::zeros({width_});
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < width_; ++j) batch_mean_[j] += x[x.idx2(i, j)];
        for (int j = 0; j < width_; ++j) batch_mean_[j] /= static_cast<float>(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < width_; ++j) {
                const float d = x[x.idx2(i, j)] - batch_mean_[j];
                batch_var_[j] += d * d;
            }
        for (int j = 0; j < width_; ++j) batch_var_[j] /= static_cast<float>(n);
        for (int j = 0; j < width_; ++j) {
            running_mean[j] = momentum_ * running_mean[j] + (1.0f - momentum_) * batch_mean_[j];
            running_var[j] = momentum_ * running_var[j] + (1.0f - momentum_) * batch_var_[j];
        }
        xhat_ = Tensor({n, width_});
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < width_; ++j) {
                const float inv = 1.0f / std::sqrt(batch_var_[j] + eps_);
                xhat_[xhat_.idx2(i, j)] = (x[x.idx2(i, j)] - batch_mean_[j]) * inv;
                y[y.idx2(i, j)] = gamma[j] * xhat_[xhat_.idx2(i, j)] + beta[j];
            }
        input_ = x;
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < width_; ++j) {
                const float inv = 1.0f / std::sqrt(running_var[j] + eps_);
                y[y.idx2(i, j)] = gamma[j] * (x[x.idx2(i, j)] - running_mean[j]) * inv + beta[j];
            }
        if (training) input_ = x;
    }
    return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
    const int n = dy.shape[0];
    Tensor dx({n, width_});
    if (!used_batch_stats_) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < width_; ++j) {
                const float inv = 1.0f / std::sqrt(running_var[j] + eps_);
                const float xh = (input_[input_.idx2(i, j)] - running_mean[j]) * inv;
                dgamma[j] += dy[dy.idx2(i, j)] * xh;
                dbeta[j] += dy[dy.idx2(i, j)];
                dx[dx.idx2(i, j)] = dy[dy.idx2(i, j)] * gamma[j] * inv;
            }
        return dx;
    }
    const float fn = static_cast<float>(n);
    for (int j = 0; j < width_; ++j) {
        const float inv = 1.0f / std::sqrt(batch_var_[j] + eps_);
        float sum_dy = 0.0f, sum_dy_xhat = 0.0f;
        for (int i = 0; i < n; ++i) {
            sum_dy += dy[dy.idx2(i, j)];
            sum_dy_xhat += dy[dy.idx2(i, j)] * xhat_[xhat_.idx2(i, j)];
        }
        dgamma[j] += sum_dy_xhat;
        dbeta[j] += sum_dy;
        for (int i = 0; i < n; ++i) {
            const float t = fn * dy[dy.idx2(i, j)] - sum_dy -
                            xhat_[xhat_.idx2(i, j)] * sum_dy_xhat;
            dx[dx.idx2(i, j)] = gamma[j] * inv * t / fn;
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Dropout

Dropout::Dropout(std::string name, double rate, std::uint64_t seed)
    : Layer(std::move(name)),
      rate_(rate),
      rng_(static_cast<std::uint32_t>(seed & 0xffffffffULL)) {}

std::vector<int> Dropout::output_shape(const std::vector<int>& in) const {
    return in;
}

Tensor Dropout::forward(const Tensor& x, bool training) {
    if (!training || rate_ <= 0.0) {
        masked_ = false;
        return x;
    }
    // inverted dropout: surviving units scaled by 1/(1-rate)
    Tensor y = x;
    const float keep = 1.0f - static_cast<float>(rate_);
    const float scale = 1.0f / keep;
    mask_.assign(y.data.size(), 0.0f);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    for (std::size_t i = 0; i < y.data.size(); ++i) {
        if (dist(rng_) < keep) {
            mask_[i] = scale;
            y.data[i] *= scale;
        } else {
            y.data[i] = 0.0f;
        }
    }
    masked_ = true;
    return y;
}

Tensor Dropout::backward(const Tensor& dy) {
    if (!masked_) return dy;
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= mask_[i];
    return dx;
}

// ---------------------------------------------------------------------------
// ActivationLayer

ActivationLayer::ActivationLayer(std::string name, Activation act)
    : Layer(std::move(name)), act_(act) {}

std::vector<int> ActivationLayer::output_shape(const std::vector<int>& in) const {
    return in;
}

Tensor ActivationLayer::forward(const Tensor& x, bool training) {
    Tensor y = apply_activation(act_, x);
    if (training) output_ = y;
    return y;
}

Tensor ActivationLayer::backward(const Tensor& dy) {
    return activation_backward(act_, output_, dy);
}

}  // namespace vistra::nn
