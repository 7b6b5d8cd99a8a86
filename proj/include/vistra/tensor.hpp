#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vistra {

// Dense float32 tensor, row-major. Images are NHWC.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static std::int64_t count(const std::vector<int>& s);

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    void fill(float v);

    float& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    float operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

    // NHWC addressing
    std::int64_t idx4(int n, int y, int x, int c) const {
        return ((static_cast<std::int64_t>(n) * shape[1] + y) * shape[2] + x) * shape[3] + c;
    }
    std::int64_t idx2(int n, int j) const {
        return static_cast<std::int64_t>(n) * shape[1] + j;
    }

    std::string shape_str() const;
};

}  // namespace vistra
