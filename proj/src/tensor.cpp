#include "vistra/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace vistra {

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<std::size_t>(count(shape)), 0.0f);
}

std::int64_t Tensor::count(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

void Tensor::fill(float v) {
    std::fill(data.begin(), data.end(), v);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

}  // namespace vistra
