#include "osids/nn/tensor.hpp"

namespace osids::nn {

long long Tensor::count(const std::vector<int>& shape) {
    long long n = 1;
    for (int d : shape) {
        if (d < 1) throw ShapeMismatch("tensor dimensions must be >= 1");
        n *= d;
    }
    return n;
}

std::string Tensor::shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

} // namespace osids::nn
