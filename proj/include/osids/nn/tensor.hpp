#pragma once

#include <string>
#include <vector>

#include "osids/error.hpp"

namespace osids::nn {

// Row-major float tensor. Storage is single precision; reductions inside ops
// accumulate in double.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<std::size_t>(count(shape_)), 0.0f);
    }

    Tensor(std::vector<int> shape, std::vector<float> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<std::size_t>(count(shape_)) != data_.size())
            throw ShapeMismatch("tensor data length does not match shape");
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor scalar(float v) { return Tensor({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    int size() const { return static_cast<int>(data_.size()); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
    float operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }

    float& at(int i, int j) { return data_[static_cast<std::size_t>(i) * dim(1) + j]; }
    float at(int i, int j) const { return data_[static_cast<std::size_t>(i) * dim(1) + j]; }

    float& at(int i, int j, int k) {
        return data_[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
    }
    float at(int i, int j, int k) const {
        return data_[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
    }

    void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    static long long count(const std::vector<int>& shape);
    static std::string shape_str(const std::vector<int>& shape);

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

} // namespace osids::nn
