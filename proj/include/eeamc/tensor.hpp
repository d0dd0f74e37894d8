#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "eeamc/error.hpp"

namespace eeamc {

/// Dense row-major float tensor of rank 1..3. The single value carrier for
/// activations, parameters and gradients.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::initializer_list<int> shape) { resize(shape); }

    static Tensor zeros(std::initializer_list<int> shape) { return Tensor(shape); }

    static Tensor full(std::initializer_list<int> shape, float v) {
        Tensor t(shape);
        t.fill(v);
        return t;
    }

    void resize(std::initializer_list<int> shape) {
        if (shape.size() == 0 || shape.size() > 3)
            throw ConfigError("tensor rank must be 1..3, got " + std::to_string(shape.size()));
        rank_ = int(shape.size());
        dims_ = {1, 1, 1};
        std::size_t n = 1;
        int i = 0;
        for (int d : shape) {
            if (d <= 0) throw ConfigError("tensor extent must be positive, got " + std::to_string(d));
            dims_[std::size_t(i++)] = d;
            n *= std::size_t(d);
        }
        data_.assign(n, 0.0f);
    }

    int rank() const { return rank_; }
    int dim(int i) const { return dims_[std::size_t(i)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    float& operator()(int i) { return data_[std::size_t(i)]; }
    float operator()(int i) const { return data_[std::size_t(i)]; }

    float& operator()(int i, int j) { return data_[std::size_t(i) * dims_[1] + std::size_t(j)]; }
    float operator()(int i, int j) const { return data_[std::size_t(i) * dims_[1] + std::size_t(j)]; }

    float& operator()(int i, int j, int k) {
        return data_[(std::size_t(i) * dims_[1] + std::size_t(j)) * dims_[2] + std::size_t(k)];
    }
    float operator()(int i, int j, int k) const {
        return data_[(std::size_t(i) * dims_[1] + std::size_t(j)) * dims_[2] + std::size_t(k)];
    }

    void fill(float v) {
        for (auto& x : data_) x = v;
    }

    void zero() { fill(0.0f); }

    bool same_shape(const Tensor& o) const { return rank_ == o.rank_ && dims_ == o.dims_; }

    bool all_finite() const {
        for (float v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "(";
        for (int i = 0; i < rank_; ++i) {
            if (i) s += ",";
            s += std::to_string(dims_[std::size_t(i)]);
        }
        return s + ")";
    }

private:
    std::array<int, 3> dims_{1, 1, 1};
    int rank_ = 0;
    std::vector<float> data_;
};

} // namespace eeamc
