#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace twopath {

// Dense row-major n-d array. float for training, double for gradient checks.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), T(0)) {}
    Tensor(std::vector<int> s, T fill) : shape(std::move(s)), data(numel_of(shape), fill) {}
    Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<size_t>(numel_of(shape)) != data.size())
            throw std::invalid_argument("tensor: shape/data size mismatch");
    }

    static size_t numel_of(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension");
            n *= static_cast<size_t>(d);
        }
        return n;
    }

    size_t numel() const { return data.size(); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    T& operator[](size_t i) { return data[i]; }
    const T& operator[](size_t i) const { return data[i]; }

    // 4-d convenience accessor, row-major [n][c][h][w]
    T& at4(int n, int c, int h, int w) {
        const int C = shape[1], H = shape[2], W = shape[3];
        return data[((static_cast<size_t>(n) * C + c) * H + h) * W + w];
    }
    const T& at4(int n, int c, int h, int w) const {
        const int C = shape[1], H = shape[2], W = shape[3];
        return data[((static_cast<size_t>(n) * C + c) * H + h) * W + w];
    }
    T& at2(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
    const T& at2(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape);
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

// Trainable value plus its gradient and momentum buffer.
template <typename T>
struct ParamTensor {
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> velocity;
    std::string name;

    ParamTensor() = default;
    explicit ParamTensor(std::vector<int> s, std::string n = "")
        : value(s), grad(s), velocity(std::move(s)), name(std::move(n)) {}

    void zero_grad() { grad.fill(T(0)); }
};

}  // namespace twopath
