#pragma once

// Trainable layer objects over the raw kernels. Each layer owns its
// parameters (value/grad/velocity) and caches what its backward pass needs.
// Calling forward(train=true) arms the training backward; forward with
// train=false arms the running-statistics backward (needed when
// differentiating a frozen network w.r.t. its input).

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "twopath/kernels.hpp"
#include "twopath/tensor.hpp"

namespace twopath {

template <typename T>
struct Conv2d {
    int in_ch = 0, out_ch = 0, ksize = 0, pad = 0;
    bool has_bias = true;
    ParamTensor<T> weight;  // [F, C, ks, ks]
    ParamTensor<T> bias;    // [F]; allocated either way, all-zero when unused
    Tensor<T> cache_x;

    Conv2d() = default;
    Conv2d(int in_c, int out_c, int ks, std::string name, bool with_bias = true)
        : in_ch(in_c),
          out_ch(out_c),
          ksize(ks),
          pad((ks - 1) / 2),
          has_bias(with_bias),
          weight({out_c, in_c, ks, ks}, name + ".weight"),
          bias({out_c}, name + ".bias") {
        if (ks % 2 == 0) throw std::invalid_argument("conv kernel size must be odd: " + name);
    }

    Tensor<T> forward(const Tensor<T>& x, bool /*train*/) {
        const int N = x.shape[0], H = x.shape[2], W = x.shape[3];
        if (x.shape[1] != in_ch) throw std::invalid_argument("conv input channel mismatch");
        Tensor<T> y({N, out_ch, conv_out_dim(H, ksize, pad), conv_out_dim(W, ksize, pad)});
        kern::conv2d_forward(x.ptr(), N, in_ch, H, W, weight.value.ptr(), out_ch, ksize, pad,
                             bias.value.ptr(), y.ptr());
        cache_x = x;  // needed in both modes: eval-mode backward serves input gradients
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, bool need_dx = true) {
        const int N = cache_x.shape[0], H = cache_x.shape[2], W = cache_x.shape[3];
        Tensor<T> dx = need_dx ? Tensor<T>(cache_x.shape) : Tensor<T>();
        kern::conv2d_backward(cache_x.ptr(), dy.ptr(), N, in_ch, H, W, weight.value.ptr(), out_ch,
                              ksize, pad, need_dx ? dx.ptr() : nullptr, weight.grad.ptr(),
                              bias.grad.ptr());
        return dx;
    }

    std::vector<ParamTensor<T>*> params() {
        if (has_bias) return {&weight, &bias};
        return {&weight};
    }
};

template <typename T>
struct BatchNorm2d {
    int features = 0;
    T eps = T(1e-5);
    T momentum = T(0.1);
    ParamTensor<T> gamma, beta;
    Tensor<T> running_mean, running_var;
    Tensor<T> cache_x, save_mean, save_invstd;
    bool last_train = true;

    BatchNorm2d() = default;
    BatchNorm2d(int f, std::string name)
        : features(f),
          gamma({f}, name + ".gamma"),
          beta({f}, name + ".beta"),
          running_mean(std::vector<int>{f}, T(0)),
          running_var(std::vector<int>{f}, T(1)) {
        gamma.value.fill(T(1));
    }

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        const int N = x.shape[0], S = x.shape[2] * x.shape[3];
        Tensor<T> y(x.shape);
        last_train = train;
        cache_x = x;
        if (train) {
            if (N < 2) throw std::invalid_argument("batchnorm needs at least 2 samples to train");
            save_mean = Tensor<T>({features});
            save_invstd = Tensor<T>({features});
            kern::batchnorm_forward_train(x.ptr(), N, features, S, gamma.value.ptr(),
                                          beta.value.ptr(), eps, momentum, running_mean.ptr(),
                                          running_var.ptr(), y.ptr(), save_mean.ptr(),
                                          save_invstd.ptr());
        } else {
            kern::batchnorm_forward_eval(x.ptr(), N, features, S, gamma.value.ptr(),
                                         beta.value.ptr(), eps, running_mean.ptr(),
                                         running_var.ptr(), y.ptr());
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, bool need_dx = true) {
        const int N = cache_x.shape[0], S = cache_x.shape[2] * cache_x.shape[3];
        Tensor<T> dx = need_dx ? Tensor<T>(cache_x.shape) : Tensor<T>();
        if (last_train) {
            kern::batchnorm_backward_train(cache_x.ptr(), dy.ptr(), N, features, S,
                                           gamma.value.ptr(), save_mean.ptr(), save_invstd.ptr(),
                                           gamma.grad.ptr(), beta.grad.ptr(),
                                           need_dx ? dx.ptr() : nullptr);
        } else {
            kern::batchnorm_backward_eval(cache_x.ptr(), dy.ptr(), N, features, S,
                                          gamma.value.ptr(), eps, running_mean.ptr(),
                                          running_var.ptr(), gamma.grad.ptr(), beta.grad.ptr(),
                                          need_dx ? dx.ptr() : nullptr);
        }
        return dx;
    }

    std::vector<ParamTensor<T>*> params() { return {&gamma, &beta}; }
};

template <typename T>
struct ReLU {
    Tensor<T> cache_x;

    Tensor<T> forward(const Tensor<T>& x, bool) {
        cache_x = x;
        Tensor<T> y(x.shape);
        kern::relu_forward(x.ptr(), x.numel(), y.ptr());
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(cache_x.shape);
        kern::relu_backward(cache_x.ptr(), dy.ptr(), cache_x.numel(), dx.ptr());
        return dx;
    }
};

template <typename T>
struct MaxPool2x2 {
    std::vector<int> in_shape;
    Tensor<uint8_t> argmax;

    Tensor<T> forward(const Tensor<T>& x, bool) {
        const int N = x.shape[0], F = x.shape[1], H = x.shape[2], W = x.shape[3];
        if (H % 2 != 0 || W % 2 != 0)
            throw std::invalid_argument("maxpool2x2 needs even spatial dims");
        in_shape = x.shape;
        Tensor<T> y({N, F, H / 2, W / 2});
        argmax = Tensor<uint8_t>({N, F, H / 2, W / 2});
        kern::maxpool2x2_forward(x.ptr(), N, F, H, W, y.ptr(), argmax.ptr());
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(in_shape);
        kern::maxpool2x2_backward(dy.ptr(), argmax.ptr(), in_shape[0], in_shape[1], in_shape[2],
                                  in_shape[3], dx.ptr());
        return dx;
    }
};

template <typename T>
struct Dense {
    int in_dim = 0, out_dim = 0;
    ParamTensor<T> weight;  // [D, M]
    ParamTensor<T> bias;    // [M]
    Tensor<T> cache_x;

    Dense() = default;
    Dense(int d, int m, std::string name)
        : in_dim(d), out_dim(m), weight({d, m}, name + ".weight"), bias({m}, name + ".bias") {}

    // x is [N, D] (callers flatten higher-rank activations first)
    Tensor<T> forward(const Tensor<T>& x, bool) {
        const int N = x.shape[0];
        if (x.shape[1] != in_dim) throw std::invalid_argument("dense input width mismatch");
        cache_x = x;
        Tensor<T> y({N, out_dim});
        kern::dense_forward(x.ptr(), N, in_dim, weight.value.ptr(), bias.value.ptr(), y.ptr(),
                            out_dim);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, bool need_dx = true) {
        const int N = cache_x.shape[0];
        Tensor<T> dx = need_dx ? Tensor<T>(cache_x.shape) : Tensor<T>();
        kern::dense_backward(cache_x.ptr(), dy.ptr(), N, in_dim, weight.value.ptr(), out_dim,
                             need_dx ? dx.ptr() : nullptr, weight.grad.ptr(), bias.grad.ptr());
        return dx;
    }

    std::vector<ParamTensor<T>*> params() { return {&weight, &bias}; }
};

// conv -> batchnorm -> relu -> 2x2 maxpool; halves the spatial size
template <typename T>
struct ConvStage {
    Conv2d<T> conv;
    BatchNorm2d<T> bn;
    ReLU<T> relu;
    MaxPool2x2<T> pool;

    ConvStage() = default;
    ConvStage(int in_c, int out_c, int ks, const std::string& name)
        : conv(in_c, out_c, ks, name + ".conv"), bn(out_c, name + ".bn") {}

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        return pool.forward(relu.forward(bn.forward(conv.forward(x, train), train), train), train);
    }

    Tensor<T> backward(const Tensor<T>& dy, bool need_dx = true) {
        return conv.backward(bn.backward(relu.backward(pool.backward(dy))), need_dx);
    }

    std::vector<ParamTensor<T>*> params() {
        std::vector<ParamTensor<T>*> out = conv.params();
        for (auto* p : bn.params()) out.push_back(p);
        return out;
    }
};

// reshape without copying element order; total size must match
template <typename T>
Tensor<T> reshape(Tensor<T> x, std::vector<int> new_shape) {
    Tensor<T> y;
    y.shape = std::move(new_shape);
    size_t n = 1;
    for (int d : y.shape) n *= static_cast<size_t>(d);
    if (n != x.data.size()) throw std::invalid_argument("reshape size mismatch");
    y.data = std::move(x.data);
    return y;
}

}  // namespace twopath
