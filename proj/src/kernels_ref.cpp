#include "twopath/kernels.hpp"

#include <cmath>
#include <vector>

// Naive single-threaded mirrors of the production kernels. These follow the
// same per-output-element accumulation order, so tests can demand bitwise
// equality rather than a tolerance.

namespace twopath::kernref {

template <typename T>
void matmul_nn(const T* A, const T* B, T* C, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        for (int j = 0; j < N; ++j) {
            T acc = T(0);
            for (int k = 0; k < K; ++k)
                acc += A[static_cast<size_t>(i) * K + k] * B[static_cast<size_t>(k) * N + j];
            C[static_cast<size_t>(i) * N + j] = acc;
        }
    }
}

template <typename T>
void conv2d_forward(const T* x, int N, int C, int H, int W, const T* k, int F, int ks, int pad,
                    const T* bias, T* y) {
    const int Ho = conv_out_dim(H, ks, pad), Wo = conv_out_dim(W, ks, pad);
    for (int n = 0; n < N; ++n) {
        const T* xn = x + static_cast<size_t>(n) * C * H * W;
        for (int f = 0; f < F; ++f) {
            const T* kf = k + static_cast<size_t>(f) * C * ks * ks;
            for (int i = 0; i < Ho; ++i) {
                for (int j = 0; j < Wo; ++j) {
                    T acc = bias[f];
                    // taps (c,u,v) ascending; out-of-range pixels contribute an
                    // explicit zero term, matching the im2col path exactly
                    for (int c = 0; c < C; ++c) {
                        for (int u = 0; u < ks; ++u) {
                            for (int v = 0; v < ks; ++v) {
                                const int h = i + u - pad, w = j + v - pad;
                                const T xv = (h >= 0 && h < H && w >= 0 && w < W)
                                                 ? xn[(static_cast<size_t>(c) * H + h) * W + w]
                                                 : T(0);
                                acc += kf[(static_cast<size_t>(c) * ks + u) * ks + v] * xv;
                            }
                        }
                    }
                    y[((static_cast<size_t>(n) * F + f) * Ho + i) * Wo + j] = acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward(const T* x, const T* dy, int N, int C, int H, int W, const T* k, int F,
                     int ks, int pad, T* dx, T* dk, T* dbias) {
    const int Ho = conv_out_dim(H, ks, pad), Wo = conv_out_dim(W, ks, pad);

    // dk[f,c,u,v] and dbias[f]: accumulate over flat (n,i,j) ascending
    for (int n = 0; n < N; ++n) {
        const T* xn = x + static_cast<size_t>(n) * C * H * W;
        for (int f = 0; f < F; ++f) {
            for (int i = 0; i < Ho; ++i) {
                for (int j = 0; j < Wo; ++j) {
                    const T g = dy[((static_cast<size_t>(n) * F + f) * Ho + i) * Wo + j];
                    dbias[f] += g;
                    for (int c = 0; c < C; ++c) {
                        for (int u = 0; u < ks; ++u) {
                            for (int v = 0; v < ks; ++v) {
                                const int h = i + u - pad, w = j + v - pad;
                                const T xv = (h >= 0 && h < H && w >= 0 && w < W)
                                                 ? xn[(static_cast<size_t>(c) * H + h) * W + w]
                                                 : T(0);
                                dk[((static_cast<size_t>(f) * C + c) * ks + u) * ks + v] += g * xv;
                            }
                        }
                    }
                }
            }
        }
    }

    if (!dx) return;

    // dx[c,h,w]: taps (u,v) ascending; each tap's sum over filters is formed
    // in its own accumulator before being added
    for (int n = 0; n < N; ++n) {
        T* dxn = dx + static_cast<size_t>(n) * C * H * W;
        const T* dyn = dy + static_cast<size_t>(n) * F * Ho * Wo;
        for (int c = 0; c < C; ++c) {
            for (int h = 0; h < H; ++h) {
                for (int w = 0; w < W; ++w) {
                    T acc = T(0);
                    for (int u = 0; u < ks; ++u) {
                        for (int v = 0; v < ks; ++v) {
                            const int i = h - u + pad, j = w - v + pad;
                            if (i < 0 || i >= Ho || j < 0 || j >= Wo) continue;
                            T tap = T(0);
                            for (int f = 0; f < F; ++f)
                                tap += k[((static_cast<size_t>(f) * C + c) * ks + u) * ks + v] *
                                       dyn[(static_cast<size_t>(f) * Ho + i) * Wo + j];
                            acc += tap;
                        }
                    }
                    dxn[(static_cast<size_t>(c) * H + h) * W + w] = acc;
                }
            }
        }
    }
}

template <typename T>
void batchnorm_forward_train(const T* x, int N, int F, int S, const T* gamma, const T* beta,
                             T eps, T momentum, T* running_mean, T* running_var, T* y,
                             T* save_mean, T* save_invstd) {
    const T inv_m = T(1) / (static_cast<T>(N) * static_cast<T>(S));
    for (int f = 0; f < F; ++f) {
        T sum = T(0);
        for (int n = 0; n < N; ++n)
            for (int s = 0; s < S; ++s) sum += x[(static_cast<size_t>(n) * F + f) * S + s];
        const T mean = sum * inv_m;
        T var_sum = T(0);
        for (int n = 0; n < N; ++n)
            for (int s = 0; s < S; ++s) {
                const T d = x[(static_cast<size_t>(n) * F + f) * S + s] - mean;
                var_sum += d * d;
            }
        const T var = var_sum * inv_m;
        const T invstd = T(1) / std::sqrt(var + eps);
        save_mean[f] = mean;
        save_invstd[f] = invstd;
        running_mean[f] = (T(1) - momentum) * running_mean[f] + momentum * mean;
        running_var[f] = (T(1) - momentum) * running_var[f] + momentum * var;
        for (int n = 0; n < N; ++n)
            for (int s = 0; s < S; ++s) {
                const size_t idx = (static_cast<size_t>(n) * F + f) * S + s;
                y[idx] = (x[idx] - mean) * invstd * gamma[f] + beta[f];
            }
    }
}

template <typename T>
void batchnorm_backward_train(const T* x, const T* dy, int N, int F, int S, const T* gamma,
                              const T* save_mean, const T* save_invstd, T* dgamma, T* dbeta,
                              T* dx) {
    const T inv_m = T(1) / (static_cast<T>(N) * static_cast<T>(S));
    for (int f = 0; f < F; ++f) {
        const T mean = save_mean[f], invstd = save_invstd[f];
        T s1 = T(0), s2 = T(0);
        for (int n = 0; n < N; ++n)
            for (int s = 0; s < S; ++s) {
                const size_t idx = (static_cast<size_t>(n) * F + f) * S + s;
                s1 += dy[idx];
                s2 += dy[idx] * (x[idx] - mean) * invstd;
            }
        dbeta[f] += s1;
        dgamma[f] += s2;
        if (!dx) continue;
        const T c1 = s1 * inv_m, c2 = s2 * inv_m;
        for (int n = 0; n < N; ++n)
            for (int s = 0; s < S; ++s) {
                const size_t idx = (static_cast<size_t>(n) * F + f) * S + s;
                const T xhat = (x[idx] - mean) * invstd;
                dx[idx] = gamma[f] * invstd * (dy[idx] - c1 - xhat * c2);
            }
    }
}

template <typename T>
void maxpool2x2_forward(const T* x, int N, int F, int H, int W, T* y, uint8_t* argmax) {
    const int Ho = H / 2, Wo = W / 2;
    for (int n = 0; n < N; ++n) {
        for (int f = 0; f < F; ++f) {
            const T* xc = x + (static_cast<size_t>(n) * F + f) * H * W;
            for (int i = 0; i < Ho; ++i) {
                for (int j = 0; j < Wo; ++j) {
                    T best = xc[static_cast<size_t>(2 * i) * W + 2 * j];
                    uint8_t bi = 0;
                    const T cands[4] = {best, xc[static_cast<size_t>(2 * i) * W + 2 * j + 1],
                                        xc[static_cast<size_t>(2 * i + 1) * W + 2 * j],
                                        xc[static_cast<size_t>(2 * i + 1) * W + 2 * j + 1]};
                    for (uint8_t b = 1; b < 4; ++b)
                        if (cands[b] > best) { best = cands[b]; bi = b; }
                    y[((static_cast<size_t>(n) * F + f) * Ho + i) * Wo + j] = best;
                    argmax[((static_cast<size_t>(n) * F + f) * Ho + i) * Wo + j] = bi;
                }
            }
        }
    }
}

template <typename T>
void dense_forward(const T* x, int N, int D, const T* w, const T* b, T* y, int M) {
    for (int n = 0; n < N; ++n) {
        for (int m = 0; m < M; ++m) {
            T acc = b[m];
            for (int d = 0; d < D; ++d)
                acc += x[static_cast<size_t>(n) * D + d] * w[static_cast<size_t>(d) * M + m];
            y[static_cast<size_t>(n) * M + m] = acc;
        }
    }
}

template <typename T>
void dense_backward(const T* x, const T* dy, int N, int D, const T* w, int M, T* dx, T* dw,
                    T* db) {
    for (int d = 0; d < D; ++d)
        for (int m = 0; m < M; ++m) {
            T acc = T(0);
            for (int n = 0; n < N; ++n)
                acc += x[static_cast<size_t>(n) * D + d] * dy[static_cast<size_t>(n) * M + m];
            dw[static_cast<size_t>(d) * M + m] += acc;
        }
    for (int m = 0; m < M; ++m) {
        T acc = T(0);
        for (int n = 0; n < N; ++n) acc += dy[static_cast<size_t>(n) * M + m];
        db[m] += acc;
    }
    if (!dx) return;
    for (int n = 0; n < N; ++n)
        for (int d = 0; d < D; ++d) {
            T acc = T(0);
            for (int m = 0; m < M; ++m)
                acc += dy[static_cast<size_t>(n) * M + m] * w[static_cast<size_t>(d) * M + m];
            dx[static_cast<size_t>(n) * D + d] = acc;
        }
}

template void matmul_nn<float>(const float*, const float*, float*, int, int, int);
template void matmul_nn<double>(const double*, const double*, double*, int, int, int);
template void conv2d_forward<float>(const float*, int, int, int, int, const float*, int, int, int,
                                    const float*, float*);
template void conv2d_forward<double>(const double*, int, int, int, int, const double*, int, int,
                                     int, const double*, double*);
template void conv2d_backward<float>(const float*, const float*, int, int, int, int, const float*,
                                     int, int, int, float*, float*, float*);
template void conv2d_backward<double>(const double*, const double*, int, int, int, int,
                                      const double*, int, int, int, double*, double*, double*);
template void batchnorm_forward_train<float>(const float*, int, int, int, const float*,
                                             const float*, float, float, float*, float*, float*,
                                             float*, float*);
template void batchnorm_forward_train<double>(const double*, int, int, int, const double*,
                                              const double*, double, double, double*, double*,
                                              double*, double*, double*);
template void batchnorm_backward_train<float>(const float*, const float*, int, int, int,
                                              const float*, const float*, const float*, float*,
                                              float*, float*);
template void batchnorm_backward_train<double>(const double*, const double*, int, int, int,
                                               const double*, const double*, const double*,
                                               double*, double*, double*);
template void maxpool2x2_forward<float>(const float*, int, int, int, int, float*, uint8_t*);
template void maxpool2x2_forward<double>(const double*, int, int, int, int, double*, uint8_t*);
template void dense_forward<float>(const float*, int, int, const float*, const float*, float*,
                                   int);
template void dense_forward<double>(const double*, int, int, const double*, const double*,
                                    double*, int);
template void dense_backward<float>(const float*, const float*, int, int, const float*, int,
                                    float*, float*, float*);
template void dense_backward<double>(const double*, const double*, int, int, const double*, int,
                                     double*, double*, double*);

}  // namespace twopath::kernref
