#include "twopath/kernels.hpp"

#include <cmath>
#include <cstring>
#include <vector>

namespace twopath::kern {

template <typename T>
void matmul_nn(const T* A, const T* B, T* C, int M, int K, int N) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; ++i) {
        T* crow = C + static_cast<size_t>(i) * N;
        for (int j = 0; j < N; ++j) crow[j] = T(0);
        const T* arow = A + static_cast<size_t>(i) * K;
        for (int k = 0; k < K; ++k) {
            const T a = arow[k];
            const T* brow = B + static_cast<size_t>(k) * N;
            for (int j = 0; j < N; ++j) crow[j] += a * brow[j];
        }
    }
}

template <typename T>
void matmul_tn(const T* A, const T* B, T* C, int K, int M, int N, bool accumulate) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; ++i) {
        T* crow = C + static_cast<size_t>(i) * N;
        if (!accumulate)
            for (int j = 0; j < N; ++j) crow[j] = T(0);
        for (int k = 0; k < K; ++k) {
            const T a = A[static_cast<size_t>(k) * M + i];
            const T* brow = B + static_cast<size_t>(k) * N;
            for (int j = 0; j < N; ++j) crow[j] += a * brow[j];
        }
    }
}

template <typename T>
void transpose(const T* A, T* AT, int M, int N) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j)
            AT[static_cast<size_t>(j) * M + i] = A[static_cast<size_t>(i) * N + j];
}

namespace {

// col[r=(c,u,v), s=(i,j)] = x[c, i+u-pad, j+v-pad], zero outside.
template <typename T>
void im2col(const T* x, int C, int H, int W, int ks, int pad, int Ho, int Wo, T* col) {
    const int S = Ho * Wo;
    int r = 0;
    for (int c = 0; c < C; ++c) {
        const T* xc = x + static_cast<size_t>(c) * H * W;
        for (int u = 0; u < ks; ++u) {
            for (int v = 0; v < ks; ++v, ++r) {
                T* crow = col + static_cast<size_t>(r) * S;
                for (int i = 0; i < Ho; ++i) {
                    const int h = i + u - pad;
                    T* dst = crow + static_cast<size_t>(i) * Wo;
                    if (h < 0 || h >= H) {
                        for (int j = 0; j < Wo; ++j) dst[j] = T(0);
                        continue;
                    }
                    const T* src = xc + static_cast<size_t>(h) * W;
                    for (int j = 0; j < Wo; ++j) {
                        const int w = j + v - pad;
                        dst[j] = (w >= 0 && w < W) ? src[w] : T(0);
                    }
                }
            }
        }
    }
}

// Transposed layout, colT[s, r]; used by the weight-gradient pass.
template <typename T>
void im2colT(const T* x, int C, int H, int W, int ks, int pad, int Ho, int Wo, T* colT) {
    const int R = C * ks * ks;
    int r = 0;
    for (int c = 0; c < C; ++c) {
        const T* xc = x + static_cast<size_t>(c) * H * W;
        for (int u = 0; u < ks; ++u) {
            for (int v = 0; v < ks; ++v, ++r) {
                for (int i = 0; i < Ho; ++i) {
                    const int h = i + u - pad;
                    for (int j = 0; j < Wo; ++j) {
                        const int w = j + v - pad;
                        const T val =
                            (h >= 0 && h < H && w >= 0 && w < W) ? xc[static_cast<size_t>(h) * W + w] : T(0);
                        colT[(static_cast<size_t>(i) * Wo + j) * R + r] = val;
                    }
                }
            }
        }
    }
}

}  // namespace

template <typename T>
void conv2d_forward(const T* x, int N, int C, int H, int W, const T* k, int F, int ks, int pad,
                    const T* bias, T* y) {
    const int Ho = conv_out_dim(H, ks, pad), Wo = conv_out_dim(W, ks, pad);
    const int R = C * ks * ks, S = Ho * Wo;
#pragma omp parallel
    {
        std::vector<T> col(static_cast<size_t>(R) * S);
#pragma omp for schedule(static)
        for (int n = 0; n < N; ++n) {
            const T* xn = x + static_cast<size_t>(n) * C * H * W;
            T* yn = y + static_cast<size_t>(n) * F * S;
            im2col(xn, C, H, W, ks, pad, Ho, Wo, col.data());
            for (int f = 0; f < F; ++f) {
                T* yrow = yn + static_cast<size_t>(f) * S;
                const T b = bias[f];
                for (int s = 0; s < S; ++s) yrow[s] = b;
                const T* krow = k + static_cast<size_t>(f) * R;
                for (int r = 0; r < R; ++r) {
                    const T kv = krow[r];
                    const T* crow = col.data() + static_cast<size_t>(r) * S;
                    for (int s = 0; s < S; ++s) yrow[s] += kv * crow[s];
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward(const T* x, const T* dy, int N, int C, int H, int W, const T* k, int F,
                     int ks, int pad, T* dx, T* dk, T* dbias) {
    const int Ho = conv_out_dim(H, ks, pad), Wo = conv_out_dim(W, ks, pad);
    const int R = C * ks * ks, S = Ho * Wo;

    // Parameter gradients: images serial (accumulation order), filters parallel.
    {
        std::vector<T> colT(static_cast<size_t>(S) * R);
        for (int n = 0; n < N; ++n) {
            const T* xn = x + static_cast<size_t>(n) * C * H * W;
            const T* dyn = dy + static_cast<size_t>(n) * F * S;
            im2colT(xn, C, H, W, ks, pad, Ho, Wo, colT.data());
#pragma omp parallel for schedule(static)
            for (int f = 0; f < F; ++f) {
                const T* dyrow = dyn + static_cast<size_t>(f) * S;
                T* dkrow = dk + static_cast<size_t>(f) * R;
                for (int s = 0; s < S; ++s) {
                    const T g = dyrow[s];
                    dbias[f] += g;
                    const T* ctrow = colT.data() + static_cast<size_t>(s) * R;
                    for (int r = 0; r < R; ++r) dkrow[r] += g * ctrow[r];
                }
            }
        }
    }

    if (!dx) return;

#pragma omp parallel
    {
        std::vector<T> dcol(static_cast<size_t>(R) * S);
#pragma omp for schedule(static)
        for (int n = 0; n < N; ++n) {
            const T* dyn = dy + static_cast<size_t>(n) * F * S;
            // dcol = k^T * dy_n, filter sum f ascending
            for (int r = 0; r < R; ++r) {
                T* drow = dcol.data() + static_cast<size_t>(r) * S;
                for (int s = 0; s < S; ++s) drow[s] = T(0);
                for (int f = 0; f < F; ++f) {
                    const T kv = k[static_cast<size_t>(f) * R + r];
                    const T* dyrow = dyn + static_cast<size_t>(f) * S;
                    for (int s = 0; s < S; ++s) drow[s] += kv * dyrow[s];
                }
            }
            // col2im scatter, taps (c,u,v) ascending
            T* dxn = dx + static_cast<size_t>(n) * C * H * W;
            for (size_t i = 0; i < static_cast<size_t>(C) * H * W; ++i) dxn[i] = T(0);
            int r = 0;
            for (int c = 0; c < C; ++c) {
                T* dxc = dxn + static_cast<size_t>(c) * H * W;
                for (int u = 0; u < ks; ++u) {
                    for (int v = 0; v < ks; ++v, ++r) {
                        const T* drow = dcol.data() + static_cast<size_t>(r) * S;
                        for (int i = 0; i < Ho; ++i) {
                            const int h = i + u - pad;
                            if (h < 0 || h >= H) continue;
                            T* dst = dxc + static_cast<size_t>(h) * W;
                            const T* src = drow + static_cast<size_t>(i) * Wo;
                            for (int j = 0; j < Wo; ++j) {
                                const int w = j + v - pad;
                                if (w >= 0 && w < W) dst[w] += src[j];
                            }
                        }
                    }
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
#pragma omp parallel for schedule(static)
    for (int f = 0; f < F; ++f) {
        T sum = T(0);
        for (int n = 0; n < N; ++n) {
            const T* xr = x + (static_cast<size_t>(n) * F + f) * S;
            for (int s = 0; s < S; ++s) sum += xr[s];
        }
        const T mean = sum * inv_m;
        T var_sum = T(0);
        for (int n = 0; n < N; ++n) {
            const T* xr = x + (static_cast<size_t>(n) * F + f) * S;
            for (int s = 0; s < S; ++s) {
                const T d = xr[s] - mean;
                var_sum += d * d;
            }
        }
        const T var = var_sum * inv_m;
        const T invstd = T(1) / std::sqrt(var + eps);
        save_mean[f] = mean;
        save_invstd[f] = invstd;
        running_mean[f] = (T(1) - momentum) * running_mean[f] + momentum * mean;
        running_var[f] = (T(1) - momentum) * running_var[f] + momentum * var;
        const T g = gamma[f], b = beta[f];
        for (int n = 0; n < N; ++n) {
            const T* xr = x + (static_cast<size_t>(n) * F + f) * S;
            T* yr = y + (static_cast<size_t>(n) * F + f) * S;
            for (int s = 0; s < S; ++s) yr[s] = (xr[s] - mean) * invstd * g + b;
        }
    }
}

template <typename T>
void batchnorm_forward_eval(const T* x, int N, int F, int S, const T* gamma, const T* beta, T eps,
                            const T* running_mean, const T* running_var, T* y) {
#pragma omp parallel for schedule(static)
    for (int f = 0; f < F; ++f) {
        const T mean = running_mean[f];
        const T invstd = T(1) / std::sqrt(running_var[f] + eps);
        const T g = gamma[f], b = beta[f];
        for (int n = 0; n < N; ++n) {
            const T* xr = x + (static_cast<size_t>(n) * F + f) * S;
            T* yr = y + (static_cast<size_t>(n) * F + f) * S;
            for (int s = 0; s < S; ++s) yr[s] = (xr[s] - mean) * invstd * g + b;
        }
    }
}

template <typename T>
void batchnorm_backward_train(const T* x, const T* dy, int N, int F, int S, const T* gamma,
                              const T* save_mean, const T* save_invstd, T* dgamma, T* dbeta,
                              T* dx) {
    const T inv_m = T(1) / (static_cast<T>(N) * static_cast<T>(S));
#pragma omp parallel for schedule(static)
    for (int f = 0; f < F; ++f) {
        const T mean = save_mean[f], invstd = save_invstd[f];
        T s1 = T(0);  // sum dy
        T s2 = T(0);  // sum dy * xhat
        for (int n = 0; n < N; ++n) {
            const T* xr = x + (static_cast<size_t>(n) * F + f) * S;
            const T* dyr = dy + (static_cast<size_t>(n) * F + f) * S;
            for (int s = 0; s < S; ++s) {
                s1 += dyr[s];
                s2 += dyr[s] * (xr[s] - mean) * invstd;
            }
        }
        dbeta[f] += s1;
        dgamma[f] += s2;
        if (!dx) continue;
        const T g = gamma[f];
        const T c1 = s1 * inv_m, c2 = s2 * inv_m;
        for (int n = 0; n < N; ++n) {
            const T* xr = x + (static_cast<size_t>(n) * F + f) * S;
            const T* dyr = dy + (static_cast<size_t>(n) * F + f) * S;
            T* dxr = dx + (static_cast<size_t>(n) * F + f) * S;
            for (int s = 0; s < S; ++s) {
                const T xhat = (xr[s] - mean) * invstd;
                dxr[s] = g * invstd * (dyr[s] - c1 - xhat * c2);
            }
        }
    }
}

template <typename T>
void batchnorm_backward_eval(const T* x, const T* dy, int N, int F, int S, const T* gamma, T eps,
                             const T* running_mean, const T* running_var, T* dgamma, T* dbeta,
                             T* dx) {
#pragma omp parallel for schedule(static)
    for (int f = 0; f < F; ++f) {
        const T mean = running_mean[f];
        const T invstd = T(1) / std::sqrt(running_var[f] + eps);
        T s1 = T(0), s2 = T(0);
        for (int n = 0; n < N; ++n) {
            const T* xr = x + (static_cast<size_t>(n) * F + f) * S;
            const T* dyr = dy + (static_cast<size_t>(n) * F + f) * S;
            for (int s = 0; s < S; ++s) {
                s1 += dyr[s];
                s2 += dyr[s] * (xr[s] - mean) * invstd;
            }
        }
        dbeta[f] += s1;
        dgamma[f] += s2;
        if (!dx) continue;
        const T scale = gamma[f] * invstd;
        for (int n = 0; n < N; ++n) {
            const T* dyr = dy + (static_cast<size_t>(n) * F + f) * S;
            T* dxr = dx + (static_cast<size_t>(n) * F + f) * S;
            for (int s = 0; s < S; ++s) dxr[s] = dyr[s] * scale;
        }
    }
}

template <typename T>
void maxpool2x2_forward(const T* x, int N, int F, int H, int W, T* y, uint8_t* argmax) {
    const int Ho = H / 2, Wo = W / 2;
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
        for (int f = 0; f < F; ++f) {
            const T* xc = x + (static_cast<size_t>(n) * F + f) * H * W;
            T* yc = y + (static_cast<size_t>(n) * F + f) * Ho * Wo;
            uint8_t* ac = argmax + (static_cast<size_t>(n) * F + f) * Ho * Wo;
            for (int i = 0; i < Ho; ++i) {
                for (int j = 0; j < Wo; ++j) {
                    const T* w0 = xc + static_cast<size_t>(2 * i) * W + 2 * j;
                    T best = w0[0];
                    uint8_t bi = 0;
                    if (w0[1] > best) { best = w0[1]; bi = 1; }
                    if (w0[W] > best) { best = w0[W]; bi = 2; }
                    if (w0[W + 1] > best) { best = w0[W + 1]; bi = 3; }
                    yc[static_cast<size_t>(i) * Wo + j] = best;
                    ac[static_cast<size_t>(i) * Wo + j] = bi;
                }
            }
        }
    }
}

template <typename T>
void maxpool2x2_backward(const T* dy, const uint8_t* argmax, int N, int F, int H, int W, T* dx) {
    const int Ho = H / 2, Wo = W / 2;
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
        for (int f = 0; f < F; ++f) {
            const T* dyc = dy + (static_cast<size_t>(n) * F + f) * Ho * Wo;
            const uint8_t* ac = argmax + (static_cast<size_t>(n) * F + f) * Ho * Wo;
            T* dxc = dx + (static_cast<size_t>(n) * F + f) * H * W;
            for (size_t i = 0; i < static_cast<size_t>(H) * W; ++i) dxc[i] = T(0);
            for (int i = 0; i < Ho; ++i) {
                for (int j = 0; j < Wo; ++j) {
                    const uint8_t b = ac[static_cast<size_t>(i) * Wo + j];
                    const int h = 2 * i + (b >> 1), w = 2 * j + (b & 1);
                    dxc[static_cast<size_t>(h) * W + w] = dyc[static_cast<size_t>(i) * Wo + j];
                }
            }
        }
    }
}

template <typename T>
void relu_forward(const T* x, size_t n, T* y) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* x, const T* dy, size_t n, T* dx) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
}

template <typename T>
void dense_forward(const T* x, int N, int D, const T* w, const T* b, T* y, int M) {
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
        T* yrow = y + static_cast<size_t>(n) * M;
        for (int m = 0; m < M; ++m) yrow[m] = b[m];
        const T* xrow = x + static_cast<size_t>(n) * D;
        for (int d = 0; d < D; ++d) {
            const T xv = xrow[d];
            const T* wrow = w + static_cast<size_t>(d) * M;
            for (int m = 0; m < M; ++m) yrow[m] += xv * wrow[m];
        }
    }
}

template <typename T>
void dense_backward(const T* x, const T* dy, int N, int D, const T* w, int M, T* dx, T* dw,
                    T* db) {
    // dw[d,m] += sum_n x[n,d] dy[n,m]: n ascending
    matmul_tn(x, dy, dw, N, D, M, true);
    for (int n = 0; n < N; ++n) {
        const T* dyrow = dy + static_cast<size_t>(n) * M;
        for (int m = 0; m < M; ++m) db[m] += dyrow[m];
    }
    if (!dx) return;
    // dx = dy * w^T via explicit transpose so the inner loop stays elementwise
    std::vector<T> wt(static_cast<size_t>(M) * D);
    transpose(w, wt.data(), D, M);
    matmul_nn(dy, wt.data(), dx, N, M, D);
}

template void matmul_nn<float>(const float*, const float*, float*, int, int, int);
template void matmul_nn<double>(const double*, const double*, double*, int, int, int);
template void matmul_tn<float>(const float*, const float*, float*, int, int, int, bool);
template void matmul_tn<double>(const double*, const double*, double*, int, int, int, bool);
template void transpose<float>(const float*, float*, int, int);
template void transpose<double>(const double*, double*, int, int);
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
template void batchnorm_forward_eval<float>(const float*, int, int, int, const float*,
                                            const float*, float, const float*, const float*,
                                            float*);
template void batchnorm_forward_eval<double>(const double*, int, int, int, const double*,
                                             const double*, double, const double*, const double*,
                                             double*);
template void batchnorm_backward_train<float>(const float*, const float*, int, int, int,
                                              const float*, const float*, const float*, float*,
                                              float*, float*);
template void batchnorm_backward_train<double>(const double*, const double*, int, int, int,
                                               const double*, const double*, const double*,
                                               double*, double*, double*);
template void batchnorm_backward_eval<float>(const float*, const float*, int, int, int,
                                             const float*, float, const float*, const float*,
                                             float*, float*, float*);
template void batchnorm_backward_eval<double>(const double*, const double*, int, int, int,
                                              const double*, double, const double*, const double*,
                                              double*, double*, double*);
template void maxpool2x2_forward<float>(const float*, int, int, int, int, float*, uint8_t*);
template void maxpool2x2_forward<double>(const double*, int, int, int, int, double*, uint8_t*);
template void maxpool2x2_backward<float>(const float*, const uint8_t*, int, int, int, int, float*);
template void maxpool2x2_backward<double>(const double*, const uint8_t*, int, int, int, int,
                                          double*);
template void relu_forward<float>(const float*, size_t, float*);
template void relu_forward<double>(const double*, size_t, double*);
template void relu_backward<float>(const float*, const float*, size_t, float*);
template void relu_backward<double>(const double*, const double*, size_t, double*);
template void dense_forward<float>(const float*, int, int, const float*, const float*, float*,
                                   int);
template void dense_forward<double>(const double*, int, int, const double*, const double*,
                                    double*, int);
template void dense_backward<float>(const float*, const float*, int, int, const float*, int,
                                    float*, float*, float*);
template void dense_backward<double>(const double*, const double*, int, int, const double*, int,
                                     double*, double*, double*);

}  // namespace twopath::kern
