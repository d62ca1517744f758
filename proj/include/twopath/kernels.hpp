#pragma once

#include <cstddef>
#include <cstdint>

// Layer-primitive kernels. twopath::kern holds the OpenMP production kernels,
// twopath::kernref a plain serial implementation kept as a test reference.
//
// Both namespaces implement the same accumulation contract: every output
// element is a sum over its contributing terms in one fixed order (documented
// per kernel below), so results are bit-identical between the two and across
// any OpenMP thread count. Built with -ffp-contract=off.

namespace twopath {

// Output spatial size of a stride-1 convolution.
inline int conv_out_dim(int in, int ksize, int pad) { return in + 2 * pad - ksize + 1; }

namespace kern {

// C[M,N] = A[M,K] * B[K,N]. Per element: k ascending.
template <typename T>
void matmul_nn(const T* A, const T* B, T* C, int M, int K, int N);

// C[M,N] = A^T * B with A stored [K,M]. Per element: k ascending.
// accumulate=true adds into C instead of overwriting.
template <typename T>
void matmul_tn(const T* A, const T* B, T* C, int K, int M, int N, bool accumulate);

// AT[N,M] <- transpose of A[M,N] (exact, no arithmetic).
template <typename T>
void transpose(const T* A, T* AT, int M, int N);

// y[N,F,Ho,Wo] = conv(x[N,C,H,W], k[F,C,ks,ks], pad) + bias[F], stride 1.
// Per element: bias first, then (c,u,v) ascending.
template <typename T>
void conv2d_forward(const T* x, int N, int C, int H, int W, const T* k, int F, int ks, int pad,
                    const T* bias, T* y);

// dx[N,C,H,W] (overwritten), dk[F,C,ks,ks] and dbias[F] accumulated (+=).
// dx may be null to skip the input gradient.
// dx per element: taps (u,v) ascending, each tap's filter sum (f ascending)
// formed first, then added. dk/dbias per element: (n, i, j) ascending.
template <typename T>
void conv2d_backward(const T* x, const T* dy, int N, int C, int H, int W, const T* k, int F,
                     int ks, int pad, T* dx, T* dk, T* dbias);

// Batch norm over [N,F,S] with S = H*W. Training mode computes batch
// statistics (sums flat (n,s) ascending per channel), updates running stats
// with the given momentum, and saves mean/invstd for the backward pass.
template <typename T>
void batchnorm_forward_train(const T* x, int N, int F, int S, const T* gamma, const T* beta,
                             T eps, T momentum, T* running_mean, T* running_var, T* y,
                             T* save_mean, T* save_invstd);

template <typename T>
void batchnorm_forward_eval(const T* x, int N, int F, int S, const T* gamma, const T* beta, T eps,
                            const T* running_mean, const T* running_var, T* y);

// Training-mode backward using the saved batch statistics.
// dgamma/dbeta accumulated (+=), dx overwritten (may be null).
template <typename T>
void batchnorm_backward_train(const T* x, const T* dy, int N, int F, int S, const T* gamma,
                              const T* save_mean, const T* save_invstd, T* dgamma, T* dbeta,
                              T* dx);

// Eval-mode backward (running statistics are constants).
template <typename T>
void batchnorm_backward_eval(const T* x, const T* dy, int N, int F, int S, const T* gamma, T eps,
                             const T* running_mean, const T* running_var, T* dgamma, T* dbeta,
                             T* dx);

// 2x2/stride-2 max pooling. argmax stores the window position (0..3, scan
// order) of the max; ties keep the first position scanned.
template <typename T>
void maxpool2x2_forward(const T* x, int N, int F, int H, int W, T* y, uint8_t* argmax);

template <typename T>
void maxpool2x2_backward(const T* dy, const uint8_t* argmax, int N, int F, int H, int W, T* dx);

template <typename T>
void relu_forward(const T* x, std::size_t n, T* y);

// dx = dy where x > 0, else 0 (subgradient at 0 is 0).
template <typename T>
void relu_backward(const T* x, const T* dy, std::size_t n, T* dx);

// y[N,M] = x[N,D] * w[D,M] + b[M]. Per element: bias first, then d ascending.
template <typename T>
void dense_forward(const T* x, int N, int D, const T* w, const T* b, T* y, int M);

// dx overwritten (may be null), dw/db accumulated (+=).
// dx per element: m ascending. dw per element: n ascending. db: (n) ascending.
template <typename T>
void dense_backward(const T* x, const T* dy, int N, int D, const T* w, int M, T* dx, T* dw,
                    T* db);

}  // namespace kern

// Serial reference implementations, same contracts; used by tests and the
// kernel benchmark only.
namespace kernref {

template <typename T>
void matmul_nn(const T* A, const T* B, T* C, int M, int K, int N);

template <typename T>
void conv2d_forward(const T* x, int N, int C, int H, int W, const T* k, int F, int ks, int pad,
                    const T* bias, T* y);

template <typename T>
void conv2d_backward(const T* x, const T* dy, int N, int C, int H, int W, const T* k, int F,
                     int ks, int pad, T* dx, T* dk, T* dbias);

template <typename T>
void batchnorm_forward_train(const T* x, int N, int F, int S, const T* gamma, const T* beta,
                             T eps, T momentum, T* running_mean, T* running_var, T* y,
                             T* save_mean, T* save_invstd);

template <typename T>
void batchnorm_backward_train(const T* x, const T* dy, int N, int F, int S, const T* gamma,
                              const T* save_mean, const T* save_invstd, T* dgamma, T* dbeta,
                              T* dx);

template <typename T>
void maxpool2x2_forward(const T* x, int N, int F, int H, int W, T* y, uint8_t* argmax);

template <typename T>
void dense_forward(const T* x, int N, int D, const T* w, const T* b, T* y, int M);

template <typename T>
void dense_backward(const T* x, const T* dy, int N, int D, const T* w, int M, T* dx, T* dw,
                    T* db);

}  // namespace kernref
}  // namespace twopath
