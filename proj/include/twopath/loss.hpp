#pragma once

// Classification and imitation objectives, each returning the scalar loss
// together with the gradients training needs. Gradients carry the 1/N batch
// factor so optimizer steps are batch-size independent.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "twopath/tensor.hpp"

namespace twopath {

template <typename T>
struct CeResult {
    T loss = T(0);
    Tensor<T> probs;    // [N, K] softmax rows
    Tensor<T> dlogits;  // (p - y) / N
};

// Mean cross-entropy of softmax rows against integer labels. Each row is
// shifted by its max before exponentiation, and the log term is evaluated as
// logit - max - log(sum exp), so extreme logits cannot overflow or produce
// log(0).
template <typename T>
CeResult<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels) {
    const int N = logits.shape[0], K = logits.shape[1];
    if (static_cast<int>(labels.size()) != N)
        throw std::invalid_argument("label count does not match batch size");
    CeResult<T> out;
    out.probs = Tensor<T>({N, K});
    out.dlogits = Tensor<T>({N, K});
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
        const int y = labels[n];
        if (y < 0 || y >= K) throw std::invalid_argument("label out of range");
        const T* row = logits.ptr() + static_cast<size_t>(n) * K;
        T m = row[0];
        for (int k = 1; k < K; ++k)
            if (row[k] > m) m = row[k];
        double denom = 0.0;
        for (int k = 0; k < K; ++k) denom += std::exp(static_cast<double>(row[k] - m));
        const double log_denom = std::log(denom);
        total += -(static_cast<double>(row[y] - m) - log_denom);
        T* prow = out.probs.ptr() + static_cast<size_t>(n) * K;
        T* drow = out.dlogits.ptr() + static_cast<size_t>(n) * K;
        for (int k = 0; k < K; ++k) {
            const double p = std::exp(static_cast<double>(row[k] - m)) / denom;
            prow[k] = static_cast<T>(p);
            drow[k] = static_cast<T>((p - (k == y ? 1.0 : 0.0)) / N);
        }
    }
    out.loss = static_cast<T>(total / N);
    return out;
}

// One-hot convenience overload; each row must contain a single 1.
template <typename T>
CeResult<T> softmax_cross_entropy(const Tensor<T>& logits, const Tensor<T>& onehot) {
    const int N = logits.shape[0], K = logits.shape[1];
    if (!logits.same_shape(onehot)) throw std::invalid_argument("one-hot shape mismatch");
    std::vector<int> labels(N, -1);
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            const T v = onehot.ptr()[static_cast<size_t>(n) * K + k];
            if (v == T(1)) {
                if (labels[n] != -1) throw std::invalid_argument("one-hot row has two ones");
                labels[n] = k;
            } else if (v != T(0)) {
                throw std::invalid_argument("one-hot row has a value other than 0 or 1");
            }
        }
        if (labels[n] == -1) throw std::invalid_argument("one-hot row has no one");
    }
    return softmax_cross_entropy(logits, labels);
}

template <typename T>
struct ImitationResult {
    T loss = T(0);
    T ce_term = T(0);       // unweighted cross-entropy component
    T feature_term = T(0);  // unweighted mean squared feature distance
    Tensor<T> probs;
    Tensor<T> dlogits;  // alpha * (p - y) / N
    Tensor<T> dg;       // (1 - alpha) * (g - g_target) / N
};

// Student objective: alpha * CE(logits, labels)
//                  + (1 - alpha)/2 * mean_n ||g - g_target||^2.
// g_target is a constant (the teacher network is frozen); no gradient flows
// into it.
template <typename T>
ImitationResult<T> imitation_loss(const Tensor<T>& logits, const std::vector<int>& labels,
                                  const Tensor<T>& g, const Tensor<T>& g_target, T alpha) {
    if (!g.same_shape(g_target)) throw std::invalid_argument("feature shape mismatch");
    if (g.shape[0] != logits.shape[0]) throw std::invalid_argument("feature batch mismatch");
    if (alpha < T(0) || alpha > T(1)) throw std::invalid_argument("alpha must be in [0, 1]");
    const int N = g.shape[0], D = g.shape[1];

    auto ce = softmax_cross_entropy(logits, labels);

    ImitationResult<T> out;
    out.probs = std::move(ce.probs);
    out.dlogits = std::move(ce.dlogits);
    for (auto& v : out.dlogits.data) v *= alpha;

    out.dg = Tensor<T>({N, D});
    double sq = 0.0;
    for (size_t i = 0; i < g.data.size(); ++i) {
        const double d = static_cast<double>(g.data[i]) - static_cast<double>(g_target.data[i]);
        sq += d * d;
        out.dg.data[i] = static_cast<T>((T(1) - alpha) * static_cast<T>(d) / static_cast<T>(N));
    }
    out.ce_term = ce.loss;
    out.feature_term = static_cast<T>(sq / N);
    out.loss = alpha * out.ce_term + (T(1) - alpha) / T(2) * out.feature_term;
    return out;
}

// argmax prediction per row; lowest index wins ties
template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& logits) {
    const int N = logits.shape[0], K = logits.shape[1];
    std::vector<int> out(N);
    for (int n = 0; n < N; ++n) {
        const T* row = logits.ptr() + static_cast<size_t>(n) * K;
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (row[k] > row[best]) best = k;
        out[n] = best;
    }
    return out;
}

}  // namespace twopath
