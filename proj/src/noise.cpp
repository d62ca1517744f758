#include "twopath/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "twopath/loss.hpp"

namespace twopath {

namespace {

float clip01(float v) { return std::min(1.0f, std::max(0.0f, v)); }

}  // namespace

Tensor<float> add_uniform(const Tensor<float>& image, double U, Rng& rng) {
    if (U < 0.0) throw std::invalid_argument("uniform noise width must be non-negative");
    Tensor<float> out = image;
    if (U == 0.0) return out;
    const float u = static_cast<float>(U);
    for (auto& v : out.data) v = clip01(v + rng.uniform(-u, u));
    return out;
}

Tensor<float> add_salt_pepper(const Tensor<float>& image, double p, Rng& rng) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("salt-pepper proportion must be in [0,1]");
    if (image.shape.size() != 3) throw std::invalid_argument("expected [C,H,W] image");
    Tensor<float> out = image;
    const int C = image.shape[0], H = image.shape[1], W = image.shape[2];
    const int total = H * W;
    const int k = static_cast<int>(std::lround(p * total));
    if (k == 0) return out;

    // first k entries of a partial Fisher-Yates pass = a uniform k-subset
    std::vector<int> pos(total);
    std::iota(pos.begin(), pos.end(), 0);
    for (int i = 0; i < k; ++i)
        std::swap(pos[i], pos[i + static_cast<int>(rng.below(static_cast<uint32_t>(total - i)))]);

    for (int i = 0; i < k; ++i) {
        const float value = rng.bernoulli(0.5) ? 1.0f : 0.0f;
        for (int c = 0; c < C; ++c) out.data[static_cast<size_t>(c) * total + pos[i]] = value;
    }
    return out;
}

Tensor<float> stack_batch(const std::vector<LabeledImage>& images, const std::vector<int>& idx) {
    if (idx.empty()) throw std::invalid_argument("empty batch");
    const auto& s = images.at(idx[0]).pixels.shape;
    Tensor<float> out({static_cast<int>(idx.size()), s[0], s[1], s[2]});
    const size_t per = images[idx[0]].pixels.data.size();
    for (size_t n = 0; n < idx.size(); ++n) {
        const auto& img = images.at(idx[n]).pixels;
        if (img.data.size() != per) throw std::invalid_argument("ragged batch");
        std::copy(img.data.begin(), img.data.end(), out.data.begin() + n * per);
    }
    return out;
}

Tensor<float> stack_tensors(const std::vector<Tensor<float>>& images, const std::vector<int>& idx) {
    if (idx.empty()) throw std::invalid_argument("empty batch");
    const auto& s = images.at(idx[0]).shape;
    Tensor<float> out({static_cast<int>(idx.size()), s[0], s[1], s[2]});
    const size_t per = images[idx[0]].data.size();
    for (size_t n = 0; n < idx.size(); ++n) {
        const auto& img = images.at(idx[n]);
        if (img.data.size() != per) throw std::invalid_argument("ragged batch");
        std::copy(img.data.begin(), img.data.end(), out.data.begin() + n * per);
    }
    return out;
}

void normalize_inplace(Tensor<float>& batch, const std::vector<double>& mean,
                       const std::vector<double>& stdev) {
    if (batch.shape.size() != 4) throw std::invalid_argument("expected [N,C,H,W] batch");
    const int N = batch.shape[0], C = batch.shape[1];
    const size_t hw = static_cast<size_t>(batch.shape[2]) * batch.shape[3];
    if (static_cast<int>(mean.size()) != C || static_cast<int>(stdev.size()) != C)
        throw std::invalid_argument("normalization stats do not match channel count");
    for (int c = 0; c < C; ++c)
        if (stdev[c] <= 0.0) throw std::invalid_argument("non-positive channel std");
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            float* p = batch.ptr() + (static_cast<size_t>(n) * C + c) * hw;
            const float m = static_cast<float>(mean[c]);
            const float inv = 1.0f / static_cast<float>(stdev[c]);
            for (size_t i = 0; i < hw; ++i) p[i] = (p[i] - m) * inv;
        }
}

Tensor<float> fgsm_batch(Network<float>& net, const Tensor<float>& raw,
                         const std::vector<int>& labels, double epsilon) {
    if (epsilon < 0.0) throw std::invalid_argument("adversarial step size must be non-negative");
    if (raw.shape.size() != 4) throw std::invalid_argument("expected [N,C,H,W] batch");
    Tensor<float> adv = raw;
    if (epsilon == 0.0) return adv;

    Tensor<float> x = raw;
    normalize_inplace(x, net.spec.input_mean, net.spec.input_std);
    const auto logits = net.forward_logits(x, false);
    const auto ce = softmax_cross_entropy(logits, labels);
    Tensor<float> dx = net.backward(ce.dlogits, nullptr, true);
    net.zero_grad();  // parameter gradients from the attack must not leak

    // back through x_norm = (x - mean)/std; std > 0 leaves the sign intact
    const int N = raw.shape[0], C = raw.shape[1];
    const size_t hw = static_cast<size_t>(raw.shape[2]) * raw.shape[3];
    const float eps = static_cast<float>(epsilon);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const float inv = 1.0f / static_cast<float>(net.spec.input_std[c]);
            const size_t off = (static_cast<size_t>(n) * C + c) * hw;
            for (size_t i = 0; i < hw; ++i) {
                const float g = dx.data[off + i] * inv;
                const float s = g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f);
                adv.data[off + i] = clip01(adv.data[off + i] + eps * s);
            }
        }
    return adv;
}

Tensor<float> fgsm(Network<float>& net, const Tensor<float>& image, int label, double epsilon) {
    if (image.shape.size() != 3) throw std::invalid_argument("expected [C,H,W] image");
    Tensor<float> batch({1, image.shape[0], image.shape[1], image.shape[2]});
    batch.data = image.data;
    auto adv = fgsm_batch(net, batch, {label}, epsilon);
    Tensor<float> out(image.shape);
    out.data = std::move(adv.data);
    return out;
}

std::vector<Tensor<float>> corrupt_images(const DatasetSplit& split, const NoiseSpec& spec,
                                          Network<float>* attacked) {
    std::vector<Tensor<float>> out;
    out.reserve(split.images.size());
    if (spec.kind == "none") {
        for (const auto& img : split.images) out.push_back(img.pixels);
        return out;
    }
    if (spec.kind == "uniform" || spec.kind == "salt_pepper") {
        for (size_t i = 0; i < split.images.size(); ++i) {
            Rng rng(seed_for_index(spec.seed, i));
            out.push_back(spec.kind == "uniform"
                              ? add_uniform(split.images[i].pixels, spec.level, rng)
                              : add_salt_pepper(split.images[i].pixels, spec.level, rng));
        }
        return out;
    }
    if (spec.kind == "fgsm") {
        if (!attacked) throw std::invalid_argument("adversarial corruption needs a target network");
        const int n = static_cast<int>(split.images.size());
        constexpr int kChunk = 64;  // inference-mode rows are independent, so
                                    // chunking never changes the result
        for (int start = 0; start < n; start += kChunk) {
            std::vector<int> idx;
            std::vector<int> labels;
            for (int i = start; i < std::min(n, start + kChunk); ++i) {
                idx.push_back(i);
                labels.push_back(split.images[i].fine_label);
            }
            auto adv = fgsm_batch(*attacked, stack_batch(split.images, idx), labels, spec.level);
            const auto& s = split.images[idx[0]].pixels.shape;
            const size_t per = split.images[idx[0]].pixels.data.size();
            for (size_t k = 0; k < idx.size(); ++k) {
                Tensor<float> one(s);
                std::copy(adv.data.begin() + k * per, adv.data.begin() + (k + 1) * per,
                          one.data.begin());
                out.push_back(std::move(one));
            }
        }
        return out;
    }
    throw std::invalid_argument("unknown noise kind: " + spec.kind);
}

void write_image(const std::string& path, const Tensor<float>& image) {
    if (image.shape.size() != 3 || (image.shape[0] != 1 && image.shape[0] != 3))
        throw std::invalid_argument("expected [1,H,W] or [3,H,W] image");
    const int C = image.shape[0], H = image.shape[1], W = image.shape[2];
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write image: " + path);
    os << (C == 3 ? "P6" : "P5") << "\n" << W << " " << H << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(W) * C);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                const float v = clip01(image.data[(static_cast<size_t>(c) * H + y) * W + x]);
                row[static_cast<size_t>(x) * C + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!os) throw std::runtime_error("image write failed: " + path);
}

}  // namespace twopath
