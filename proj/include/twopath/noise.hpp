#pragma once

// Pixel-space corruptions applied to the raw RGB image before either
// pathway's preprocessing: bounded uniform noise, salt-and-pepper pixel
// replacement, and single-step signed-gradient adversarial examples crafted
// against the fine pathway.

#include <cstdint>
#include <string>
#include <vector>

#include "twopath/data.hpp"
#include "twopath/network.hpp"
#include "twopath/rng.hpp"
#include "twopath/tensor.hpp"

namespace twopath {

struct NoiseSpec {
    std::string kind = "none";  // none | uniform | salt_pepper | fgsm
    double level = 0.0;         // U for uniform, proportion for salt_pepper, epsilon for fgsm
    uint64_t seed = 0;
};

// u ~ Uniform[-U, U] added independently per (channel, pixel) in flat
// (c,h,w) draw order, then clipped to [0,1].
Tensor<float> add_uniform(const Tensor<float>& image, double U, Rng& rng);

// Exactly round(p*H*W) distinct pixel positions (partial Fisher-Yates over
// the flat position list) are set to white or black with equal probability;
// a position flips all channels together.
Tensor<float> add_salt_pepper(const Tensor<float>& image, double p, Rng& rng);

// One signed-gradient ascent step on the network's cross-entropy:
// x_adv = clip(x + eps * sign(dCE/dx), 0, 1). The gradient is taken through
// the network's input normalization back to raw pixel space; the network is
// run in inference mode and its parameter gradients are zeroed afterwards.
Tensor<float> fgsm_batch(Network<float>& net, const Tensor<float>& raw,
                         const std::vector<int>& labels, double epsilon);
Tensor<float> fgsm(Network<float>& net, const Tensor<float>& image, int label, double epsilon);

// Corrupt every image of a split with the requested noise; seeds are derived
// from (spec.seed, image index) so corruption parallelizes and never depends
// on evaluation order. `attacked` is required for kind "fgsm".
std::vector<Tensor<float>> corrupt_images(const DatasetSplit& split, const NoiseSpec& spec,
                                          Network<float>* attacked = nullptr);

// batch assembly / normalization plumbing shared by training and attacks
Tensor<float> stack_batch(const std::vector<LabeledImage>& images, const std::vector<int>& idx);
Tensor<float> stack_tensors(const std::vector<Tensor<float>>& images, const std::vector<int>& idx);
void normalize_inplace(Tensor<float>& batch, const std::vector<double>& mean,
                       const std::vector<double>& stdev);

// inspection dumps (binary PPM P6 for [3,H,W], PGM P5 for [1,H,W])
void write_image(const std::string& path, const Tensor<float>& image);

}  // namespace twopath
