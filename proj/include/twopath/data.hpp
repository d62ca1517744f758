#pragma once

// Dataset ingestion (CIFAR-style binaries, PGM mask directories) and the
// coarse-pathway preprocessing chain: grayscale, Gaussian low-pass,
// binarization, plus channel statistics, seeded batching, and the seeded
// super/sub-class subsetting used by the cognitive-bias task.

#include <cstdint>
#include <string>
#include <vector>

#include "twopath/network.hpp"
#include "twopath/tensor.hpp"

namespace twopath {

struct LabeledImage {
    Tensor<float> pixels;  // [C,32,32], values in [0,1]
    int fine_label = -1;
    int coarse_label = -1;  // >= 0 only for datasets with a super-class level
};

struct DatasetSplit {
    std::vector<LabeledImage> images;
    std::vector<std::string> class_names;
    std::vector<double> channel_mean;  // computed on the training split only
    std::vector<double> channel_std;
};

struct Dataset {
    DatasetSplit train, test;
    int num_classes = 0;
    int num_coarse_classes = 0;  // 0 when the dataset has a single level
    int channels = 0;
};

// Loaders. All are bit-deterministic: the same files yield identical tensors.
Dataset load_cifar10(const std::string& dir);
Dataset load_cifar100(const std::string& dir);
// Directory of 8-bit square P5 files named <classid>_<index>.pgm, resampled
// to 32x32 by exact area averaging. Every fifth index per class (sorted by
// index) is held out as the test split.
Dataset load_mask_dataset(const std::string& dir);

// ITU-R 601 luma: 0.299 R + 0.587 G + 0.114 B
Tensor<float> to_grayscale(const Tensor<float>& rgb);

// Separable normalized Gaussian, radius ceil(3*sigma), reflect padding
// (half-sample symmetric, so the operator is doubly stochastic and the image
// mean is preserved).
Tensor<float> gaussian_lowpass(const Tensor<float>& gray, double sigma);

// 1 where value > threshold, else 0; threshold must lie in (0,1)
Tensor<float> binarize(const Tensor<float>& gray, double threshold);

// The coarse pathway's view of an image: grayscale (identity for
// single-channel data), then the configured low-pass or binarization.
Tensor<float> coarse_input(const Tensor<float>& pixels, const PreprocSpec& preproc);

// Per-channel mean and population standard deviation over a split.
void compute_channel_stats(const DatasetSplit& split, std::vector<double>& mean,
                           std::vector<double>& stdev);

// Seeded per-epoch shuffle; the final short batch is kept.
std::vector<std::vector<int>> batches(int n_images, int batch_size, uint64_t seed, int epoch);

// Deterministic class-balanced reduction: keep the given classes (re-indexed
// in the order supplied) and at most n_train / n_test images per split
// (0 = keep all), sampled with the seed.
Dataset subset_classes(const Dataset& full, const std::vector<int>& classes, int n_train,
                       int n_test, uint64_t seed);

struct SubclassMapping {
    int sub_id;             // re-indexed fine label
    int super_id;           // re-indexed coarse label
    int original_fine;      // label in the source dataset
    int original_coarse;
};

// Seeded choice of n_super super-classes and n_sub_per_super fine classes
// within each; fine labels re-indexed to [0, n_super*n_sub_per_super).
Dataset sample_superclass_subset(const Dataset& cifar100, int n_super, int n_sub_per_super,
                                 uint64_t seed, std::vector<SubclassMapping>& mapping);

void write_mapping(const std::string& path, const std::vector<SubclassMapping>& mapping);

}  // namespace twopath
