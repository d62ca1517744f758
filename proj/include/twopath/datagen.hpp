#pragma once

// Synthetic desk-scale image corpora in the exact on-disk formats the
// loaders consume. Classes are built from two kinds of cue:
//
//  * shape — a filled silhouette (disk, square, triangle, ...), which
//    survives grayscale conversion and heavy low-pass filtering;
//  * color/texture — equal-luma hues and 1-pixel stripes, which vanish
//    under grayscale + blur and crumble under pixel noise.
//
// The ten-class corpus pairs five shapes with a flat/striped texture split
// and draws each image's hue at random, so the fine pathway must lean on
// sharp edges and stripes while a blurred grayscale view still carries the
// shape. The super-class corpus fixes one hue per sub-class instead, making
// the hue the sub-class cue and the shape the super-class cue.

#include <cstdint>
#include <string>

namespace twopath {

struct SynthConfig {
    int train_per_class = 700;
    int test_per_class = 340;
    uint64_t seed = 1;
};

// ten classes: shape (id % 5) x texture (flat below 5, striped above),
// written as data_batch_1..5.bin + test_batch.bin
void write_synthetic_cifar10(const std::string& dir, const SynthConfig& cfg);

struct SuperSynthConfig {
    int n_super = 8;  // shapes (at most 8)
    int n_sub = 5;    // fixed equal-luma hues per shape (at most 5)
    int train_per_sub = 400;
    int test_per_sub = 100;
    uint64_t seed = 1;
};

// fine label = super * n_sub + sub, coarse label = super, written as
// train.bin / test.bin with (coarse, fine) label bytes per record
void write_synthetic_cifar100(const std::string& dir, const SuperSynthConfig& cfg);

// silhouette masks <class>_<index>.pgm, one shape per class (at most 8)
void write_synthetic_masks(const std::string& dir, int n_classes, int per_class, int hw,
                           uint64_t seed);

}  // namespace twopath
