#pragma once

// Training loops for the two pathways: plain cross-entropy descent for
// FineNet (and the CoarseNet baseline), and imitation training where
// CoarseNet additionally pulls its feature vector toward a frozen FineNet
// teacher's. Both use SGD with momentum and a stepped learning-rate
// schedule, with per-epoch metrics recorded for the CSV outputs.

#include <cstdint>
#include <string>
#include <vector>

#include "twopath/data.hpp"
#include "twopath/network.hpp"
#include "twopath/tensor.hpp"

namespace twopath {

struct TrainConfig {
    int epochs = 150;
    int batch_size = 64;
    double lr = 0.1;
    double momentum = 0.9;
    std::vector<int> lr_decay_epochs = {100, 125};
    double lr_decay_factor = 0.1;
    uint64_t seed = 0;
    double alpha = 0.4;  // imitation mixing weight; ignored by the plain loss
};

// stepped schedule: the base rate times factor^(number of thresholds passed),
// counting epoch e as past threshold d when e >= d (0-based epochs)
double lr_at_epoch(const TrainConfig& cfg, int epoch);

// v <- momentum*v + grad; p <- p - lr*v; gradients are zeroed afterwards
void sgd_momentum_step(const std::vector<ParamTensor<float>*>& params, double lr,
                       double momentum);

struct EpochMetrics {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double test_accuracy = 0.0;
    double wall_seconds = 0.0;
};

// "epoch,lr,train_loss,test_accuracy,wall_seconds" with %.6f reals, LF ends
void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& rows);

// What this pathway feeds its first conv layer: the raw RGB image for a fine
// network (single-channel data replicated if the net expects three), the
// preprocessed grayscale for a coarse one.
Tensor<float> pathway_view(const NetworkSpec& spec, const Tensor<float>& pixels);

// per-channel mean / population std of the pathway views of a split
void pathway_stats(const NetworkSpec& spec, const DatasetSplit& split, std::vector<double>& mean,
                   std::vector<double>& stdev);

// top-1 accuracy in inference mode; ties resolve to the lowest class index.
// `override_pixels` substitutes raw images (e.g. corrupted copies) by index.
double evaluate_accuracy(Network<float>& net, const DatasetSplit& split,
                         const std::vector<Tensor<float>>* override_pixels = nullptr);

// Cross-entropy training of either pathway on its own view of the data.
// Throws on divergence (non-finite loss). Returns per-epoch metrics.
std::vector<EpochMetrics> train_classifier(Network<float>& net, const Dataset& data,
                                           const TrainConfig& cfg);

// Imitation training of a coarse student against a frozen fine teacher: the
// student's objective mixes cross-entropy with the mean squared distance to
// the teacher's feature vector on the same (uncorrupted) images.
std::vector<EpochMetrics> train_imitation(Network<float>& student, Network<float>& teacher,
                                          const Dataset& data, const TrainConfig& cfg);

// feature matrix g for a whole split in inference mode: [N, fc_width]
Tensor<float> split_features(Network<float>& net, const DatasetSplit& split,
                             const std::vector<Tensor<float>>* override_pixels = nullptr);

}  // namespace twopath
