#pragma once

// Restricted Boltzmann Machine associative memory coupling the two pathways.
// Feature pairs are min-max normalized into [0,1], stored by contrastive
// divergence, and recalled by deterministic clamped mean-field iteration:
// one half of the visible layer is pinned to the coarse pathway's view while
// the other half relaxes toward the stored partner.
//
// Two protocols ride on the same machinery: noise robustness (pairs are
// [coarse features ‖ fine features]; recall completes the fine half) and
// cognitive bias (pairs are [coarse features ‖ super-class context vector];
// recall retrieves the context, which then biases a retrained readout).

#include <cstdint>
#include <string>
#include <vector>

#include "twopath/data.hpp"
#include "twopath/network.hpp"
#include "twopath/noise.hpp"
#include "twopath/rng.hpp"
#include "twopath/tensor.hpp"
#include "twopath/train.hpp"

namespace twopath {

// per-visible-dimension feature range observed on the training pairs
struct NormStats {
    std::vector<float> mn, mx;
};

struct Rbm {
    Tensor<float> W;  // [V, Hd]
    Tensor<float> a;  // [V] visible bias
    Tensor<float> b;  // [Hd] hidden bias
    NormStats norm;   // fitted on the training pairs (size V when fitted)

    int visible() const { return W.shape[0]; }
    int hidden() const { return W.shape[1]; }
};

// W ~ N(0, 0.01) from the seed, biases zero
Rbm make_rbm(int visible, int hidden, uint64_t seed);

struct RbmTrainConfig {
    int epochs = 2000;
    double lr = 0.1;
    std::vector<int> decay_epochs = {500, 1000};
    double decay_factor = 0.1;
    int batch_size = 64;
    uint64_t seed = 0;
    int cd_steps = 1;
};

NormStats fit_norm_stats(const Tensor<float>& pairs);

// v = clip((g - min) / (max - min + 1e-8), 0, 1), applied to columns
// [offset, offset + width) of the fitted stats; denormalize inverts on [0,1]
Tensor<float> normalize_features(const Tensor<float>& g, const NormStats& stats, int offset = 0);
Tensor<float> denormalize_features(const Tensor<float>& v, const NormStats& stats,
                                   int offset = 0);

// E(v,h) = -v^T W h - a^T v - b^T h, accumulated in double
double rbm_energy(const Tensor<float>& v, const Tensor<float>& h, const Rbm& rbm);

// One contrastive-divergence step on a [N,V] batch in [0,1]: hidden
// probabilities from the data, a Bernoulli hidden sample, a mean-field
// reconstruction, and the probability-vs-probability weight update. Returns
// the batch's mean absolute reconstruction error.
double cd1_update(Rbm& rbm, const Tensor<float>& batch, double lr, Rng& rng, int cd_steps = 1);

// Full training run over seeded epochs with the stepped learning rate.
// `recon_curve`, when given, receives one mean reconstruction error per
// epoch. Pairs must already be normalized into [0,1].
Rbm train_rbm(const Tensor<float>& pairs, int hidden, const RbmTrainConfig& cfg,
              std::vector<double>* recon_curve = nullptr);

// Deterministic mean-field recall: v holds [first ‖ second]; each step takes
// h = sigma(vW + b), proposes v' = sigma(hW^T + a), overwrites the free half
// with v' and resets the clamped half. Returns the free half after T steps.
enum class ClampSide { first, second };
Tensor<float> clamped_interplay(const Rbm& rbm, const Tensor<float>& clamped,
                                const Tensor<float>& free_init, ClampSide side, int steps);

struct ContextVector {
    int superclass_id = -1;
    Tensor<float> values;  // entries in {0,1}
};

// Seeded Bernoulli(0.5) codebook; regenerated with seed+1, seed+2, ... until
// every pair differs in at least 0.4*dim positions (throws after 100 tries).
std::vector<ContextVector> make_context_vectors(int n_super, int dim, uint64_t seed);

// nearest codebook entry by cosine similarity (ties to the lowest id)
int snap_to_context(const Tensor<float>& retrieved, const std::vector<ContextVector>& codebook);

// ---- task protocols -------------------------------------------------------

// Association system for the robustness task: both pathways plus an RBM
// trained on their concatenated training features.
struct AssociationSystem {
    Network<float>* fine = nullptr;
    Network<float>* coarse = nullptr;
    const Rbm* rbm = nullptr;
};

// Predictions for a whole split under one corruption: corrupt the raw
// images, clamp the coarse features, relax the fine half for `steps`
// iterations, and classify the denormalized result with the fine readout.
// steps == 0 bypasses the memory entirely (plain FineNet on the corruption).
std::vector<int> associated_predict(const AssociationSystem& sys, const DatasetSplit& split,
                                    const NoiseSpec& noise, int steps);

// single-image entry point (index 0 of a one-image split)
int robustness_inference(Network<float>& fine, Network<float>& coarse, const Rbm& rbm,
                         const LabeledImage& image, const NoiseSpec& noise, int steps);

double accuracy_of(const std::vector<int>& pred, const DatasetSplit& split);

// ---- cognitive-bias protocol ------------------------------------------------

// readout retrained to consume [fine features ‖ context vector]
struct BiasedHead {
    Dense<float> readout;  // [2*fc_width, n_sub]
};

// Train the biased readout on ground-truth context vectors with the fine
// trunk frozen; plain SGD-momentum on cross-entropy.
BiasedHead train_biased_head(Network<float>& fine, const Dataset& data,
                             const std::vector<ContextVector>& codebook, const TrainConfig& cfg);

struct BiasSystem {
    Network<float>* fine = nullptr;    // frozen trunk + original readout
    Network<float>* coarse = nullptr;  // coarse pathway for retrieval
    const Rbm* rbm = nullptr;          // trained on [coarse features ‖ context]
    const BiasedHead* head = nullptr;
    const std::vector<ContextVector>* codebook = nullptr;
};

// Sub-class predictions using the retrieved-and-snapped context per image.
// When `oracle_context` is true the ground-truth super-class vector is
// injected instead (upper-bound run that bypasses the memory).
std::vector<int> biased_predict(const BiasSystem& sys, const DatasetSplit& split,
                                const NoiseSpec& noise, int steps, bool oracle_context = false,
                                std::vector<int>* retrieved_super = nullptr);

// single-image entry point; returns the predicted sub-class
int biased_inference(const BiasSystem& sys, const LabeledImage& image, const NoiseSpec& noise,
                     int steps);

// ---- checkpointing -----------------------------------------------------------

// Shared tensor container with the norm stats and, when present, the
// context-vector codebook riding along.
void save_rbm(const std::string& path, const Rbm& rbm,
              const std::vector<ContextVector>* codebook = nullptr);
Rbm load_rbm(const std::string& path, std::vector<ContextVector>* codebook = nullptr);

// the retrained readout travels in its own small checkpoint
void save_biased_head(const std::string& path, const BiasedHead& head);
BiasedHead load_biased_head(const std::string& path);

}  // namespace twopath
