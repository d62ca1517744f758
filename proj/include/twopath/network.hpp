#pragma once

// A pathway network: a chain of conv stages (each halving the spatial size),
// a fully connected feature head whose post-activation output is the feature
// vector g, and a linear readout producing class logits. Both the deep
// fine-input pathway and the shallow coarse-input pathway are instances of
// this with different specs.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "twopath/layers.hpp"
#include "twopath/rng.hpp"
#include "twopath/tensor.hpp"

namespace twopath {

struct StageSpec {
    int filters = 0;
    int ksize = 0;
};

// preprocessing applied to the raw image before this pathway sees it;
// recorded here so checkpoints are self-describing
struct PreprocSpec {
    std::string kind = "none";  // none | lpf | binarize
    double sigma = 2.0;         // low-pass width (binarize blurs first too)
    double threshold = 0.5;     // binarize cut, strictly-greater
};

struct NetworkSpec {
    std::string kind = "fine";  // fine | coarse
    int input_channels = 3;
    int input_hw = 32;
    std::vector<StageSpec> stages;
    int fc_width = 1000;
    int num_classes = 10;
    std::vector<double> input_mean;  // per channel, from the training split
    std::vector<double> input_std;
    PreprocSpec preproc;

    int spatial_after_stages() const {
        int s = input_hw;
        for (size_t i = 0; i < stages.size(); ++i) {
            if (s % 2 != 0) throw std::invalid_argument("stage input size must be even");
            s /= 2;
        }
        return s;
    }
    int flat_dim() const {
        if (stages.empty()) throw std::invalid_argument("network needs at least one stage");
        const int s = spatial_after_stages();
        return stages.back().filters * s * s;
    }
};

template <typename T>
struct Network {
    NetworkSpec spec;
    std::vector<ConvStage<T>> stages;
    Dense<T> fc;        // flat conv features -> fc_width
    ReLU<T> fc_relu;    // feature vector g is the post-activation output
    Dense<T> readout;   // fc_width -> num_classes
    std::vector<int> pre_flatten_shape;

    explicit Network(const NetworkSpec& s) : spec(s) {
        // canonicalize spec scalars to float precision: all runtime math is
        // float, and checkpoints carry float payloads, so this makes
        // save -> load the identity on the spec
        for (auto& v : spec.input_mean) v = static_cast<double>(static_cast<float>(v));
        for (auto& v : spec.input_std) v = static_cast<double>(static_cast<float>(v));
        spec.preproc.sigma = static_cast<double>(static_cast<float>(spec.preproc.sigma));
        spec.preproc.threshold = static_cast<double>(static_cast<float>(spec.preproc.threshold));
        int in_c = s.input_channels;
        for (size_t i = 0; i < s.stages.size(); ++i) {
            stages.emplace_back(in_c, s.stages[i].filters, s.stages[i].ksize,
                                "stage" + std::to_string(i));
            in_c = s.stages[i].filters;
        }
        fc = Dense<T>(s.flat_dim(), s.fc_width, "fc");
        readout = Dense<T>(s.fc_width, s.num_classes, "readout");
    }

    std::vector<ParamTensor<T>*> parameters() {
        std::vector<ParamTensor<T>*> out;
        for (auto& st : stages)
            for (auto* p : st.params()) out.push_back(p);
        for (auto* p : fc.params()) out.push_back(p);
        for (auto* p : readout.params()) out.push_back(p);
        return out;
    }

    void zero_grad() {
        for (auto* p : parameters()) p->zero_grad();
    }

    // feature vector g: [N, fc_width]
    Tensor<T> forward_features(const Tensor<T>& x, bool train) {
        Tensor<T> h = x;
        for (auto& st : stages) h = st.forward(h, train);
        pre_flatten_shape = h.shape;
        const int n = h.shape[0];
        h = reshape(std::move(h), {n, spec.flat_dim()});
        return fc_relu.forward(fc.forward(h, train), train);
    }

    Tensor<T> forward_logits(const Tensor<T>& x, bool train) {
        return readout.forward(forward_features(x, train), train);
    }

    // logits from an already computed feature batch (trunk untouched)
    Tensor<T> readout_only(const Tensor<T>& g, bool train) { return readout.forward(g, train); }

    // Backward from logit gradients, optionally adding a gradient that acts
    // directly on the feature vector (the imitation penalty does). Returns
    // the input-image gradient when requested, else an empty tensor.
    Tensor<T> backward(const Tensor<T>& dlogits, const Tensor<T>* dg_extra = nullptr,
                       bool need_input_grad = false) {
        Tensor<T> dg = readout.backward(dlogits);
        if (dg_extra) {
            if (!dg.same_shape(*dg_extra))
                throw std::invalid_argument("feature gradient shape mismatch");
            for (size_t i = 0; i < dg.data.size(); ++i) dg.data[i] += dg_extra->data[i];
        }
        Tensor<T> d = fc.backward(fc_relu.backward(dg));
        d = reshape(std::move(d), pre_flatten_shape);
        for (size_t i = stages.size(); i-- > 1;) d = stages[i].backward(d, true);
        return stages[0].backward(d, need_input_grad);
    }

    // Fan-in He initialization for conv and dense weights; biases stay zero,
    // batchnorm stays (gamma=1, beta=0). One generator, fixed draw order.
    void he_init(uint64_t base_seed) {
        Rng rng(seed_for("init/" + spec.kind, base_seed));
        for (auto* p : parameters()) {
            const auto& name = p->name;
            if (name.size() < 7 || name.compare(name.size() - 7, 7, ".weight") != 0) continue;
            const auto& sh = p->value.shape;
            size_t fan_in = 1;
            for (size_t i = 1; i < sh.size(); ++i) fan_in *= static_cast<size_t>(sh[i]);
            if (sh.size() == 2) fan_in = static_cast<size_t>(sh[0]);  // dense is [D, M]
            const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (auto& v : p->value.data) v = static_cast<T>(rng.normal() * stddev);
        }
    }
};

template <typename T>
Network<T> build_network(const NetworkSpec& spec, uint64_t seed) {
    Network<T> net(spec);
    net.he_init(seed);
    return net;
}

}  // namespace twopath
