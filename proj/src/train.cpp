#include "twopath/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "twopath/loss.hpp"
#include "twopath/noise.hpp"

namespace twopath {

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
    double lr = cfg.lr;
    for (int d : cfg.lr_decay_epochs)
        if (epoch >= d) lr *= cfg.lr_decay_factor;
    return lr;
}

void sgd_momentum_step(const std::vector<ParamTensor<float>*>& params, double lr,
                       double momentum) {
    const float m = static_cast<float>(momentum);
    const float step = static_cast<float>(lr);
    for (auto* p : params) {
        for (size_t i = 0; i < p->value.data.size(); ++i) {
            p->velocity.data[i] = m * p->velocity.data[i] + p->grad.data[i];
            p->value.data[i] -= step * p->velocity.data[i];
        }
        p->zero_grad();
    }
}

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& rows) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write metrics: " + path);
    os << "epoch,lr,train_loss,test_accuracy,wall_seconds\n";
    char line[160];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f\n", r.epoch, r.lr, r.train_loss,
                      r.test_accuracy, r.wall_seconds);
        os << line;
    }
    if (!os) throw std::runtime_error("metrics write failed: " + path);
}

Tensor<float> pathway_view(const NetworkSpec& spec, const Tensor<float>& pixels) {
    Tensor<float> v = spec.kind == "coarse" ? coarse_input(pixels, spec.preproc) : pixels;
    if (v.shape[0] == 1 && spec.input_channels == 3) {
        Tensor<float> rep({3, v.shape[1], v.shape[2]});
        const size_t hw = v.data.size();
        for (int c = 0; c < 3; ++c)
            std::copy(v.data.begin(), v.data.end(), rep.data.begin() + c * hw);
        v = std::move(rep);
    }
    if (v.shape[0] != spec.input_channels)
        throw std::invalid_argument("image channels do not match the network input");
    return v;
}

void pathway_stats(const NetworkSpec& spec, const DatasetSplit& split, std::vector<double>& mean,
                   std::vector<double>& stdev) {
    DatasetSplit views;
    views.images.reserve(split.images.size());
    for (const auto& img : split.images) {
        LabeledImage v;
        v.pixels = pathway_view(spec, img.pixels);
        views.images.push_back(std::move(v));
    }
    compute_channel_stats(views, mean, stdev);
}

namespace {

constexpr int kEvalBatch = 64;

// stacked, normalized view batch ready for the network
Tensor<float> view_batch(Network<float>& net, const DatasetSplit& split,
                         const std::vector<int>& idx,
                         const std::vector<Tensor<float>>* override_pixels) {
    std::vector<Tensor<float>> views;
    views.reserve(idx.size());
    std::vector<int> local(idx.size());
    for (size_t k = 0; k < idx.size(); ++k) {
        const Tensor<float>& raw =
            override_pixels ? override_pixels->at(idx[k]) : split.images[idx[k]].pixels;
        views.push_back(pathway_view(net.spec, raw));
        local[k] = static_cast<int>(k);
    }
    Tensor<float> batch = stack_tensors(views, local);
    normalize_inplace(batch, net.spec.input_mean, net.spec.input_std);
    return batch;
}

std::vector<int> labels_of(const DatasetSplit& split, const std::vector<int>& idx) {
    std::vector<int> out(idx.size());
    for (size_t k = 0; k < idx.size(); ++k) out[k] = split.images[idx[k]].fine_label;
    return out;
}

std::vector<std::vector<int>> eval_batches(int n) {
    std::vector<std::vector<int>> out;
    for (int start = 0; start < n; start += kEvalBatch) {
        std::vector<int> idx;
        for (int i = start; i < std::min(n, start + kEvalBatch); ++i) idx.push_back(i);
        out.push_back(std::move(idx));
    }
    return out;
}

void check_finite(double loss, int epoch, int batch) {
    if (!std::isfinite(loss))
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " + std::to_string(batch) +
                                 " (try a lower learning rate)");
}

}  // namespace

double evaluate_accuracy(Network<float>& net, const DatasetSplit& split,
                         const std::vector<Tensor<float>>* override_pixels) {
    if (split.images.empty()) throw std::invalid_argument("cannot evaluate an empty split");
    size_t hits = 0;
    for (const auto& idx : eval_batches(static_cast<int>(split.images.size()))) {
        const auto batch = view_batch(net, split, idx, override_pixels);
        const auto pred = argmax_rows(net.forward_logits(batch, false));
        const auto truth = labels_of(split, idx);
        for (size_t k = 0; k < idx.size(); ++k)
            if (pred[k] == truth[k]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(split.images.size());
}

Tensor<float> split_features(Network<float>& net, const DatasetSplit& split,
                             const std::vector<Tensor<float>>* override_pixels) {
    if (split.images.empty()) throw std::invalid_argument("cannot featurize an empty split");
    Tensor<float> out({static_cast<int>(split.images.size()), net.spec.fc_width});
    for (const auto& idx : eval_batches(static_cast<int>(split.images.size()))) {
        const auto batch = view_batch(net, split, idx, override_pixels);
        const auto g = net.forward_features(batch, false);
        std::copy(g.data.begin(), g.data.end(),
                  out.data.begin() + static_cast<size_t>(idx[0]) * net.spec.fc_width);
    }
    return out;
}

namespace {

// Shared epoch driver: `loss_step` consumes one batch (already stacked and
// normalized for the student) and returns its loss after accumulating
// gradients; the driver applies the optimizer step and bookkeeping.
template <typename LossStep>
std::vector<EpochMetrics> run_epochs(Network<float>& net, const Dataset& data,
                                     const TrainConfig& cfg, LossStep&& loss_step) {
    if (data.train.images.empty()) throw std::invalid_argument("empty training split");
    const int n = static_cast<int>(data.train.images.size());
    auto params = net.parameters();
    std::vector<EpochMetrics> metrics;
    metrics.reserve(cfg.epochs);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = lr_at_epoch(cfg, epoch);
        double loss_sum = 0.0;
        int batch_id = 0;
        for (const auto& idx : batches(n, cfg.batch_size, cfg.seed, epoch)) {
            const double loss = loss_step(idx, epoch);
            check_finite(loss, epoch, batch_id);
            sgd_momentum_step(params, lr, cfg.momentum);
            loss_sum += loss * static_cast<double>(idx.size());
            ++batch_id;
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.lr = lr;
        m.train_loss = loss_sum / n;
        m.test_accuracy = evaluate_accuracy(net, data.test);
        m.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        metrics.push_back(m);
    }
    return metrics;
}

}  // namespace

std::vector<EpochMetrics> train_classifier(Network<float>& net, const Dataset& data,
                                           const TrainConfig& cfg) {
    return run_epochs(net, data, cfg, [&](const std::vector<int>& idx, int) {
        const auto batch = view_batch(net, data.train, idx, nullptr);
        const auto labels = labels_of(data.train, idx);
        const auto logits = net.forward_logits(batch, true);
        const auto ce = softmax_cross_entropy(logits, labels);
        net.backward(ce.dlogits);
        return static_cast<double>(ce.loss);
    });
}

std::vector<EpochMetrics> train_imitation(Network<float>& student, Network<float>& teacher,
                                          const Dataset& data, const TrainConfig& cfg) {
    if (student.spec.fc_width != teacher.spec.fc_width)
        throw std::invalid_argument("student and teacher feature widths differ");
    return run_epochs(student, data, cfg, [&](const std::vector<int>& idx, int) {
        // teacher target: inference-mode features on the same raw images
        const auto fine_batch = view_batch(teacher, data.train, idx, nullptr);
        const auto g_target = teacher.forward_features(fine_batch, false);

        const auto batch = view_batch(student, data.train, idx, nullptr);
        const auto labels = labels_of(data.train, idx);
        const auto g = student.forward_features(batch, true);
        const auto logits = student.readout_only(g, true);
        const auto imit =
            imitation_loss(logits, labels, g, g_target, static_cast<float>(cfg.alpha));
        student.backward(imit.dlogits, &imit.dg);
        return static_cast<double>(imit.loss);
    });
}

}  // namespace twopath
