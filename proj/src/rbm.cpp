#include "twopath/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "twopath/checkpoint.hpp"
#include "twopath/kernels.hpp"
#include "twopath/loss.hpp"

namespace twopath {

namespace {

inline float sigmoidf(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// h[N,Hd] = sigmoid(v W + b)
Tensor<float> hidden_probs(const Rbm& rbm, const Tensor<float>& v) {
    const int N = v.shape[0], V = rbm.visible(), Hd = rbm.hidden();
    Tensor<float> h({N, Hd});
    kern::matmul_nn(v.ptr(), rbm.W.ptr(), h.ptr(), N, V, Hd);
    for (int n = 0; n < N; ++n)
        for (int j = 0; j < Hd; ++j) {
            auto& e = h.data[static_cast<size_t>(n) * Hd + j];
            e = sigmoidf(e + rbm.b.data[j]);
        }
    return h;
}

// v[N,V] = sigmoid(h W^T + a); WT is the pre-transposed weight [Hd,V]
Tensor<float> visible_probs(const Rbm& rbm, const Tensor<float>& h, const Tensor<float>& WT) {
    const int N = h.shape[0], V = rbm.visible(), Hd = rbm.hidden();
    Tensor<float> v({N, V});
    kern::matmul_nn(h.ptr(), WT.ptr(), v.ptr(), N, Hd, V);
    for (int n = 0; n < N; ++n)
        for (int i = 0; i < V; ++i) {
            auto& e = v.data[static_cast<size_t>(n) * V + i];
            e = sigmoidf(e + rbm.a.data[i]);
        }
    return v;
}

Tensor<float> transposed_weights(const Rbm& rbm) {
    Tensor<float> WT({rbm.hidden(), rbm.visible()});
    kern::transpose(rbm.W.ptr(), WT.ptr(), rbm.visible(), rbm.hidden());
    return WT;
}

}  // namespace

Rbm make_rbm(int visible, int hidden, uint64_t seed) {
    if (visible <= 0 || hidden <= 0) throw std::invalid_argument("rbm sizes must be positive");
    Rbm rbm;
    rbm.W = Tensor<float>({visible, hidden});
    rbm.a = Tensor<float>({visible});
    rbm.b = Tensor<float>({hidden});
    Rng rng(seed_for("rbm/init", seed));
    for (auto& w : rbm.W.data) w = static_cast<float>(rng.normal() * 0.01);
    return rbm;
}

NormStats fit_norm_stats(const Tensor<float>& pairs) {
    if (pairs.shape.size() != 2 || pairs.shape[0] < 1)
        throw std::invalid_argument("expected a non-empty [N,V] pair matrix");
    const int N = pairs.shape[0], V = pairs.shape[1];
    NormStats s;
    s.mn.assign(V, 0.0f);
    s.mx.assign(V, 0.0f);
    for (int i = 0; i < V; ++i) {
        float mn = pairs.data[i], mx = pairs.data[i];
        for (int n = 1; n < N; ++n) {
            const float v = pairs.data[static_cast<size_t>(n) * V + i];
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        s.mn[i] = mn;
        s.mx[i] = mx;
    }
    return s;
}

Tensor<float> normalize_features(const Tensor<float>& g, const NormStats& stats, int offset) {
    if (g.shape.size() != 2) throw std::invalid_argument("expected [N,width] features");
    const int N = g.shape[0], D = g.shape[1];
    if (stats.mn.empty()) throw std::invalid_argument("normalization stats not fitted");
    if (offset < 0 || offset + D > static_cast<int>(stats.mn.size()))
        throw std::invalid_argument("normalization window out of range");
    Tensor<float> out({N, D});
    for (int n = 0; n < N; ++n)
        for (int i = 0; i < D; ++i) {
            const float mn = stats.mn[offset + i];
            const float span = stats.mx[offset + i] - mn + 1e-8f;
            const float v = (g.data[static_cast<size_t>(n) * D + i] - mn) / span;
            out.data[static_cast<size_t>(n) * D + i] = std::min(1.0f, std::max(0.0f, v));
        }
    return out;
}

Tensor<float> denormalize_features(const Tensor<float>& v, const NormStats& stats, int offset) {
    if (v.shape.size() != 2) throw std::invalid_argument("expected [N,width] features");
    const int N = v.shape[0], D = v.shape[1];
    if (stats.mn.empty()) throw std::invalid_argument("normalization stats not fitted");
    if (offset < 0 || offset + D > static_cast<int>(stats.mn.size()))
        throw std::invalid_argument("normalization window out of range");
    Tensor<float> out({N, D});
    for (int n = 0; n < N; ++n)
        for (int i = 0; i < D; ++i) {
            const float mn = stats.mn[offset + i];
            const float span = stats.mx[offset + i] - mn + 1e-8f;
            out.data[static_cast<size_t>(n) * D + i] =
                v.data[static_cast<size_t>(n) * D + i] * span + mn;
        }
    return out;
}

double rbm_energy(const Tensor<float>& v, const Tensor<float>& h, const Rbm& rbm) {
    const int V = rbm.visible(), Hd = rbm.hidden();
    if (static_cast<int>(v.data.size()) != V || static_cast<int>(h.data.size()) != Hd)
        throw std::invalid_argument("state does not match the rbm geometry");
    double e = 0.0;
    for (int i = 0; i < V; ++i) {
        double row = 0.0;
        for (int j = 0; j < Hd; ++j)
            row += static_cast<double>(rbm.W.data[static_cast<size_t>(i) * Hd + j]) * h.data[j];
        e -= v.data[i] * row;
        e -= static_cast<double>(rbm.a.data[i]) * v.data[i];
    }
    for (int j = 0; j < Hd; ++j) e -= static_cast<double>(rbm.b.data[j]) * h.data[j];
    return e;
}

double cd1_update(Rbm& rbm, const Tensor<float>& batch, double lr, Rng& rng, int cd_steps) {
    if (batch.shape.size() != 2 || batch.shape[1] != rbm.visible())
        throw std::invalid_argument("batch width does not match the visible layer");
    if (cd_steps < 1) throw std::invalid_argument("need at least one reconstruction step");
    const int N = batch.shape[0], V = rbm.visible(), Hd = rbm.hidden();
    const auto WT = transposed_weights(rbm);

    const Tensor<float> h0 = hidden_probs(rbm, batch);
    Tensor<float> h = h0;
    Tensor<float> v({N, V});
    for (int step = 0; step < cd_steps; ++step) {
        // Bernoulli hidden sample in flat (n, j) order, then a mean-field
        // reconstruction and fresh hidden probabilities
        Tensor<float> hs({N, Hd});
        for (size_t i = 0; i < h.data.size(); ++i)
            hs.data[i] = rng.bernoulli(h.data[i]) ? 1.0f : 0.0f;
        v = visible_probs(rbm, hs, WT);
        h = hidden_probs(rbm, v);
    }

    // probability-vs-probability gradient estimate
    if (lr != 0.0) {
        const float scale = static_cast<float>(lr) / static_cast<float>(N);
        Tensor<float> pos({V, Hd}), neg({V, Hd});
        kern::matmul_tn(batch.ptr(), h0.ptr(), pos.ptr(), N, V, Hd, false);
        kern::matmul_tn(v.ptr(), h.ptr(), neg.ptr(), N, V, Hd, false);
        for (size_t i = 0; i < rbm.W.data.size(); ++i)
            rbm.W.data[i] += scale * (pos.data[i] - neg.data[i]);
        for (int i = 0; i < V; ++i) {
            float d = 0.0f;
            for (int n = 0; n < N; ++n)
                d += batch.data[static_cast<size_t>(n) * V + i] -
                     v.data[static_cast<size_t>(n) * V + i];
            rbm.a.data[i] += scale * d;
        }
        for (int j = 0; j < Hd; ++j) {
            float d = 0.0f;
            for (int n = 0; n < N; ++n)
                d += h0.data[static_cast<size_t>(n) * Hd + j] -
                     h.data[static_cast<size_t>(n) * Hd + j];
            rbm.b.data[j] += scale * d;
        }
    }

    double err = 0.0;
    for (size_t i = 0; i < batch.data.size(); ++i)
        err += std::abs(static_cast<double>(batch.data[i]) - v.data[i]);
    return err / static_cast<double>(batch.data.size());
}

Rbm train_rbm(const Tensor<float>& pairs, int hidden, const RbmTrainConfig& cfg,
              std::vector<double>* recon_curve) {
    if (pairs.shape.size() != 2 || pairs.shape[0] < 1)
        throw std::invalid_argument("expected a non-empty [N,V] pair matrix");
    for (int d : cfg.decay_epochs)
        if (cfg.epochs <= d)
            throw std::invalid_argument("epoch budget must exceed every decay threshold");
    const int N = pairs.shape[0], V = pairs.shape[1];

    Rbm rbm = make_rbm(V, hidden, cfg.seed);
    rbm.norm.mn.assign(V, 0.0f);  // pairs arrive normalized; identity stats
    rbm.norm.mx.assign(V, 1.0f);  // unless the caller overwrites them

    if (recon_curve) recon_curve->clear();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.lr;
        for (int d : cfg.decay_epochs)
            if (epoch >= d) lr *= cfg.decay_factor;
        Rng gibbs(seed_for_index(seed_for("rbm/gibbs", cfg.seed), static_cast<uint64_t>(epoch)));
        double err_sum = 0.0;
        for (const auto& idx : batches(N, cfg.batch_size, cfg.seed, epoch)) {
            Tensor<float> batch({static_cast<int>(idx.size()), V});
            for (size_t k = 0; k < idx.size(); ++k)
                std::copy(pairs.data.begin() + static_cast<size_t>(idx[k]) * V,
                          pairs.data.begin() + static_cast<size_t>(idx[k] + 1) * V,
                          batch.data.begin() + k * V);
            err_sum += cd1_update(rbm, batch, lr, gibbs, cfg.cd_steps) *
                       static_cast<double>(idx.size());
        }
        if (recon_curve) recon_curve->push_back(err_sum / N);
    }
    return rbm;
}

Tensor<float> clamped_interplay(const Rbm& rbm, const Tensor<float>& clamped,
                                const Tensor<float>& free_init, ClampSide side, int steps) {
    if (steps < 0) throw std::invalid_argument("step count must be non-negative");
    const int V = rbm.visible();
    if (V % 2 != 0) throw std::invalid_argument("visible layer is not split in halves");
    const int H = V / 2;
    if (static_cast<int>(clamped.data.size()) != H ||
        static_cast<int>(free_init.data.size()) != H)
        throw std::invalid_argument("half-vector sizes do not match the visible layer");

    const int clamp_off = side == ClampSide::first ? 0 : H;
    const int free_off = side == ClampSide::first ? H : 0;

    Tensor<float> v({1, V});
    std::copy(clamped.data.begin(), clamped.data.end(), v.data.begin() + clamp_off);
    std::copy(free_init.data.begin(), free_init.data.end(), v.data.begin() + free_off);

    const auto WT = transposed_weights(rbm);
    for (int t = 0; t < steps; ++t) {
        const auto h = hidden_probs(rbm, v);
        const auto vp = visible_probs(rbm, h, WT);
        std::copy(vp.data.begin() + free_off, vp.data.begin() + free_off + H,
                  v.data.begin() + free_off);
        // the clamped half never left v, so no reset write is needed
    }
    Tensor<float> out({H});
    std::copy(v.data.begin() + free_off, v.data.begin() + free_off + H, out.data.begin());
    return out;
}

std::vector<ContextVector> make_context_vectors(int n_super, int dim, uint64_t seed) {
    if (n_super < 1 || dim < 1) throw std::invalid_argument("bad context-vector geometry");
    const double min_hamming = 0.4 * dim;
    for (int attempt = 0; attempt < 100; ++attempt) {
        Rng rng(seed_for("context-vectors", seed + static_cast<uint64_t>(attempt)));
        std::vector<ContextVector> out(n_super);
        for (int s = 0; s < n_super; ++s) {
            out[s].superclass_id = s;
            out[s].values = Tensor<float>({dim});
            for (auto& v : out[s].values.data) v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
        }
        bool ok = true;
        for (int i = 0; i < n_super && ok; ++i)
            for (int j = i + 1; j < n_super && ok; ++j) {
                int diff = 0;
                for (int k = 0; k < dim; ++k)
                    diff += out[i].values.data[k] != out[j].values.data[k];
                ok = diff >= min_hamming;
            }
        if (ok) return out;
    }
    throw std::runtime_error("could not generate sufficiently separated context vectors");
}

int snap_to_context(const Tensor<float>& retrieved, const std::vector<ContextVector>& codebook) {
    if (codebook.empty()) throw std::invalid_argument("context codebook is empty");
    const size_t dim = retrieved.data.size();
    double rn = 0.0;
    for (float v : retrieved.data) rn += static_cast<double>(v) * v;
    rn = std::sqrt(rn);
    int best = 0;
    double best_cos = -2.0;
    for (size_t s = 0; s < codebook.size(); ++s) {
        if (codebook[s].values.data.size() != dim)
            throw std::invalid_argument("context vector width mismatch");
        double dot = 0.0, cn = 0.0;
        for (size_t k = 0; k < dim; ++k) {
            dot += static_cast<double>(retrieved.data[k]) * codebook[s].values.data[k];
            cn += static_cast<double>(codebook[s].values.data[k]) * codebook[s].values.data[k];
        }
        const double cosine = dot / (rn * std::sqrt(cn) + 1e-12);
        if (cosine > best_cos) {
            best_cos = cosine;
            best = static_cast<int>(s);
        }
    }
    return best;
}

// ---- robustness protocol ----------------------------------------------------

namespace {

void check_association(const AssociationSystem& sys) {
    if (!sys.fine || !sys.coarse || !sys.rbm)
        throw std::invalid_argument("association system is incomplete");
    if (sys.fine->spec.fc_width != sys.coarse->spec.fc_width)
        throw std::invalid_argument("pathway feature widths differ");
    if (sys.rbm->visible() != 2 * sys.fine->spec.fc_width)
        throw std::invalid_argument("memory width does not match the feature pair");
    if (sys.fine->spec.num_classes != sys.coarse->spec.num_classes)
        throw std::invalid_argument("pathway class counts differ");
}

}  // namespace

std::vector<int> associated_predict(const AssociationSystem& sys, const DatasetSplit& split,
                                    const NoiseSpec& noise, int steps) {
    check_association(sys);
    if (steps < 0) throw std::invalid_argument("step count must be non-negative");
    const int fc = sys.fine->spec.fc_width;
    const auto corrupted = corrupt_images(split, noise, sys.fine);

    Tensor<float> gF = split_features(*sys.fine, split, &corrupted);
    if (steps == 0)  // memory bypass: plain fine-pathway prediction
        return argmax_rows(sys.fine->readout_only(gF, false));

    const Tensor<float> gC = split_features(*sys.coarse, split, &corrupted);
    const auto vC = normalize_features(gC, sys.rbm->norm, 0);
    const auto vF = normalize_features(gF, sys.rbm->norm, fc);

    const int n = static_cast<int>(split.images.size());
    Tensor<float> recalled({n, fc});
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        Tensor<float> c({fc}), f({fc});
        std::copy(vC.data.begin() + static_cast<size_t>(i) * fc,
                  vC.data.begin() + static_cast<size_t>(i + 1) * fc, c.data.begin());
        std::copy(vF.data.begin() + static_cast<size_t>(i) * fc,
                  vF.data.begin() + static_cast<size_t>(i + 1) * fc, f.data.begin());
        const auto out = clamped_interplay(*sys.rbm, c, f, ClampSide::first, steps);
        std::copy(out.data.begin(), out.data.end(),
                  recalled.data.begin() + static_cast<size_t>(i) * fc);
    }
    const auto g = denormalize_features(recalled, sys.rbm->norm, fc);
    return argmax_rows(sys.fine->readout_only(g, false));
}

int robustness_inference(Network<float>& fine, Network<float>& coarse, const Rbm& rbm,
                         const LabeledImage& image, const NoiseSpec& noise, int steps) {
    AssociationSystem sys;
    sys.fine = &fine;
    sys.coarse = &coarse;
    sys.rbm = &rbm;
    DatasetSplit one;
    one.images.push_back(image);
    return associated_predict(sys, one, noise, steps)[0];
}

double accuracy_of(const std::vector<int>& pred, const DatasetSplit& split) {
    if (pred.size() != split.images.size())
        throw std::invalid_argument("prediction count does not match the split");
    size_t hits = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == split.images[i].fine_label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// ---- cognitive-bias protocol ---------------------------------------------------

BiasedHead train_biased_head(Network<float>& fine, const Dataset& data,
                             const std::vector<ContextVector>& codebook,
                             const TrainConfig& cfg) {
    if (codebook.empty()) throw std::invalid_argument("context codebook is empty");
    const int fc = fine.spec.fc_width;
    const int dim = static_cast<int>(codebook[0].values.data.size());
    if (dim != fc)
        throw std::invalid_argument("context width must match the feature width");
    const int n_sub = data.num_classes;
    const int N = static_cast<int>(data.train.images.size());

    // frozen-trunk features once; ground-truth context per training image
    const Tensor<float> gF = split_features(fine, data.train);
    Tensor<float> X({N, 2 * fc});
    for (int i = 0; i < N; ++i) {
        const int sup = data.train.images[i].coarse_label;
        if (sup < 0 || sup >= static_cast<int>(codebook.size()))
            throw std::invalid_argument("image super-class has no context vector");
        std::copy(gF.data.begin() + static_cast<size_t>(i) * fc,
                  gF.data.begin() + static_cast<size_t>(i + 1) * fc,
                  X.data.begin() + static_cast<size_t>(i) * 2 * fc);
        std::copy(codebook[sup].values.data.begin(), codebook[sup].values.data.end(),
                  X.data.begin() + static_cast<size_t>(i) * 2 * fc + fc);
    }

    BiasedHead head;
    head.readout = Dense<float>(2 * fc, n_sub, "biased_readout");
    {
        Rng rng(seed_for("bias-head/init", cfg.seed));
        const double stddev = std::sqrt(2.0 / (2.0 * fc));
        for (auto& w : head.readout.weight.value.data)
            w = static_cast<float>(rng.normal() * stddev);
    }
    auto params = head.readout.params();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        int batch_id = 0;
        for (const auto& idx : batches(N, cfg.batch_size, cfg.seed, epoch)) {
            Tensor<float> xb({static_cast<int>(idx.size()), 2 * fc});
            std::vector<int> labels(idx.size());
            for (size_t k = 0; k < idx.size(); ++k) {
                std::copy(X.data.begin() + static_cast<size_t>(idx[k]) * 2 * fc,
                          X.data.begin() + static_cast<size_t>(idx[k] + 1) * 2 * fc,
                          xb.data.begin() + k * 2 * fc);
                labels[k] = data.train.images[idx[k]].fine_label;
            }
            const auto logits = head.readout.forward(xb, true);
            const auto ce = softmax_cross_entropy(logits, labels);
            if (!std::isfinite(static_cast<double>(ce.loss)))
                throw std::runtime_error("biased-readout training diverged at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batch_id));
            head.readout.backward(ce.dlogits);
            sgd_momentum_step(params, lr, cfg.momentum);
            ++batch_id;
        }
    }
    return head;
}

namespace {

void check_bias(const BiasSystem& sys) {
    if (!sys.fine || !sys.coarse || !sys.rbm || !sys.head || !sys.codebook)
        throw std::invalid_argument("bias system is incomplete");
    if (sys.codebook->empty()) throw std::invalid_argument("context codebook is empty");
    if (sys.rbm->visible() != 2 * sys.fine->spec.fc_width)
        throw std::invalid_argument("memory width does not match [features ‖ context]");
}

}  // namespace

std::vector<int> biased_predict(const BiasSystem& sys, const DatasetSplit& split,
                                const NoiseSpec& noise, int steps, bool oracle_context,
                                std::vector<int>* retrieved_super) {
    check_bias(sys);
    if (steps < 0) throw std::invalid_argument("step count must be non-negative");
    const int fc = sys.fine->spec.fc_width;
    const int n = static_cast<int>(split.images.size());
    const auto corrupted = corrupt_images(split, noise, sys.fine);
    const Tensor<float> gF = split_features(*sys.fine, split, &corrupted);

    std::vector<int> context_ids(n, -1);
    if (oracle_context) {
        for (int i = 0; i < n; ++i) {
            const int sup = split.images[i].coarse_label;
            if (sup < 0 || sup >= static_cast<int>(sys.codebook->size()))
                throw std::invalid_argument("image super-class has no context vector");
            context_ids[i] = sup;
        }
    } else {
        const Tensor<float> gC = split_features(*sys.coarse, split, &corrupted);
        const auto vC = normalize_features(gC, sys.rbm->norm, 0);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            Tensor<float> c({fc});
            std::copy(vC.data.begin() + static_cast<size_t>(i) * fc,
                      vC.data.begin() + static_cast<size_t>(i + 1) * fc, c.data.begin());
            const Tensor<float> zero({fc});
            Tensor<float> out =
                clamped_interplay(*sys.rbm, c, zero, ClampSide::first, steps);
            Tensor<float> row({1, fc});
            row.data = std::move(out.data);
            const auto denorm = denormalize_features(row, sys.rbm->norm, fc);
            Tensor<float> flat({fc});
            flat.data = denorm.data;
            context_ids[i] = snap_to_context(flat, *sys.codebook);
        }
    }
    if (retrieved_super) *retrieved_super = context_ids;

    Tensor<float> X({n, 2 * fc});
    for (int i = 0; i < n; ++i) {
        std::copy(gF.data.begin() + static_cast<size_t>(i) * fc,
                  gF.data.begin() + static_cast<size_t>(i + 1) * fc,
                  X.data.begin() + static_cast<size_t>(i) * 2 * fc);
        const auto& c = (*sys.codebook)[context_ids[i]].values;
        std::copy(c.data.begin(), c.data.end(),
                  X.data.begin() + static_cast<size_t>(i) * 2 * fc + fc);
    }
    // the head owns no cached state we need afterwards; eval-mode forward
    return argmax_rows(const_cast<BiasedHead*>(sys.head)->readout.forward(X, false));
}

int biased_inference(const BiasSystem& sys, const LabeledImage& image, const NoiseSpec& noise,
                     int steps) {
    DatasetSplit one;
    one.images.push_back(image);
    return biased_predict(sys, one, noise, steps)[0];
}

// ---- checkpointing ---------------------------------------------------------------

void save_rbm(const std::string& path, const Rbm& rbm,
              const std::vector<ContextVector>* codebook) {
    if (static_cast<int>(rbm.norm.mn.size()) != rbm.visible())
        throw std::invalid_argument("norm stats not fitted; refusing to save");
    std::vector<NamedTensor> ts;
    ts.push_back(meta_string("meta/model", "rbm-assoc"));
    ts.push_back({"rbm.W", rbm.W});
    ts.push_back({"rbm.a", rbm.a});
    ts.push_back({"rbm.b", rbm.b});
    Tensor<float> mn({rbm.visible()}), mx({rbm.visible()});
    mn.data.assign(rbm.norm.mn.begin(), rbm.norm.mn.end());
    mx.data.assign(rbm.norm.mx.begin(), rbm.norm.mx.end());
    ts.push_back({"rbm.norm_min", std::move(mn)});
    ts.push_back({"rbm.norm_max", std::move(mx)});
    if (codebook && !codebook->empty()) {
        const int dim = static_cast<int>((*codebook)[0].values.data.size());
        Tensor<float> cv({static_cast<int>(codebook->size()), dim});
        for (size_t s = 0; s < codebook->size(); ++s)
            std::copy((*codebook)[s].values.data.begin(), (*codebook)[s].values.data.end(),
                      cv.data.begin() + s * dim);
        ts.push_back({"context.values", std::move(cv)});
    }
    save_tensors(path, ts);
}

Rbm load_rbm(const std::string& path, std::vector<ContextVector>* codebook) {
    const auto ts = load_tensors(path);
    auto find = [&](const std::string& name) -> const NamedTensor* {
        for (const auto& t : ts)
            if (t.name == name) return &t;
        return nullptr;
    };
    const auto* model = find("meta/model");
    if (!model || meta_string_value(*model) != "rbm-assoc")
        throw std::runtime_error("not an associative-memory checkpoint: " + path);
    const auto* W = find("rbm.W");
    const auto* a = find("rbm.a");
    const auto* b = find("rbm.b");
    const auto* mn = find("rbm.norm_min");
    const auto* mx = find("rbm.norm_max");
    if (!W || !a || !b || !mn || !mx)
        throw std::runtime_error("incomplete memory checkpoint: " + path);
    if (W->data.shape.size() != 2) throw std::runtime_error("malformed weights in " + path);
    Rbm rbm;
    rbm.W = W->data;
    rbm.a = a->data;
    rbm.b = b->data;
    const int V = rbm.visible();
    if (static_cast<int>(rbm.a.data.size()) != V ||
        static_cast<int>(rbm.b.data.size()) != rbm.hidden() ||
        static_cast<int>(mn->data.data.size()) != V ||
        static_cast<int>(mx->data.data.size()) != V)
        throw std::runtime_error("inconsistent memory geometry in " + path);
    rbm.norm.mn.assign(mn->data.data.begin(), mn->data.data.end());
    rbm.norm.mx.assign(mx->data.data.begin(), mx->data.data.end());
    if (codebook) {
        codebook->clear();
        if (const auto* cv = find("context.values")) {
            if (cv->data.shape.size() != 2)
                throw std::runtime_error("malformed context codebook in " + path);
            const int n = cv->data.shape[0], dim = cv->data.shape[1];
            for (int s = 0; s < n; ++s) {
                ContextVector c;
                c.superclass_id = s;
                c.values = Tensor<float>({dim});
                std::copy(cv->data.data.begin() + static_cast<size_t>(s) * dim,
                          cv->data.data.begin() + static_cast<size_t>(s + 1) * dim,
                          c.values.data.begin());
                codebook->push_back(std::move(c));
            }
        }
    }
    return rbm;
}

void save_biased_head(const std::string& path, const BiasedHead& head) {
    std::vector<NamedTensor> ts;
    ts.push_back(meta_string("meta/model", "biased-head"));
    ts.push_back({"head.weight", head.readout.weight.value});
    ts.push_back({"head.bias", head.readout.bias.value});
    save_tensors(path, ts);
}

BiasedHead load_biased_head(const std::string& path) {
    const auto ts = load_tensors(path);
    auto find = [&](const std::string& name) -> const NamedTensor* {
        for (const auto& t : ts)
            if (t.name == name) return &t;
        return nullptr;
    };
    const auto* model = find("meta/model");
    if (!model || meta_string_value(*model) != "biased-head")
        throw std::runtime_error("not a biased-readout checkpoint: " + path);
    const auto* w = find("head.weight");
    const auto* b = find("head.bias");
    if (!w || !b || w->data.shape.size() != 2 ||
        static_cast<int>(b->data.data.size()) != w->data.shape[1])
        throw std::runtime_error("malformed biased-readout checkpoint: " + path);
    BiasedHead head;
    head.readout = Dense<float>(w->data.shape[0], w->data.shape[1], "biased_readout");
    head.readout.weight.value = w->data;
    head.readout.bias.value = b->data;
    return head;
}

}  // namespace twopath
