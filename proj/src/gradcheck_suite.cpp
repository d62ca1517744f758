#include "twopath/gradcheck_suite.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "twopath/layers.hpp"
#include "twopath/loss.hpp"
#include "twopath/network.hpp"
#include "twopath/rng.hpp"
#include "twopath/tensor.hpp"

namespace twopath {

namespace {

Tensor<double> random_tensor(const std::vector<int>& shape, Rng& rng, double scale = 1.0) {
    Tensor<double> t(shape);
    for (auto& v : t.data) v = rng.normal() * scale;
    return t;
}

// keeps finite differences away from the ReLU/maxpool kinks
void push_from_zero(Tensor<double>& t, double margin) {
    for (auto& v : t.data)
        if (std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
}

double weighted_sum(const Tensor<double>& y, const Tensor<double>& w) {
    double s = 0.0;
    for (size_t i = 0; i < y.data.size(); ++i) s += y.data[i] * w.data[i];
    return s;
}

void fold_max(GradCheckReport& agg, const GradCheckReport& one) {
    agg.max_rel_error = std::max(agg.max_rel_error, one.max_rel_error);
    agg.checks += one.checks;
}

std::vector<int> random_labels(int n, int k, Rng& rng) {
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng.below(static_cast<uint32_t>(k)));
    return labels;
}

}  // namespace

std::vector<GradCheckReport> run_gradient_suite(const GradSuiteOptions& opt) {
    std::vector<GradCheckReport> out;

    auto aggregate = [&](const std::string& name, auto&& one_instance) {
        GradCheckReport agg;
        agg.name = name;
        for (int i = 0; i < opt.instances; ++i) {
            Rng rng(seed_for("gradcheck/" + name, opt.seed + static_cast<uint64_t>(i)));
            fold_max(agg, one_instance(rng, i));
        }
        out.push_back(agg);
    };

    // ---- convolution -------------------------------------------------------
    const double conv_sign = opt.negate_conv_weight_grad ? -1.0 : 1.0;
    auto conv_case = [&](Rng& rng, int i, int which) {
        const int N = 2, C = 1 + i % 3, F = 2 + i % 2, H = 4 + 2 * (i % 2);
        const int ks = 1 + 2 * (i % 3);
        Conv2d<double> conv(C, F, ks, "c");
        for (auto& v : conv.weight.value.data) v = rng.normal() * 0.5;
        for (auto& v : conv.bias.value.data) v = rng.normal() * 0.1;
        Tensor<double> x = random_tensor({N, C, H, H}, rng);
        Tensor<double> w = random_tensor({N, F, H, H}, rng);
        auto loss = [&] { return weighted_sum(conv.forward(x, true), w); };
        loss();
        conv.weight.zero_grad();
        conv.bias.zero_grad();
        Tensor<double> dx = conv.backward(w, true);
        if (which == 0) {
            Tensor<double> g = conv.weight.grad;
            for (auto& v : g.data) v *= conv_sign;
            return check_gradient("conv2d.weight", conv.weight.value, g, loss, opt.probes, rng);
        }
        if (which == 1)
            return check_gradient("conv2d.bias", conv.bias.value, conv.bias.grad, loss,
                                  opt.probes, rng);
        return check_gradient("conv2d.input", x, dx, loss, opt.probes, rng);
    };
    aggregate("conv2d.weight", [&](Rng& r, int i) { return conv_case(r, i, 0); });
    aggregate("conv2d.bias", [&](Rng& r, int i) { return conv_case(r, i, 1); });
    aggregate("conv2d.input", [&](Rng& r, int i) { return conv_case(r, i, 2); });

    // ---- batch normalization (training statistics) --------------------------
    auto bn_train_case = [&](Rng& rng, int i, int which) {
        const int N = 3 + i % 2, F = 2 + i % 3, H = 4;
        BatchNorm2d<double> bn(F, "b");
        for (auto& v : bn.gamma.value.data) v = 0.5 + rng.uniform01d();
        for (auto& v : bn.beta.value.data) v = rng.normal() * 0.2;
        Tensor<double> x = random_tensor({N, F, H, H}, rng);
        Tensor<double> w = random_tensor({N, F, H, H}, rng);
        auto loss = [&] {
            // fresh running stats each call so the train forward is pure
            bn.running_mean.fill(0.0);
            bn.running_var.fill(1.0);
            return weighted_sum(bn.forward(x, true), w);
        };
        loss();
        bn.gamma.zero_grad();
        bn.beta.zero_grad();
        Tensor<double> dx = bn.backward(w, true);
        if (which == 0)
            return check_gradient("batchnorm.gamma", bn.gamma.value, bn.gamma.grad, loss,
                                  opt.probes, rng);
        if (which == 1)
            return check_gradient("batchnorm.beta", bn.beta.value, bn.beta.grad, loss,
                                  opt.probes, rng);
        return check_gradient("batchnorm.input", x, dx, loss, opt.probes, rng);
    };
    aggregate("batchnorm.gamma", [&](Rng& r, int i) { return bn_train_case(r, i, 0); });
    aggregate("batchnorm.beta", [&](Rng& r, int i) { return bn_train_case(r, i, 1); });
    aggregate("batchnorm.input", [&](Rng& r, int i) { return bn_train_case(r, i, 2); });

    // ---- batch normalization (running statistics, the inference path) -------
    aggregate("batchnorm.input(eval)", [&](Rng& rng, int i) {
        const int N = 2, F = 2 + i % 3, H = 4;
        BatchNorm2d<double> bn(F, "b");
        for (auto& v : bn.gamma.value.data) v = 0.5 + rng.uniform01d();
        for (auto& v : bn.beta.value.data) v = rng.normal() * 0.2;
        for (auto& v : bn.running_mean.data) v = rng.normal() * 0.3;
        for (auto& v : bn.running_var.data) v = 0.5 + rng.uniform01d();
        Tensor<double> x = random_tensor({N, F, H, H}, rng);
        Tensor<double> w = random_tensor({N, F, H, H}, rng);
        auto loss = [&] { return weighted_sum(bn.forward(x, false), w); };
        loss();
        Tensor<double> dx = bn.backward(w, true);
        return check_gradient("batchnorm.input(eval)", x, dx, loss, opt.probes, rng);
    });

    // ---- elementwise and pooling --------------------------------------------
    aggregate("relu.input", [&](Rng& rng, int i) {
        const int N = 2, D = 6 + i % 5;
        ReLU<double> relu;
        Tensor<double> x = random_tensor({N, D}, rng);
        push_from_zero(x, 1e-3);
        Tensor<double> w = random_tensor({N, D}, rng);
        auto loss = [&] { return weighted_sum(relu.forward(x, true), w); };
        loss();
        Tensor<double> dx = relu.backward(w);
        return check_gradient("relu.input", x, dx, loss, opt.probes, rng);
    });

    aggregate("maxpool.input", [&](Rng& rng, int i) {
        const int N = 2, F = 1 + i % 3, H = 4 + 2 * (i % 2);
        MaxPool2x2<double> pool;
        Tensor<double> x = random_tensor({N, F, H, H}, rng);
        // separate the four entries of every 2x2 window so the argmax cannot
        // flip under the +/-eps probes
        size_t k = 0;
        for (int nf = 0; nf < N * F; ++nf)
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < H; ++w, ++k) {
                    const double sub = static_cast<double>((h % 2) * 2 + (w % 2));
                    x.data[k] = std::round(x.data[k] * 10.0) * 0.1 + 1e-3 * sub;
                }
        Tensor<double> w = random_tensor({N, F, H / 2, H / 2}, rng);
        auto loss = [&] { return weighted_sum(pool.forward(x, true), w); };
        loss();
        Tensor<double> dx = pool.backward(w);
        return check_gradient("maxpool.input", x, dx, loss, opt.probes, rng);
    });

    // ---- dense ---------------------------------------------------------------
    auto dense_case = [&](Rng& rng, int i, int which) {
        const int N = 3, D = 4 + i % 4, M = 3 + i % 3;
        Dense<double> fc(D, M, "d");
        for (auto& v : fc.weight.value.data) v = rng.normal() * 0.5;
        for (auto& v : fc.bias.value.data) v = rng.normal() * 0.1;
        Tensor<double> x = random_tensor({N, D}, rng);
        Tensor<double> w = random_tensor({N, M}, rng);
        auto loss = [&] { return weighted_sum(fc.forward(x, true), w); };
        loss();
        fc.weight.zero_grad();
        fc.bias.zero_grad();
        Tensor<double> dx = fc.backward(w, true);
        if (which == 0)
            return check_gradient("dense.weight", fc.weight.value, fc.weight.grad, loss,
                                  opt.probes, rng);
        if (which == 1)
            return check_gradient("dense.bias", fc.bias.value, fc.bias.grad, loss, opt.probes,
                                  rng);
        return check_gradient("dense.input", x, dx, loss, opt.probes, rng);
    };
    aggregate("dense.weight", [&](Rng& r, int i) { return dense_case(r, i, 0); });
    aggregate("dense.bias", [&](Rng& r, int i) { return dense_case(r, i, 1); });
    aggregate("dense.input", [&](Rng& r, int i) { return dense_case(r, i, 2); });

    // ---- composed stage (conv -> bn -> relu -> pool) -------------------------
    aggregate("stage.input", [&](Rng& rng, int i) {
        const int N = 3, C = 1 + i % 2, F = 2 + i % 2, H = 4 + 2 * (i % 2);
        ConvStage<double> stage(C, F, 3, "s");
        for (auto* p : stage.params())
            for (auto& v : p->value.data) v = rng.normal() * 0.4;
        stage.bn.gamma.value.fill(1.0);
        Tensor<double> x = random_tensor({N, C, H, H}, rng);
        Tensor<double> w = random_tensor({N, F, H / 2, H / 2}, rng);
        auto loss = [&] {
            stage.bn.running_mean.fill(0.0);
            stage.bn.running_var.fill(1.0);
            return weighted_sum(stage.forward(x, true), w);
        };
        loss();
        Tensor<double> dx = stage.backward(w, true);
        return check_gradient("stage.input", x, dx, loss, opt.probes, rng);
    });

    // ---- losses ---------------------------------------------------------------
    aggregate("cross_entropy.logits", [&](Rng& rng, int i) {
        const int N = 3 + i % 3, K = 3 + i % 4;
        Tensor<double> logits = random_tensor({N, K}, rng, 2.0);
        const auto labels = random_labels(N, K, rng);
        auto loss = [&] { return softmax_cross_entropy(logits, labels).loss; };
        const auto ce = softmax_cross_entropy(logits, labels);
        return check_gradient("cross_entropy.logits", logits, ce.dlogits, loss, opt.probes, rng);
    });

    auto imitation_case = [&](Rng& rng, int i, int which) {
        const int N = 3, K = 4, D = 5 + i % 3;
        const double alpha = (i % 2) ? 0.4 : 0.7;
        Tensor<double> logits = random_tensor({N, K}, rng, 2.0);
        Tensor<double> g = random_tensor({N, D}, rng);
        Tensor<double> g_target = random_tensor({N, D}, rng);
        const auto labels = random_labels(N, K, rng);
        auto loss = [&] { return imitation_loss(logits, labels, g, g_target, alpha).loss; };
        const auto res = imitation_loss(logits, labels, g, g_target, alpha);
        if (which == 0)
            return check_gradient("imitation.logits", logits, res.dlogits, loss, opt.probes, rng);
        return check_gradient("imitation.features", g, res.dg, loss, opt.probes, rng);
    };
    aggregate("imitation.logits", [&](Rng& r, int i) { return imitation_case(r, i, 0); });
    aggregate("imitation.features", [&](Rng& r, int i) { return imitation_case(r, i, 1); });

    // ---- end-to-end input gradient (the adversarial-attack path) --------------
    aggregate("network.input(eval)", [&](Rng& rng, int i) {
        NetworkSpec spec;
        spec.kind = "fine";
        spec.input_channels = 2;
        spec.input_hw = 8;
        spec.stages = {{3, 3}};
        spec.fc_width = 6;
        spec.num_classes = 3;
        spec.input_mean = {0.0, 0.0};
        spec.input_std = {1.0, 1.0};
        Network<double> net(spec);
        net.he_init(opt.seed + static_cast<uint64_t>(i));
        for (auto& st : net.stages) {
            for (auto& v : st.bn.running_mean.data) v = rng.normal() * 0.2;
            for (auto& v : st.bn.running_var.data) v = 0.5 + rng.uniform01d();
        }
        const int N = 2;
        Tensor<double> x = random_tensor({N, 2, 8, 8}, rng);
        push_from_zero(x, 1e-3);
        const auto labels = random_labels(N, spec.num_classes, rng);
        auto loss = [&] { return softmax_cross_entropy(net.forward_logits(x, false), labels).loss; };
        loss();
        const auto ce = softmax_cross_entropy(net.forward_logits(x, false), labels);
        Tensor<double> dx = net.backward(ce.dlogits, nullptr, true);
        net.zero_grad();
        return check_gradient("network.input(eval)", x, dx, loss, opt.probes, rng);
    });

    return out;
}

bool gradient_suite_passes(const std::vector<GradCheckReport>& reports, double tol) {
    for (const auto& r : reports)
        if (!r.ok(tol) || r.checks == 0) return false;
    return !reports.empty();
}

}  // namespace twopath
