// Corruption models: bounded uniform noise, whole-pixel salt-and-pepper
// replacement, and the signed-gradient attack, checked against statistical
// and finite-difference oracles.

#include <cmath>
#include <set>

#include "doctest.h"
#include "twopath/loss.hpp"
#include "twopath/noise.hpp"
#include "twopath/rng.hpp"

using namespace twopath;

namespace {

Tensor<float> random_rgb(int hw, uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
    Rng rng(seed);
    Tensor<float> t({3, hw, hw});
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

NetworkSpec tiny_spec() {
    NetworkSpec spec;
    spec.kind = "fine";
    spec.input_channels = 3;
    spec.stages = {{4, 3}};
    spec.fc_width = 8;
    spec.num_classes = 3;
    spec.input_mean = {0.5, 0.5, 0.5};
    spec.input_std = {0.25, 0.3, 0.2};
    return spec;
}

}  // namespace

TEST_CASE("uniform noise is bounded, zero-mean, seeded, and clipped") {
    const auto x = random_rgb(32, 1);

    {  // U = 0 is the identity
        Rng rng(9);
        CHECK(add_uniform(x, 0.0, rng).data == x.data);
    }
    {  // bound max |out-in| <= U, range still [0,1]
        Rng rng(9);
        const auto y = add_uniform(x, 0.8, rng);
        float max_diff = 0;
        for (size_t i = 0; i < x.data.size(); ++i) {
            max_diff = std::max(max_diff, std::abs(y.data[i] - x.data[i]));
            CHECK(y.data[i] >= 0.0f);
            CHECK(y.data[i] <= 1.0f);
        }
        CHECK(max_diff <= 0.8f);
        CHECK(max_diff > 0.5f);  // noise actually applied
    }
    {  // determinism in the seed
        Rng a(33), b(33), c(34);
        const auto ya = add_uniform(x, 0.5, a);
        const auto yb = add_uniform(x, 0.5, b);
        const auto yc = add_uniform(x, 0.5, c);
        CHECK(ya.data == yb.data);
        CHECK(ya.data != yc.data);
    }
    {  // zero-mean: 10^5 mid-gray pixels, no clipping at U=0.5
        Rng rng(4242);
        Tensor<float> gray({3, 183, 183});  // 100467 pixels per channel
        gray.data.assign(gray.data.size(), 0.5f);
        const auto y = add_uniform(gray, 0.5, rng);
        double shift = 0;
        for (float v : y.data) shift += v - 0.5;
        shift /= static_cast<double>(y.data.size());
        CHECK(std::abs(shift) < 0.01);
    }
    Rng rng(1);
    CHECK_THROWS(add_uniform(x, -0.1, rng));
}

TEST_CASE("salt-pepper replaces exactly the rounded pixel count, whole pixels") {
    Tensor<float> x({3, 32, 32});
    x.data.assign(x.data.size(), 0.25f);  // distinguishable from both 0 and 1

    {  // p = 0 is the identity
        Rng rng(5);
        CHECK(add_salt_pepper(x, 0.0, rng).data == x.data);
    }
    {  // exact count, all channels moved together, seeded
        Rng rng(5);
        const auto y = add_salt_pepper(x, 0.3, rng);
        int changed = 0, white = 0;
        for (int p = 0; p < 32 * 32; ++p) {
            const float r = y.data[p], g = y.data[1024 + p], b = y.data[2048 + p];
            if (r != 0.25f) {
                ++changed;
                CHECK(r == g);
                CHECK(g == b);
                CHECK((r == 0.0f || r == 1.0f));
                if (r == 1.0f) ++white;
            } else {
                CHECK(g == 0.25f);
                CHECK(b == 0.25f);
            }
        }
        CHECK(changed == 307);  // round(0.3 * 1024)
        // white/black split is a fair coin: 307 draws, allow 5 sigma
        CHECK(std::abs(white - 153.5) < 5 * std::sqrt(307 * 0.25));

        Rng rng2(5);
        CHECK(add_salt_pepper(x, 0.3, rng2).data == y.data);
    }
    {  // p = 1 turns every pixel black or white
        Rng rng(6);
        const auto y = add_salt_pepper(x, 1.0, rng);
        for (float v : y.data) CHECK((v == 0.0f || v == 1.0f));
    }
    Rng rng(1);
    CHECK_THROWS(add_salt_pepper(x, -0.01, rng));
    CHECK_THROWS(add_salt_pepper(x, 1.01, rng));
}

TEST_CASE("signed-gradient attack matches a finite-difference sign oracle") {
    auto net = build_network<float>(tiny_spec(), 77);
    // mid-range pixels so the +/- 0.05 step never clips
    const auto img = random_rgb(32, 99, 0.3f, 0.7f);
    const double eps = 0.05;
    const auto adv = fgsm(net, img, 1, eps);

    // reference loss as a function of the raw image
    auto loss_at = [&](const Tensor<float>& raw) {
        Tensor<float> b({1, 3, 32, 32});
        b.data = raw.data;
        normalize_inplace(b, net.spec.input_mean, net.spec.input_std);
        return softmax_cross_entropy(net.forward_logits(b, false), std::vector<int>{1}).loss;
    };

    Rng pick(123);
    int checked = 0, agreed = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const size_t i = pick.below(static_cast<uint32_t>(img.data.size()));
        Tensor<float> hi = img, lo = img;
        const float h = 1e-3f;
        hi.data[i] += h;
        lo.data[i] -= h;
        const double fd = (loss_at(hi) - loss_at(lo)) / (2.0 * h);
        if (std::abs(fd) <= 1e-6) continue;  // sign unreliable at tiny slopes
        ++checked;
        const float step = adv.data[i] - img.data[i];
        if ((fd > 0 && step == doctest::Approx(eps)) || (fd < 0 && step == doctest::Approx(-eps)))
            ++agreed;
    }
    REQUIRE(checked > 100);
    CHECK(static_cast<double>(agreed) / checked >= 0.99);
}

TEST_CASE("attack basics: zero step is identity, loss goes up on average") {
    auto net = build_network<float>(tiny_spec(), 3);
    std::vector<LabeledImage> imgs;
    std::vector<int> idx, labels;
    for (int i = 0; i < 32; ++i) {
        LabeledImage li;
        li.pixels = random_rgb(32, 1000 + i, 0.2f, 0.8f);
        li.fine_label = i % 3;
        imgs.push_back(std::move(li));
        idx.push_back(i);
        labels.push_back(i % 3);
    }
    const auto raw = stack_batch(imgs, idx);

    CHECK(fgsm_batch(net, raw, labels, 0.0).data == raw.data);
    CHECK_THROWS(fgsm_batch(net, raw, labels, -0.1));

    auto ce_of = [&](const Tensor<float>& r) {
        Tensor<float> b = r;
        normalize_inplace(b, net.spec.input_mean, net.spec.input_std);
        return softmax_cross_entropy(net.forward_logits(b, false), labels).loss;
    };
    const auto adv = fgsm_batch(net, raw, labels, 0.05);
    CHECK(ce_of(adv) > ce_of(raw));
    for (float v : adv.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }

    // the attack must not leave gradients behind in the network
    for (auto* p : net.parameters())
        for (float g : p->grad.data) CHECK(g == 0.0f);
}

TEST_CASE("split corruption derives one seed per image index") {
    DatasetSplit split;
    for (int i = 0; i < 6; ++i) {
        LabeledImage li;
        li.pixels = random_rgb(32, 70 + i);
        li.fine_label = i % 3;
        split.images.push_back(std::move(li));
    }

    NoiseSpec spec;
    spec.kind = "uniform";
    spec.level = 0.5;
    spec.seed = 21;
    const auto a = corrupt_images(split, spec);
    const auto b = corrupt_images(split, spec);
    REQUIRE(a.size() == 6);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].data == b[i].data);

    // matches the per-image construction exactly
    Rng rng(seed_for_index(spec.seed, 3));
    const auto direct = add_uniform(split.images[3].pixels, 0.5, rng);
    CHECK(a[3].data == direct.data);

    spec.seed = 22;
    const auto c = corrupt_images(split, spec);
    CHECK(c[0].data != a[0].data);

    NoiseSpec none;
    none.kind = "none";
    const auto d = corrupt_images(split, none);
    CHECK(d[2].data == split.images[2].pixels.data);

    NoiseSpec fg;
    fg.kind = "fgsm";
    fg.level = 0.05;
    CHECK_THROWS(corrupt_images(split, fg));  // needs a target network

    auto net = build_network<float>(tiny_spec(), 8);
    const auto e = corrupt_images(split, fg, &net);
    CHECK(e.size() == 6);
    // chunking is row-independent: the single-image entry point agrees
    const auto single = fgsm(net, split.images[4].pixels, split.images[4].fine_label, 0.05);
    CHECK(e[4].data == single.data);

    NoiseSpec bogus;
    bogus.kind = "poisson";
    CHECK_THROWS(corrupt_images(split, bogus));
}
