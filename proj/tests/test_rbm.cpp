#include <cmath>
#include <filesystem>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "twopath/checkpoint.hpp"
#include "twopath/loss.hpp"
#include "twopath/rbm.hpp"
#include "twopath/rng.hpp"

using namespace twopath;

namespace {

std::string rbm_bytes(const Rbm& rbm) {
    std::string out;
    auto append = [&](const Tensor<float>& t) {
        out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
    };
    append(rbm.W);
    append(rbm.a);
    append(rbm.b);
    return out;
}

double cosine(const Tensor<float>& x, const Tensor<float>& y) {
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (size_t i = 0; i < x.data.size(); ++i) {
        dot += static_cast<double>(x.data[i]) * y.data[i];
        nx += static_cast<double>(x.data[i]) * x.data[i];
        ny += static_cast<double>(y.data[i]) * y.data[i];
    }
    return dot / (std::sqrt(nx) * std::sqrt(ny) + 1e-12);
}

// three binary patterns with a guaranteed set bit in each half
Tensor<float> stored_patterns(uint64_t seed) {
    Rng rng(seed);
    Tensor<float> pairs({3, 16});
    for (auto& v : pairs.data) v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
    for (int n = 0; n < 3; ++n) {
        pairs.data[n * 16 + n] = 1.0f;      // first half never all-zero
        pairs.data[n * 16 + 8 + n] = 1.0f;  // second half never all-zero
    }
    return pairs;
}

Tensor<float> half_of(const Tensor<float>& pairs, int row, int half) {
    Tensor<float> out({8});
    for (int i = 0; i < 8; ++i) out.data[i] = pairs.data[row * 16 + half * 8 + i];
    return out;
}

}  // namespace

TEST_CASE("energy matches an independently ordered 64-bit sum") {
    Rng rng(404);
    Rbm rbm = make_rbm(6, 4, 1);
    for (auto& w : rbm.W.data) w = rng.uniform(-1.0f, 1.0f);
    for (auto& v : rbm.a.data) v = rng.uniform(-1.0f, 1.0f);
    for (auto& v : rbm.b.data) v = rng.uniform(-1.0f, 1.0f);
    Tensor<float> v({6}), h({4});
    for (auto& x : v.data) x = rng.uniform01f();
    for (auto& x : h.data) x = rng.uniform01f();

    // oracle sums hidden-major, the reverse of the implementation's order
    double e = 0.0;
    for (int j = 3; j >= 0; --j) {
        for (int i = 5; i >= 0; --i)
            e -= static_cast<double>(v.data[i]) * rbm.W.data[i * 4 + j] * h.data[j];
        e -= static_cast<double>(rbm.b.data[j]) * h.data[j];
    }
    for (int i = 0; i < 6; ++i) e -= static_cast<double>(rbm.a.data[i]) * v.data[i];

    CHECK(rbm_energy(v, h, rbm) == doctest::Approx(e).epsilon(1e-8));

    Tensor<float> wrong({5});
    CHECK_THROWS_AS(rbm_energy(wrong, h, rbm), std::invalid_argument);
}

TEST_CASE("fresh memories start small, centered, and seeded") {
    const Rbm a = make_rbm(100, 80, 7);
    const Rbm b = make_rbm(100, 80, 7);
    const Rbm c = make_rbm(100, 80, 8);
    CHECK(rbm_bytes(a) == rbm_bytes(b));
    CHECK(rbm_bytes(a) != rbm_bytes(c));
    for (float v : a.a.data) CHECK(v == 0.0f);
    for (float v : a.b.data) CHECK(v == 0.0f);

    double sum = 0.0, sq = 0.0;
    for (float w : a.W.data) {
        sum += w;
        sq += static_cast<double>(w) * w;
    }
    const double n = static_cast<double>(a.W.data.size());
    const double mean = sum / n;
    const double stdev = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) < 5e-4);
    CHECK(stdev > 0.0095);
    CHECK(stdev < 0.0105);

    CHECK_THROWS_AS(make_rbm(0, 4, 1), std::invalid_argument);
}

TEST_CASE("feature normalization is an invertible squash onto the unit box") {
    Rng rng(55);
    Tensor<float> pairs({40, 12});
    for (auto& v : pairs.data) v = rng.uniform(-3.0f, 5.0f);
    // make one dimension constant to exercise the degenerate guard
    for (int n = 0; n < 40; ++n) pairs.data[n * 12 + 7] = 1.25f;
    const NormStats stats = fit_norm_stats(pairs);
    REQUIRE(stats.mn.size() == 12);
    CHECK(stats.mn[7] == 1.25f);
    CHECK(stats.mx[7] == 1.25f);

    SUBCASE("round trip within 1e-5 on in-range data") {
        const auto v = normalize_features(pairs, stats);
        const auto back = denormalize_features(v, stats);
        for (float x : v.data) {
            CHECK(x >= 0.0f);
            CHECK(x <= 1.0f);
        }
        for (size_t i = 0; i < pairs.data.size(); ++i)
            CHECK(std::abs(back.data[i] - pairs.data[i]) < 1e-5f);
    }
    SUBCASE("column extremes map to the box endpoints") {
        const auto v = normalize_features(pairs, stats);
        for (int i = 0; i < 12; ++i) {
            float lo = 2.0f, hi = -2.0f;
            for (int n = 0; n < 40; ++n) {
                lo = std::min(lo, v.data[n * 12 + i]);
                hi = std::max(hi, v.data[n * 12 + i]);
            }
            CHECK(lo == doctest::Approx(0.0).epsilon(1e-6));
            if (i != 7) CHECK(hi == doctest::Approx(1.0).epsilon(1e-4));
        }
    }
    SUBCASE("constant dimensions collapse to zero without blowing up") {
        const auto v = normalize_features(pairs, stats);
        for (int n = 0; n < 40; ++n) {
            CHECK(std::isfinite(v.data[n * 12 + 7]));
            CHECK(v.data[n * 12 + 7] == doctest::Approx(0.0));
        }
    }
    SUBCASE("out-of-range values clip to the box") {
        Tensor<float> wild({1, 12});
        for (int i = 0; i < 12; ++i) wild.data[i] = i % 2 == 0 ? -100.0f : 100.0f;
        const auto v = normalize_features(wild, stats);
        for (int i = 0; i < 12; ++i) CHECK((v.data[i] == 0.0f || v.data[i] == 1.0f));
    }
    SUBCASE("windowed stats address the right columns") {
        Tensor<float> right({40, 5});
        for (int n = 0; n < 40; ++n)
            for (int i = 0; i < 5; ++i) right.data[n * 5 + i] = pairs.data[n * 12 + 7 + i];
        const auto whole = normalize_features(pairs, stats);
        const auto windowed = normalize_features(right, stats, 7);
        for (int n = 0; n < 40; ++n)
            for (int i = 0; i < 5; ++i)
                CHECK(windowed.data[n * 5 + i] == whole.data[n * 12 + 7 + i]);
    }
    SUBCASE("bad windows and unfitted stats are rejected") {
        Tensor<float> g({2, 12});
        CHECK_THROWS_AS(normalize_features(g, stats, 1), std::invalid_argument);
        CHECK_THROWS_AS(normalize_features(g, NormStats{}), std::invalid_argument);
    }
}

TEST_CASE("a zero learning rate reconstructs without touching the weights") {
    Rbm rbm = make_rbm(10, 6, 3);
    const std::string before = rbm_bytes(rbm);
    Rng rng(12);
    Tensor<float> batch({4, 10});
    for (auto& v : batch.data) v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
    Rng gibbs(77);
    const double err = cd1_update(rbm, batch, 0.0, gibbs);
    CHECK(rbm_bytes(rbm) == before);
    CHECK(err >= 0.0);
    CHECK(err <= 1.0);

    Tensor<float> narrow({4, 9});
    Rng g2(1);
    CHECK_THROWS_AS(cd1_update(rbm, narrow, 0.1, g2), std::invalid_argument);
    CHECK_THROWS_AS(cd1_update(rbm, batch, 0.1, g2, 0), std::invalid_argument);
}

TEST_CASE("three binary pairs are memorized and recalled by clamping") {
    const auto pairs = stored_patterns(2024);
    RbmTrainConfig cfg;  // 2000 epochs, lr 0.1 stepping at 500 and 1000
    std::vector<double> curve;
    const Rbm rbm = train_rbm(pairs, 32, cfg, &curve);

    REQUIRE(curve.size() == 2000);
    CHECK(curve.back() < 0.05);
    CHECK(curve.back() < curve.front());

    // recall each stored second half from its first half alone
    for (int n = 0; n < 3; ++n) {
        const auto key = half_of(pairs, n, 0);
        const auto want = half_of(pairs, n, 1);
        const Tensor<float> blank({8});
        const auto got = clamped_interplay(rbm, key, blank, ClampSide::first, 10);
        CHECK(cosine(got, want) >= 0.9);
    }
    // and the reverse direction, clamping the second half
    for (int n = 0; n < 3; ++n) {
        const auto key = half_of(pairs, n, 1);
        const auto want = half_of(pairs, n, 0);
        const Tensor<float> blank({8});
        const auto got = clamped_interplay(rbm, key, blank, ClampSide::second, 10);
        CHECK(cosine(got, want) >= 0.9);
    }
}

TEST_CASE("memory training is deterministic and validates its schedule") {
    const auto pairs = stored_patterns(9);
    RbmTrainConfig cfg;
    cfg.epochs = 40;
    cfg.decay_epochs = {20, 30};
    cfg.seed = 5;
    const Rbm a = train_rbm(pairs, 8, cfg);
    const Rbm b = train_rbm(pairs, 8, cfg);
    CHECK(rbm_bytes(a) == rbm_bytes(b));

    cfg.seed = 6;
    const Rbm c = train_rbm(pairs, 8, cfg);
    CHECK(rbm_bytes(a) != rbm_bytes(c));

    RbmTrainConfig bad;
    bad.epochs = 400;  // does not clear the default 500/1000 steps
    CHECK_THROWS_AS(train_rbm(pairs, 8, bad), std::invalid_argument);
}

TEST_CASE("clamped recall composes over steps and is inert at zero") {
    const auto pairs = stored_patterns(31);
    RbmTrainConfig cfg;
    cfg.epochs = 60;
    cfg.decay_epochs = {30, 45};
    const Rbm rbm = train_rbm(pairs, 12, cfg);

    Rng rng(3);
    Tensor<float> clamped({8}), start({8});
    for (auto& v : clamped.data) v = rng.uniform01f();
    for (auto& v : start.data) v = rng.uniform01f();

    SUBCASE("zero steps return the free half unchanged") {
        const auto out = clamped_interplay(rbm, clamped, start, ClampSide::first, 0);
        CHECK(out.data == start.data);
    }
    SUBCASE("running T then T' steps equals running T+T'") {
        const auto first = clamped_interplay(rbm, clamped, start, ClampSide::first, 3);
        const auto chained = clamped_interplay(rbm, clamped, first, ClampSide::first, 2);
        const auto direct = clamped_interplay(rbm, clamped, start, ClampSide::first, 5);
        CHECK(chained.data == direct.data);
    }
    SUBCASE("negative step counts and bad widths are rejected") {
        CHECK_THROWS_AS(clamped_interplay(rbm, clamped, start, ClampSide::first, -1),
                        std::invalid_argument);
        Tensor<float> wide({9});
        CHECK_THROWS_AS(clamped_interplay(rbm, wide, start, ClampSide::first, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("stored pairs sit closer to fixed points than random states") {
    const auto pairs = stored_patterns(77);
    RbmTrainConfig cfg;  // full default schedule for a well-settled memory
    const Rbm rbm = train_rbm(pairs, 32, cfg);

    auto moved = [&](const Tensor<float>& key, const Tensor<float>& state) {
        const auto out = clamped_interplay(rbm, key, state, ClampSide::first, 1);
        double d = 0.0;
        for (int i = 0; i < 8; ++i) {
            const double e = static_cast<double>(out.data[i]) - state.data[i];
            d += e * e;
        }
        return std::sqrt(d);
    };

    double stored_mean = 0.0;
    for (int n = 0; n < 3; ++n)
        stored_mean += moved(half_of(pairs, n, 0), half_of(pairs, n, 1));
    stored_mean /= 3.0;

    Rng rng(15);
    double random_mean = 0.0;
    const int trials = 24;
    for (int t = 0; t < trials; ++t) {
        const auto key = half_of(pairs, t % 3, 0);
        Tensor<float> state({8});
        for (auto& v : state.data) v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
        random_mean += moved(key, state);
    }
    random_mean /= trials;

    CHECK(stored_mean < random_mean);
}

TEST_CASE("context codebooks are seeded, binary, and well separated") {
    const auto a = make_context_vectors(5, 64, 11);
    const auto b = make_context_vectors(5, 64, 11);
    // nearby seeds can collide through the retry ladder (seed + attempt), so
    // the difference probe uses a far-away seed
    const auto c = make_context_vectors(5, 64, 1100);
    REQUIRE(a.size() == 5);
    for (int s = 0; s < 5; ++s) {
        CHECK(a[s].superclass_id == s);
        REQUIRE(a[s].values.data.size() == 64);
        CHECK(a[s].values.data == b[s].values.data);
        for (float v : a[s].values.data) CHECK((v == 0.0f || v == 1.0f));
    }
    bool differs = false;
    for (int s = 0; s < 5 && !differs; ++s) differs = a[s].values.data != c[s].values.data;
    CHECK(differs);

    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j) {
            int diff = 0;
            for (int k = 0; k < 64; ++k) diff += a[i].values.data[k] != a[j].values.data[k];
            CHECK(diff >= 0.4 * 64);
        }

    // forty 4-bit vectors cannot be pairwise 40% apart
    CHECK_THROWS_AS(make_context_vectors(40, 4, 1), std::runtime_error);
}

TEST_CASE("snapping picks the nearest context by cosine with ties to the lowest id") {
    std::vector<ContextVector> book(3);
    const int dim = 16;
    Rng rng(8);
    for (int s = 0; s < 3; ++s) {
        book[s].superclass_id = s;
        book[s].values = Tensor<float>({dim});
    }
    // orthogonal-ish one-hot blocks
    for (int s = 0; s < 3; ++s)
        for (int k = 0; k < dim; ++k) book[s].values.data[k] = (k / 5 == s) ? 1.0f : 0.0f;

    Tensor<float> noisy = book[1].values;
    for (auto& v : noisy.data) v += 0.15f * (rng.uniform01f() - 0.5f);
    CHECK(snap_to_context(noisy, book) == 1);
    CHECK(snap_to_context(book[2].values, book) == 2);

    Tensor<float> tie({dim});
    for (int k = 0; k < 10; ++k) tie.data[k] = 1.0f;  // overlaps blocks 0 and 1 equally
    CHECK(snap_to_context(tie, book) == 0);

    CHECK_THROWS_AS(snap_to_context(noisy, std::vector<ContextVector>{}), std::invalid_argument);
}

TEST_CASE("memory checkpoints round-trip weights, stats, and codebook") {
    auto pairs = stored_patterns(41);
    RbmTrainConfig cfg;
    cfg.epochs = 30;
    cfg.decay_epochs = {15, 22};
    Rbm rbm = train_rbm(pairs, 8, cfg);
    rbm.norm = fit_norm_stats(pairs);
    const auto book = make_context_vectors(3, 8, 4);

    save_rbm("assoc.ckpt", rbm, &book);
    std::vector<ContextVector> loaded_book;
    const Rbm loaded = load_rbm("assoc.ckpt", &loaded_book);
    CHECK(rbm_bytes(loaded) == rbm_bytes(rbm));
    CHECK(loaded.norm.mn == rbm.norm.mn);
    CHECK(loaded.norm.mx == rbm.norm.mx);
    REQUIRE(loaded_book.size() == 3);
    for (int s = 0; s < 3; ++s) {
        CHECK(loaded_book[s].superclass_id == s);
        CHECK(loaded_book[s].values.data == book[s].values.data);
    }

    SUBCASE("saving without a codebook loads an empty one") {
        save_rbm("assoc_plain.ckpt", rbm);
        std::vector<ContextVector> empty_book = book;
        load_rbm("assoc_plain.ckpt", &empty_book);
        CHECK(empty_book.empty());
        std::remove("assoc_plain.ckpt");
    }
    SUBCASE("foreign and incomplete checkpoints are rejected") {
        std::vector<NamedTensor> ts;
        ts.push_back(meta_string("meta/model", "rbm-assoc"));
        save_tensors("incomplete.ckpt", ts);
        CHECK_THROWS_AS(load_rbm("incomplete.ckpt"), std::runtime_error);
        std::remove("incomplete.ckpt");

        std::vector<NamedTensor> other;
        other.push_back(meta_string("meta/model", "pathway-network"));
        save_tensors("foreign.ckpt", other);
        CHECK_THROWS_AS(load_rbm("foreign.ckpt"), std::runtime_error);
        std::remove("foreign.ckpt");
    }
    SUBCASE("unfitted stats refuse to save") {
        Rbm fresh = make_rbm(16, 8, 1);
        CHECK_THROWS_AS(save_rbm("nope.ckpt", fresh), std::invalid_argument);
    }
    std::remove("assoc.ckpt");
}

namespace {

// small labeled split with a color signature per class; coarse_label mirrors
// fine_label so it can stand in for a super-class id
Dataset protocol_dataset(int per_class, uint64_t seed) {
    Dataset data;
    data.num_classes = 3;
    data.channels = 3;
    Rng rng(seed_for("protocol-data", seed));
    auto emit = [&](DatasetSplit& split, int cls) {
        LabeledImage img;
        img.pixels = Tensor<float>({3, 32, 32});
        for (int c = 0; c < 3; ++c) {
            const float base = c == cls ? 0.7f : 0.3f;
            for (int i = 0; i < 32 * 32; ++i)
                img.pixels.data[c * 32 * 32 + i] = base + 0.1f * (rng.uniform01f() - 0.5f);
        }
        img.fine_label = cls;
        img.coarse_label = cls;
        split.images.push_back(std::move(img));
    };
    for (int k = 0; k < per_class; ++k)
        for (int cls = 0; cls < 3; ++cls) emit(data.train, cls);
    for (int k = 0; k < per_class / 2 + 1; ++k)
        for (int cls = 0; cls < 3; ++cls) emit(data.test, cls);
    return data;
}

NetworkSpec protocol_fine_spec(const DatasetSplit& train) {
    NetworkSpec spec;
    spec.kind = "fine";
    spec.stages = {{4, 3}};
    spec.fc_width = 8;
    spec.num_classes = 3;
    pathway_stats(spec, train, spec.input_mean, spec.input_std);
    return spec;
}

NetworkSpec protocol_coarse_spec(const DatasetSplit& train) {
    NetworkSpec spec;
    spec.kind = "coarse";
    spec.input_channels = 1;
    spec.stages = {{4, 5}};
    spec.fc_width = 8;
    spec.num_classes = 3;
    spec.preproc.kind = "lpf";
    spec.preproc.sigma = 1.0;
    pathway_stats(spec, train, spec.input_mean, spec.input_std);
    return spec;
}

NormStats unit_box_stats(int width) {
    NormStats s;
    s.mn.assign(width, 0.0f);
    s.mx.assign(width, 1.0f);
    return s;
}

}  // namespace

TEST_CASE("association with zero steps is exactly the plain fine pathway") {
    const auto data = protocol_dataset(6, 88);
    auto fine_spec = protocol_fine_spec(data.train);
    auto coarse_spec = protocol_coarse_spec(data.train);
    Network<float> fine(fine_spec), coarse(coarse_spec);
    fine.he_init(1);
    coarse.he_init(2);
    Rbm rbm = make_rbm(16, 8, 3);
    rbm.norm = unit_box_stats(16);

    AssociationSystem sys;
    sys.fine = &fine;
    sys.coarse = &coarse;
    sys.rbm = &rbm;

    NoiseSpec noise;
    noise.kind = "uniform";
    noise.level = 0.2;
    noise.seed = 5;

    const auto bypass = associated_predict(sys, data.test, noise, 0);
    const auto corrupted = corrupt_images(data.test, noise, &fine);
    auto gF = split_features(fine, data.test, &corrupted);
    const auto plain = argmax_rows(fine.readout_only(gF, false));
    REQUIRE(bypass.size() == plain.size());
    CHECK(bypass == plain);

    SUBCASE("memory-coupled predictions are deterministic and per image") {
        const auto a = associated_predict(sys, data.test, noise, 5);
        const auto b = associated_predict(sys, data.test, noise, 5);
        CHECK(a == b);
        for (int p : a) {
            CHECK(p >= 0);
            CHECK(p < 3);
        }
        // the single-image entry point reproduces a one-image split
        DatasetSplit one;
        one.images.push_back(data.test.images[0]);
        NoiseSpec clean;
        const int direct = robustness_inference(fine, coarse, rbm, data.test.images[0], clean, 5);
        AssociationSystem same = sys;
        CHECK(direct == associated_predict(same, one, clean, 5)[0]);
    }
    SUBCASE("geometry mismatches are rejected") {
        Rbm narrow = make_rbm(8, 4, 1);
        narrow.norm = unit_box_stats(8);
        AssociationSystem bad = sys;
        bad.rbm = &narrow;
        CHECK_THROWS_AS(associated_predict(bad, data.test, noise, 1), std::invalid_argument);
        CHECK_THROWS_AS(associated_predict(sys, data.test, noise, -1), std::invalid_argument);
    }
    SUBCASE("accuracy counts exact label matches") {
        DatasetSplit four;
        for (int i = 0; i < 4; ++i) four.images.push_back(data.test.images[i]);
        std::vector<int> pred = {four.images[0].fine_label, four.images[1].fine_label, -1, -1};
        CHECK(accuracy_of(pred, four) == doctest::Approx(0.5));
        CHECK_THROWS_AS(accuracy_of({0}, four), std::invalid_argument);
    }
}

TEST_CASE("the biased readout learns ground-truth contexts and reports retrievals") {
    const auto data = protocol_dataset(8, 97);
    auto fine_spec = protocol_fine_spec(data.train);
    auto coarse_spec = protocol_coarse_spec(data.train);
    Network<float> fine(fine_spec), coarse(coarse_spec);
    fine.he_init(4);
    coarse.he_init(5);

    const auto book = make_context_vectors(3, 8, 21);
    TrainConfig head_cfg;
    head_cfg.epochs = 25;
    head_cfg.batch_size = 8;
    head_cfg.lr = 0.05;
    head_cfg.lr_decay_epochs = {20};
    head_cfg.seed = 9;
    const BiasedHead head = train_biased_head(fine, data, book, head_cfg);

    Rbm rbm = make_rbm(16, 8, 6);
    rbm.norm = unit_box_stats(16);

    BiasSystem sys;
    sys.fine = &fine;
    sys.coarse = &coarse;
    sys.rbm = &rbm;
    sys.head = &head;
    sys.codebook = &book;

    NoiseSpec clean;
    SUBCASE("oracle contexts reveal the label through the context block") {
        const auto pred = biased_predict(sys, data.test, clean, 0, true);
        CHECK(accuracy_of(pred, data.test) >= 0.8);
    }
    SUBCASE("retrieved contexts are snapped codebook ids and deterministic") {
        std::vector<int> super_a, super_b;
        const auto a = biased_predict(sys, data.test, clean, 2, false, &super_a);
        const auto b = biased_predict(sys, data.test, clean, 2, false, &super_b);
        CHECK(a == b);
        CHECK(super_a == super_b);
        REQUIRE(super_a.size() == data.test.images.size());
        for (int s : super_a) {
            CHECK(s >= 0);
            CHECK(s < 3);
        }
        // single-image wrapper agrees with a one-image split
        DatasetSplit one;
        one.images.push_back(data.test.images[2]);
        CHECK(biased_inference(sys, data.test.images[2], clean, 2) ==
              biased_predict(sys, one, clean, 2)[0]);
    }
    SUBCASE("incomplete systems are rejected") {
        BiasSystem bad = sys;
        bad.head = nullptr;
        CHECK_THROWS_AS(biased_predict(bad, data.test, clean, 1), std::invalid_argument);
    }
}

TEST_CASE("biased head round-trips through its checkpoint byte-exactly") {
    BiasedHead head;
    head.readout = Dense<float>(12, 4, "biased_readout");
    Rng rng(9);
    for (auto& v : head.readout.weight.value.data) v = rng.normal() * 0.3f;
    for (auto& v : head.readout.bias.value.data) v = rng.normal() * 0.1f;

    const std::string path =
        (std::filesystem::temp_directory_path() / "twopath-head-rt.ckpt").string();
    save_biased_head(path, head);
    const BiasedHead back = load_biased_head(path);
    CHECK(back.readout.in_dim == 12);
    CHECK(back.readout.out_dim == 4);
    CHECK(back.readout.weight.value.data == head.readout.weight.value.data);
    CHECK(back.readout.bias.value.data == head.readout.bias.value.data);

    // a memory checkpoint is not a head checkpoint
    Rbm rbm = make_rbm(6, 4, 3);
    rbm.norm.mn.assign(6, 0.0f);
    rbm.norm.mx.assign(6, 1.0f);
    const std::string other =
        (std::filesystem::temp_directory_path() / "twopath-head-rbm.ckpt").string();
    save_rbm(other, rbm);
    CHECK_THROWS_AS(load_biased_head(other), std::runtime_error);
    std::filesystem::remove(path);
    std::filesystem::remove(other);
}
