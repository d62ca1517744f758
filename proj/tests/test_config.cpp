// Tests for the flat key=value experiment configuration: parsing, strict
// unknown-key rejection, train/coarse_train inheritance, environment override,
// exact save/load round-trips, and the shipped profiles.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "twopath/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace twopath;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("twopath-config-" + std::to_string(std::rand()) + "-" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this) & 0xffff));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::string write_cfg(const TempDir& dir, const std::string& name, const std::string& text) {
    const std::string p = (dir.path / name).string();
    std::ofstream os(p);
    os << text;
    return p;
}

bool same_stages(const std::vector<StageSpec>& a, const std::vector<StageSpec>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].filters != b[i].filters || a[i].ksize != b[i].ksize) return false;
    return true;
}

bool same_train(const TrainConfig& a, const TrainConfig& b) {
    return a.epochs == b.epochs && a.batch_size == b.batch_size && a.lr == b.lr &&
           a.momentum == b.momentum && a.lr_decay_epochs == b.lr_decay_epochs &&
           a.lr_decay_factor == b.lr_decay_factor && a.alpha == b.alpha;
}

}  // namespace

TEST_CASE("defaults match the published experiment scale") {
    ExperimentConfig cfg;
    CHECK(cfg.dataset_kind == "cifar10");
    REQUIRE(cfg.fine_stages.size() == 3);
    for (const auto& s : cfg.fine_stages) {
        CHECK(s.filters == 128);
        CHECK(s.ksize == 3);
    }
    CHECK(cfg.fine_fc_width == 1000);
    REQUIRE(cfg.coarse_stages.size() == 2);
    CHECK(cfg.coarse_stages[0].filters == 64);
    CHECK(cfg.coarse_stages[0].ksize == 11);
    CHECK(cfg.coarse_stages[1].filters == 128);
    CHECK(cfg.coarse_stages[1].ksize == 9);
    CHECK(cfg.coarse_preproc.kind == "lpf");
    CHECK(cfg.coarse_preproc.sigma == doctest::Approx(2.0));
    CHECK(cfg.train.epochs == 150);
    CHECK(cfg.train.lr == doctest::Approx(0.1));
    CHECK(cfg.train.lr_decay_epochs == std::vector<int>{100, 125});
    CHECK(same_train(cfg.train, cfg.coarse_train));
    CHECK(cfg.rbm_hidden == 400);
    CHECK(cfg.rbm.epochs == 2000);
    CHECK(cfg.rbm.decay_epochs == std::vector<int>{500, 1000});
    CHECK(cfg.interplay_steps == std::vector<int>{0, 1, 2, 5, 10, 20});
    CHECK(cfg.default_t == 10);
    CHECK(cfg.seeds == std::vector<uint64_t>{1, 2, 3});
}

TEST_CASE("parses keys, comments, and blank lines") {
    TempDir dir;
    const std::string p = write_cfg(dir, "a.cfg",
                                    "# experiment setup\n"
                                    "\n"
                                    "dataset.kind = cifar100\n"
                                    "dataset.path = /data/corpora   # corpus root\n"
                                    "dataset.subset_classes = 0, 1, 2\n"
                                    "fine.stages = 16x3, 32x3\n"
                                    "fine.fc_width = 96\n"
                                    "coarse.preproc = binarize\n"
                                    "coarse.threshold = 0.25\n"
                                    "train.epochs = 20\n"
                                    "train.lr = 0.05\n"
                                    "rbm.hidden = 64\n"
                                    "noise.uniform_levels = 0.1, 0.5\n"
                                    "seeds = 7, 8\n"
                                    "out = runs/elsewhere\n");
    const ExperimentConfig cfg = load_config(p);
    CHECK(cfg.dataset_kind == "cifar100");
    CHECK(cfg.dataset_path == "/data/corpora");
    CHECK(cfg.subset_classes_list == std::vector<int>{0, 1, 2});
    REQUIRE(cfg.fine_stages.size() == 2);
    CHECK(cfg.fine_stages[0].filters == 16);
    CHECK(cfg.fine_stages[1].filters == 32);
    CHECK(cfg.fine_fc_width == 96);
    CHECK(cfg.coarse_preproc.kind == "binarize");
    CHECK(cfg.coarse_preproc.threshold == doctest::Approx(0.25));
    CHECK(cfg.train.epochs == 20);
    CHECK(cfg.train.lr == doctest::Approx(0.05));
    CHECK(cfg.coarse_train.epochs == 20);  // inherited
    CHECK(cfg.rbm_hidden == 64);
    CHECK(cfg.uniform_levels == std::vector<double>{0.1, 0.5});
    CHECK(cfg.seeds == std::vector<uint64_t>{7, 8});
    CHECK(cfg.out == "runs/elsewhere");
    CHECK(cfg.data_dir("cifar10") == "/data/corpora/cifar10");
}

TEST_CASE("coarse_train overrides win regardless of line order") {
    TempDir dir;
    const std::string body =
        "coarse_train.epochs = 9\n"
        "train.epochs = 7\n"
        "train.lr = 0.02\n";
    const ExperimentConfig cfg = load_config(write_cfg(dir, "o.cfg", body));
    CHECK(cfg.train.epochs == 7);
    CHECK(cfg.coarse_train.epochs == 9);
    // untouched coarse fields still inherit from train.*
    CHECK(cfg.coarse_train.lr == doctest::Approx(0.02));
    CHECK(cfg.train.lr == doctest::Approx(0.02));
}

TEST_CASE("unknown keys and malformed lines fail with file:line") {
    TempDir dir;
    const std::string p1 = write_cfg(dir, "bad1.cfg", "train.epochs = 5\nfine.widht = 3\n");
    CHECK_THROWS_WITH_AS(load_config(p1), doctest::Contains("bad1.cfg:2"), std::runtime_error);
    CHECK_THROWS_WITH_AS(load_config(p1), doctest::Contains("fine.widht"), std::runtime_error);

    const std::string p2 = write_cfg(dir, "bad2.cfg", "no equals sign here\n");
    CHECK_THROWS_WITH_AS(load_config(p2), doctest::Contains("bad2.cfg:1"), std::runtime_error);

    CHECK_THROWS_AS(load_config((dir.path / "missing.cfg").string()), std::runtime_error);
}

TEST_CASE("value validation rejects out-of-domain settings") {
    TempDir dir;
    auto reject = [&](const std::string& body, const char* needle) {
        const std::string p = write_cfg(dir, "v.cfg", body);
        CHECK_THROWS_WITH_AS(load_config(p), doctest::Contains(needle), std::runtime_error);
    };
    reject("train.epochs = banana\n", "integer");
    reject("fine.stages = 16x4\n", "odd");
    reject("fine.stages = 0x3\n", "positive");
    reject("coarse.preproc = sharpen\n", "coarse.preproc");
    reject("coarse.threshold = 1.5\n", "threshold");
    reject("coarse.sigma = -1\n", "sigma");
    reject("train.lr = inf\n", "number");
    reject("seeds =\n", "empty");
    reject("fine.fc_width = 0\n", "widths");
    reject("interplay.default_t = -1\n", "default_t");
}

TEST_CASE("TWOPATH_DATA overrides the dataset root from the environment") {
    TempDir dir;
    const std::string p = write_cfg(dir, "env.cfg", "dataset.path = /from/file\n");
    setenv("TWOPATH_DATA", "/from/env", 1);
    const ExperimentConfig cfg = load_config(p);
    unsetenv("TWOPATH_DATA");
    CHECK(cfg.dataset_path == "/from/env");
    CHECK(cfg.data_dir("masks") == "/from/env/masks");
    const ExperimentConfig plain = load_config(p);
    CHECK(plain.dataset_path == "/from/file");
}

TEST_CASE("save then load reproduces every field exactly") {
    TempDir dir;
    ExperimentConfig cfg;
    cfg.dataset_kind = "cifar100";
    cfg.dataset_path = "/tmp/tp data";  // embedded space survives
    cfg.subset_classes_list = {0, 3, 7};
    cfg.subset_train = 1234;
    cfg.subset_test = 567;
    cfg.fine_stages = {{16, 3}, {32, 5}};
    cfg.fine_fc_width = 77;
    cfg.coarse_stages = {{8, 7}};
    cfg.coarse_fc_width = 33;
    cfg.coarse_preproc.kind = "binarize";
    cfg.coarse_preproc.sigma = 1.4;
    cfg.coarse_preproc.threshold = 0.123456789123456789;  // needs 17 digits
    cfg.train.epochs = 21;
    cfg.train.batch_size = 32;
    cfg.train.lr = 0.0123456789123456789;
    cfg.train.momentum = 0.85;
    cfg.train.lr_decay_epochs = {5, 9, 13};
    cfg.train.lr_decay_factor = 0.3;
    cfg.train.alpha = 0.7;
    cfg.coarse_train = cfg.train;
    cfg.coarse_train.epochs = 11;
    cfg.coarse_train.lr = 1.0 / 3.0;
    cfg.rbm_hidden = 48;
    cfg.rbm.epochs = 111;
    cfg.rbm.lr = 0.07;
    cfg.rbm.decay_epochs = {50};
    cfg.rbm.decay_factor = 0.5;
    cfg.rbm.batch_size = 16;
    cfg.rbm.cd_steps = 3;
    cfg.uniform_levels = {0.1, 1.0 / 7.0, 0.8};
    cfg.saltpepper_levels = {0.05};
    cfg.fgsm_levels = {0.05, 0.1};
    cfg.interplay_steps = {0, 2, 4};
    cfg.default_t = 4;
    cfg.bias_n_super = 5;
    cfg.bias_n_sub = 4;
    cfg.sweep_channels = {4, 8};
    cfg.sweep_kernels = {5, 9};
    cfg.sweep_sigmas = {0.2, 2.0};
    cfg.seeds = {11, 22, 33};
    cfg.seed = 42;
    cfg.out = "runs/x";

    const std::string p = (dir.path / "round.cfg").string();
    save_config(p, cfg);
    const ExperimentConfig back = load_config(p);

    CHECK(back.dataset_kind == cfg.dataset_kind);
    CHECK(back.dataset_path == cfg.dataset_path);
    CHECK(back.subset_classes_list == cfg.subset_classes_list);
    CHECK(back.subset_train == cfg.subset_train);
    CHECK(back.subset_test == cfg.subset_test);
    CHECK(same_stages(back.fine_stages, cfg.fine_stages));
    CHECK(back.fine_fc_width == cfg.fine_fc_width);
    CHECK(same_stages(back.coarse_stages, cfg.coarse_stages));
    CHECK(back.coarse_fc_width == cfg.coarse_fc_width);
    CHECK(back.coarse_preproc.kind == cfg.coarse_preproc.kind);
    CHECK(back.coarse_preproc.sigma == cfg.coarse_preproc.sigma);          // bitwise
    CHECK(back.coarse_preproc.threshold == cfg.coarse_preproc.threshold);  // bitwise
    CHECK(same_train(back.train, cfg.train));
    CHECK(back.train.lr == cfg.train.lr);  // bitwise
    CHECK(same_train(back.coarse_train, cfg.coarse_train));
    CHECK(back.coarse_train.lr == cfg.coarse_train.lr);  // bitwise 1/3
    CHECK(back.rbm_hidden == cfg.rbm_hidden);
    CHECK(back.rbm.epochs == cfg.rbm.epochs);
    CHECK(back.rbm.lr == cfg.rbm.lr);
    CHECK(back.rbm.decay_epochs == cfg.rbm.decay_epochs);
    CHECK(back.rbm.decay_factor == cfg.rbm.decay_factor);
    CHECK(back.rbm.batch_size == cfg.rbm.batch_size);
    CHECK(back.rbm.cd_steps == cfg.rbm.cd_steps);
    CHECK(back.uniform_levels == cfg.uniform_levels);  // bitwise incl. 1/7
    CHECK(back.saltpepper_levels == cfg.saltpepper_levels);
    CHECK(back.fgsm_levels == cfg.fgsm_levels);
    CHECK(back.interplay_steps == cfg.interplay_steps);
    CHECK(back.default_t == cfg.default_t);
    CHECK(back.bias_n_super == cfg.bias_n_super);
    CHECK(back.bias_n_sub == cfg.bias_n_sub);
    CHECK(back.sweep_channels == cfg.sweep_channels);
    CHECK(back.sweep_kernels == cfg.sweep_kernels);
    CHECK(back.sweep_sigmas == cfg.sweep_sigmas);
    CHECK(back.seeds == cfg.seeds);
    CHECK(back.seed == cfg.seed);
    CHECK(back.out == cfg.out);

    // a second save of the reloaded config is byte-identical (canonical form)
    const std::string p2 = (dir.path / "round2.cfg").string();
    save_config(p2, back);
    std::ifstream f1(p, std::ios::binary), f2(p2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), {});
    const std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);
    CHECK(!b1.empty());
    CHECK(b1.back() == '\n');
}

TEST_CASE("set_config_key applies single overrides for the CLI") {
    ExperimentConfig cfg;
    set_config_key(cfg, "train.epochs", "3");
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.coarse_train.epochs == 3);  // train.* mirrors to coarse
    set_config_key(cfg, "coarse_train.epochs", "5");
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.coarse_train.epochs == 5);
    CHECK_THROWS_AS(set_config_key(cfg, "nope", "1"), std::runtime_error);
}

TEST_CASE("shipped profiles load and stay consistent with each other") {
    const std::string root = TWOPATH_SOURCE_DIR;
    const ExperimentConfig paper = load_config(root + "/profiles/paper.cfg");
    CHECK(paper.train.epochs == 150);
    CHECK(paper.rbm.epochs == 2000);
    CHECK(paper.fine_fc_width == 1000);
    CHECK(paper.coarse_stages[0].ksize == 11);
    CHECK(paper.seeds.size() == 3);
    CHECK(paper.subset_classes_list.empty());

    const ExperimentConfig desk = load_config(root + "/profiles/desk.cfg");
    CHECK(desk.train.epochs <= 25);
    CHECK(desk.subset_train <= 2000);
    CHECK(desk.rbm.epochs <= 500);
    CHECK(desk.subset_classes_list == std::vector<int>{0, 1, 2});

    // the desk grids keep the full-scale operating points
    auto contains = [](const std::vector<double>& v, double x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };
    for (double s : {0.2, 1.4, 2.0}) CHECK(contains(desk.sweep_sigmas, s));
    for (double u : paper.uniform_levels) CHECK(contains(desk.uniform_levels, u));
    for (double sp : paper.saltpepper_levels) CHECK(contains(desk.saltpepper_levels, sp));
    for (double e : paper.fgsm_levels) CHECK(contains(desk.fgsm_levels, e));
    auto contains_i = [](const std::vector<int>& v, int x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };
    CHECK(contains_i(desk.interplay_steps, desk.default_t));
    CHECK(contains_i(paper.interplay_steps, paper.default_t));
}
