#pragma once

// Flat key=value experiment configuration. One file fully determines a run:
// dataset selection and subsetting, both pathway architectures, training
// and memory hyperparameters, noise grids, and output location. Unknown
// keys are hard errors so a typo cannot silently fall back to a default.
//
// dataset.path names the corpus root; each loader reads <root>/<kind>.
// The TWOPATH_DATA environment variable, when set, replaces the root.

#include <cstdint>
#include <string>
#include <vector>

#include "twopath/network.hpp"
#include "twopath/rbm.hpp"
#include "twopath/train.hpp"

namespace twopath {

struct ExperimentConfig {
    std::string dataset_kind = "cifar10";  // cifar10 | cifar100 | masks
    std::string dataset_path = "data";     // corpus root
    std::vector<int> subset_classes_list;  // empty = keep all classes
    int subset_train = 0;                  // per-split caps; 0 = keep all
    int subset_test = 0;

    std::vector<StageSpec> fine_stages = {{128, 3}, {128, 3}, {128, 3}};
    int fine_fc_width = 1000;
    std::vector<StageSpec> coarse_stages = {{64, 11}, {128, 9}};
    int coarse_fc_width = 1000;
    PreprocSpec coarse_preproc{"lpf", 2.0, 0.5};

    TrainConfig train;         // fine pathway (and the coarse default)
    TrainConfig coarse_train;  // train.* plus any coarse_train.* overrides

    int rbm_hidden = 400;
    RbmTrainConfig rbm;

    std::vector<double> uniform_levels = {0.1, 0.5, 0.8};
    std::vector<double> saltpepper_levels = {0.1, 0.5, 0.8};
    std::vector<double> fgsm_levels = {0.05, 0.1, 0.5};
    std::vector<int> interplay_steps = {0, 1, 2, 5, 10, 20};
    int default_t = 10;

    int bias_n_super = 5;
    int bias_n_sub = 5;

    std::vector<int> sweep_channels = {16, 32, 64, 128};
    std::vector<int> sweep_kernels = {5, 7, 9, 11};
    std::vector<double> sweep_sigmas = {0.2, 1.4, 2.0};

    std::vector<uint64_t> seeds = {1, 2, 3};
    uint64_t seed = 1;
    std::string out = "runs/out";

    // corpus directory for a dataset kind, honoring the root override
    std::string data_dir(const std::string& kind) const { return dataset_path + "/" + kind; }
};

// Apply one key=value assignment; throws on unknown keys or bad values.
void set_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Parse a config file over the defaults, then apply the TWOPATH_DATA
// override if the variable is set.
ExperimentConfig load_config(const std::string& path);

// Canonical serialization of every key (the provenance copy written into
// each run directory). load_config(save_config(cfg)) reproduces cfg.
void save_config(const std::string& path, const ExperimentConfig& cfg);

}  // namespace twopath
