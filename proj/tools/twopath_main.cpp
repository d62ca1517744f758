// Experiment driver for the two-pathway recognition framework.
//
// Subcommands:
//   make-data    write the synthetic corpora (ten-class, super-class, masks)
//   train-fine   train the fine-input pathway, save checkpoint + metrics CSV
//   train-coarse train the coarse-input pathway (optionally imitating a
//                trained fine network's feature layer)
//   train-rbm    train the associative memory for one task protocol
//   sweep        run one published-figure sweep into a long-form CSV
//   gradcheck    finite-difference verification of every backward pass
//   eval         accuracy of a saved network, optionally under corruption
//
// Every command is fully determined by (config, seed): rerunning with the
// same inputs reproduces checkpoints byte-for-byte and CSVs except for the
// wall_seconds column. The TWOPATH_DATA environment variable overrides the
// dataset root from the config file.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "twopath/checkpoint.hpp"
#include "twopath/config.hpp"
#include "twopath/data.hpp"
#include "twopath/datagen.hpp"
#include "twopath/gradcheck_suite.hpp"
#include "twopath/network.hpp"
#include "twopath/noise.hpp"
#include "twopath/rbm.hpp"
#include "twopath/rng.hpp"
#include "twopath/train.hpp"

namespace fs = std::filesystem;
using namespace twopath;

namespace {

// ---- shared option plumbing -------------------------------------------------

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    uint64_t seed = 0;
    int epochs = 0;
    int subset = 0;
    std::string out;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* epochs_opt = nullptr;
    CLI::Option* subset_opt = nullptr;
    CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "experiment config file (key = value lines)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", a.sets, "override one config key, e.g. --set train.lr=0.05")
        ->take_all();
    a.seed_opt = cmd->add_option("--seed", a.seed, "run seed (overrides the config)");
    a.epochs_opt = cmd->add_option("--epochs", a.epochs, "override both training epoch counts");
    a.subset_opt = cmd->add_option("--subset", a.subset, "cap the training split size");
    a.out_opt = cmd->add_option("--out", a.out, "output directory (overrides the config)");
}

ExperimentConfig resolve_config(const CommonArgs& a) {
    ExperimentConfig cfg;
    if (!a.config_path.empty()) {
        cfg = load_config(a.config_path);
    } else if (const char* env = std::getenv("TWOPATH_DATA"); env && *env) {
        cfg.dataset_path = env;
    }
    for (const auto& kv : a.sets) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--set expects key=value, got '" + kv + "'");
        set_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (a.seed_opt && a.seed_opt->count()) cfg.seed = a.seed;
    if (a.epochs_opt && a.epochs_opt->count()) {
        cfg.train.epochs = a.epochs;
        cfg.coarse_train.epochs = a.epochs;
    }
    if (a.subset_opt && a.subset_opt->count()) cfg.subset_train = a.subset;
    if (a.out_opt && a.out_opt->count()) cfg.out = a.out;
    return cfg;
}

// ---- dataset plumbing ---------------------------------------------------------

Dataset load_base_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset_kind == "cifar10") return load_cifar10(cfg.data_dir("cifar10"));
    if (cfg.dataset_kind == "cifar100") return load_cifar100(cfg.data_dir("cifar100"));
    return load_mask_dataset(cfg.data_dir("masks"));
}

Dataset load_experiment_dataset(const ExperimentConfig& cfg) {
    Dataset data = load_base_dataset(cfg);
    if (!cfg.subset_classes_list.empty() || cfg.subset_train > 0 || cfg.subset_test > 0) {
        std::vector<int> classes = cfg.subset_classes_list;
        if (classes.empty()) {
            classes.resize(data.num_classes);
            std::iota(classes.begin(), classes.end(), 0);
        }
        data = subset_classes(data, classes, cfg.subset_train, cfg.subset_test, cfg.seed);
    }
    return data;
}

// super-class corpus restricted to the configured bias task size
Dataset load_bias_dataset(const ExperimentConfig& cfg, uint64_t seed,
                          std::vector<SubclassMapping>* mapping_out = nullptr) {
    const Dataset full = load_cifar100(cfg.data_dir("cifar100"));
    std::vector<SubclassMapping> mapping;
    Dataset data = sample_superclass_subset(full, cfg.bias_n_super, cfg.bias_n_sub, seed, mapping);
    if (mapping_out) *mapping_out = std::move(mapping);
    return data;
}

// swap labels so a classifier trains on the super-class level
Dataset relabel_to_super(const Dataset& d) {
    if (d.num_coarse_classes <= 0)
        throw std::runtime_error("dataset has no super-class level to train on");
    Dataset out = d;
    for (auto* split : {&out.train, &out.test}) {
        for (auto& img : split->images) img.fine_label = img.coarse_label;
        split->class_names.clear();
        for (int c = 0; c < d.num_coarse_classes; ++c)
            split->class_names.push_back("super_" + std::to_string(c));
    }
    out.num_classes = d.num_coarse_classes;
    return out;
}

NetworkSpec fine_spec_for(const ExperimentConfig& cfg, const Dataset& data) {
    NetworkSpec s;
    s.kind = "fine";
    s.input_channels = 3;
    s.input_hw = 32;
    s.stages = cfg.fine_stages;
    s.fc_width = cfg.fine_fc_width;
    s.num_classes = data.num_classes;
    s.preproc = PreprocSpec{"none", 2.0, 0.5};
    pathway_stats(s, data.train, s.input_mean, s.input_std);
    return s;
}

NetworkSpec coarse_spec_for(const ExperimentConfig& cfg, const Dataset& data,
                            const PreprocSpec& preproc,
                            const std::vector<StageSpec>* stages_override = nullptr) {
    NetworkSpec s;
    s.kind = "coarse";
    s.input_channels = 1;
    s.input_hw = 32;
    s.stages = stages_override ? *stages_override : cfg.coarse_stages;
    s.fc_width = cfg.coarse_fc_width;
    s.num_classes = data.num_classes;
    s.preproc = preproc;
    pathway_stats(s, data.train, s.input_mean, s.input_std);
    return s;
}

Tensor<float> hconcat(const Tensor<float>& a, const Tensor<float>& b) {
    if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[0] != b.shape[0])
        throw std::invalid_argument("row-wise concatenation needs matching [N,*] tensors");
    const int n = a.shape[0], da = a.shape[1], db = b.shape[1];
    Tensor<float> out({n, da + db});
    for (int i = 0; i < n; ++i) {
        std::copy(a.data.begin() + static_cast<size_t>(i) * da,
                  a.data.begin() + static_cast<size_t>(i + 1) * da,
                  out.data.begin() + static_cast<size_t>(i) * (da + db));
        std::copy(b.data.begin() + static_cast<size_t>(i) * db,
                  b.data.begin() + static_cast<size_t>(i + 1) * db,
                  out.data.begin() + static_cast<size_t>(i) * (da + db) + da);
    }
    return out;
}

Network<float> load_checkpoint(const std::string& path, const char* role, const char* hint) {
    if (!fs::exists(path))
        throw std::runtime_error(std::string("missing prerequisite ") + role + " checkpoint '" +
                                 path + "' (train it first with `twopath " + hint + "`)");
    return load_network(path);
}

void write_provenance(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out);
    save_config(cfg.out + "/config.cfg", cfg);
}

void write_recon_csv(const std::string& path, const std::vector<double>& recon) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write reconstruction curve: " + path);
    os << "epoch,recon_error\n";
    char line[64];
    for (size_t e = 0; e < recon.size(); ++e) {
        std::snprintf(line, sizeof(line), "%zu,%.6f\n", e + 1, recon[e]);
        os << line;
    }
}

std::string fmt_g(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", x);
    return buf;
}

// ---- training recipes shared by commands and sweeps ---------------------------

Network<float> train_fine_net(const ExperimentConfig& cfg, const Dataset& data, uint64_t seed,
                              std::vector<EpochMetrics>* metrics_out = nullptr) {
    NetworkSpec spec = fine_spec_for(cfg, data);
    Network<float> net = build_network<float>(spec, seed);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    auto metrics = train_classifier(net, data, tc);
    if (metrics_out) *metrics_out = std::move(metrics);
    return net;
}

Network<float> train_coarse_net(const ExperimentConfig& cfg, const Dataset& data,
                                const PreprocSpec& preproc, uint64_t seed,
                                Network<float>* teacher,
                                const std::vector<StageSpec>* stages_override = nullptr,
                                std::vector<EpochMetrics>* metrics_out = nullptr) {
    NetworkSpec spec = coarse_spec_for(cfg, data, preproc, stages_override);
    Network<float> net = build_network<float>(spec, seed);
    TrainConfig tc = cfg.coarse_train;
    tc.seed = seed;
    auto metrics = teacher ? train_imitation(net, *teacher, data, tc)
                           : train_classifier(net, data, tc);
    if (metrics_out) *metrics_out = std::move(metrics);
    return net;
}

Rbm train_robustness_memory(const ExperimentConfig& cfg, const Dataset& data,
                            Network<float>& fine, Network<float>& coarse, uint64_t seed,
                            std::vector<double>* recon = nullptr) {
    const Tensor<float> gC = split_features(coarse, data.train);
    const Tensor<float> gF = split_features(fine, data.train);
    const Tensor<float> pairs = hconcat(gC, gF);
    const NormStats stats = fit_norm_stats(pairs);
    RbmTrainConfig rc = cfg.rbm;
    rc.seed = seed;
    Rbm rbm = train_rbm(normalize_features(pairs, stats), cfg.rbm_hidden, rc, recon);
    rbm.norm = stats;
    return rbm;
}

struct BiasArtifacts {
    Network<float> fine;
    Network<float> coarse;  // trained on super-class labels
    Rbm rbm;
    std::vector<ContextVector> codebook;
    BiasedHead head;
};

Rbm train_bias_memory(const ExperimentConfig& cfg, const Dataset& data, Network<float>& coarse,
                      const std::vector<ContextVector>& codebook, uint64_t seed,
                      std::vector<double>* recon = nullptr) {
    const Tensor<float> gC = split_features(coarse, data.train);
    const int n = gC.shape[0], fc = gC.shape[1];
    const int dim = static_cast<int>(codebook.at(0).values.data.size());
    Tensor<float> ctx({n, dim});
    for (int i = 0; i < n; ++i) {
        const int sup = data.train.images[i].coarse_label;
        if (sup < 0 || sup >= static_cast<int>(codebook.size()))
            throw std::runtime_error("training image lacks a context vector for its super class");
        std::copy(codebook[sup].values.data.begin(), codebook[sup].values.data.end(),
                  ctx.data.begin() + static_cast<size_t>(i) * dim);
    }
    const Tensor<float> pairs = hconcat(gC, ctx);
    const NormStats stats = fit_norm_stats(pairs);
    RbmTrainConfig rc = cfg.rbm;
    rc.seed = seed;
    Rbm rbm = train_rbm(normalize_features(pairs, stats), cfg.rbm_hidden, rc, recon);
    rbm.norm = stats;
    return rbm;
}

// the published bias experiments fix the coarse pathway's blur at 1.4
PreprocSpec bias_preproc(const ExperimentConfig& cfg) {
    PreprocSpec p = cfg.coarse_preproc;
    p.kind = "lpf";
    p.sigma = 1.4;
    return p;
}

BiasArtifacts train_bias_stack(const ExperimentConfig& cfg, const Dataset& data, uint64_t seed) {
    const Dataset super_view = relabel_to_super(data);
    BiasArtifacts art{train_fine_net(cfg, data, seed),
                      train_coarse_net(cfg, super_view, bias_preproc(cfg), seed, nullptr),
                      Rbm{},
                      make_context_vectors(data.num_coarse_classes, cfg.fine_fc_width, seed),
                      BiasedHead{}};
    art.rbm = train_bias_memory(cfg, data, art.coarse, art.codebook, seed);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    art.head = train_biased_head(art.fine, data, art.codebook, tc);
    return art;
}

// ---- subcommands ----------------------------------------------------------------

int run_make_data(const ExperimentConfig& cfg, int train_per_class, int test_per_class,
                  int super_train, int super_test, int mask_per_class) {
    SynthConfig ten;
    ten.train_per_class = train_per_class;
    ten.test_per_class = test_per_class;
    ten.seed = cfg.seed;
    write_synthetic_cifar10(cfg.data_dir("cifar10"), ten);

    SuperSynthConfig super;
    super.train_per_sub = super_train;
    super.test_per_sub = super_test;
    super.seed = cfg.seed;
    write_synthetic_cifar100(cfg.data_dir("cifar100"), super);

    write_synthetic_masks(cfg.data_dir("masks"), 8, mask_per_class, 32, cfg.seed);

    std::printf("make-data: wrote %s/{cifar10,cifar100,masks} (seed %llu)\n",
                cfg.dataset_path.c_str(), static_cast<unsigned long long>(cfg.seed));
    return 0;
}

int run_train_fine(const ExperimentConfig& cfg, bool bias_data, const std::string& name) {
    const Dataset data =
        bias_data ? load_bias_dataset(cfg, cfg.seed) : load_experiment_dataset(cfg);
    std::vector<EpochMetrics> metrics;
    Network<float> net = train_fine_net(cfg, data, cfg.seed, &metrics);
    write_provenance(cfg);
    save_network(cfg.out + "/" + name + ".ckpt", net);
    write_metrics_csv(cfg.out + "/" + name + "_train.csv", metrics);
    std::printf("train-fine: %d epochs, final test accuracy %.4f -> %s/%s.ckpt\n",
                cfg.train.epochs, metrics.back().test_accuracy, cfg.out.c_str(), name.c_str());
    return 0;
}

int run_train_coarse(const ExperimentConfig& cfg_in, bool imitate, const std::string& fine_ckpt,
                     bool sigma_given, double sigma, bool use_binarize, bool super_labels,
                     bool bias_data, const std::string& name) {
    ExperimentConfig cfg = cfg_in;
    if (sigma_given) {
        cfg.coarse_preproc.kind = "lpf";
        cfg.coarse_preproc.sigma = sigma;
    }
    if (use_binarize) cfg.coarse_preproc.kind = "binarize";

    Dataset data = bias_data ? load_bias_dataset(cfg, cfg.seed) : load_experiment_dataset(cfg);
    if (super_labels) data = relabel_to_super(data);

    std::optional<Network<float>> teacher;
    if (imitate) teacher.emplace(load_checkpoint(fine_ckpt, "fine", "train-fine"));
    Network<float>* teacher_ptr = teacher ? &*teacher : nullptr;
    std::vector<EpochMetrics> metrics;
    Network<float> net =
        train_coarse_net(cfg, data, cfg.coarse_preproc, cfg.seed, teacher_ptr, nullptr, &metrics);
    write_provenance(cfg);
    save_network(cfg.out + "/" + name + ".ckpt", net);
    write_metrics_csv(cfg.out + "/" + name + "_train.csv", metrics);
    std::printf("train-coarse: %s%s, final test accuracy %.4f -> %s/%s.ckpt\n",
                imitate ? "imitation" : "baseline",
                super_labels ? " on super-class labels" : "", metrics.back().test_accuracy,
                cfg.out.c_str(), name.c_str());
    return 0;
}

int run_train_rbm(const ExperimentConfig& cfg, const std::string& task,
                  const std::string& fine_ckpt, const std::string& coarse_ckpt,
                  std::string name) {
    if (name.empty()) name = "rbm_" + task;
    Network<float> fine = load_checkpoint(fine_ckpt, "fine", "train-fine");
    Network<float> coarse = load_checkpoint(coarse_ckpt, "coarse", "train-coarse");
    write_provenance(cfg);
    std::vector<double> recon;

    if (task == "robustness") {
        const Dataset data = load_experiment_dataset(cfg);
        if (fine.spec.num_classes != data.num_classes)
            throw std::runtime_error("fine checkpoint class count does not match the dataset");
        if (fine.spec.fc_width != coarse.spec.fc_width)
            throw std::runtime_error("pathway feature widths differ; retrain with matching "
                                     "fine.fc_width and coarse.fc_width");
        Rbm rbm = train_robustness_memory(cfg, data, fine, coarse, cfg.seed, &recon);
        save_rbm(cfg.out + "/" + name + ".ckpt", rbm);
        write_recon_csv(cfg.out + "/" + name + "_recon.csv", recon);
        std::printf("train-rbm: robustness memory, final reconstruction error %.6f -> %s/%s.ckpt\n",
                    recon.back(), cfg.out.c_str(), name.c_str());
        return 0;
    }

    // bias task: super-class corpus, context codebook, memory, retrained head
    std::vector<SubclassMapping> mapping;
    const Dataset data = load_bias_dataset(cfg, cfg.seed, &mapping);
    if (fine.spec.num_classes != data.num_classes)
        throw std::runtime_error("fine checkpoint was not trained on the bias subset (" +
                                 std::to_string(data.num_classes) + " sub-classes expected)");
    if (coarse.spec.num_classes != data.num_coarse_classes)
        throw std::runtime_error("coarse checkpoint must be trained on the super-class labels "
                                 "(use `twopath train-coarse --super-labels`)");
    if (fine.spec.fc_width != coarse.spec.fc_width)
        throw std::runtime_error("pathway feature widths differ; the bias memory pairs coarse "
                                 "features with context vectors of the fine feature width");
    const auto codebook =
        make_context_vectors(data.num_coarse_classes, fine.spec.fc_width, cfg.seed);
    Rbm rbm = train_bias_memory(cfg, data, coarse, codebook, cfg.seed, &recon);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    const BiasedHead head = train_biased_head(fine, data, codebook, tc);
    save_rbm(cfg.out + "/" + name + ".ckpt", rbm, &codebook);
    save_biased_head(cfg.out + "/bias_head.ckpt", head);
    write_recon_csv(cfg.out + "/" + name + "_recon.csv", recon);
    write_mapping(cfg.out + "/subclass_mapping.csv", mapping);
    std::printf("train-rbm: bias memory + head, final reconstruction error %.6f -> %s/%s.ckpt\n",
                recon.back(), cfg.out.c_str(), name.c_str());
    return 0;
}

int run_eval(const ExperimentConfig& cfg, const std::string& ckpt, const std::string& noise_kind,
             double level, const std::string& rbm_path, const std::string& coarse_ckpt,
             int steps, bool super_labels, bool bias_data) {
    Dataset data = bias_data ? load_bias_dataset(cfg, cfg.seed) : load_experiment_dataset(cfg);
    if (super_labels) data = relabel_to_super(data);

    NoiseSpec noise;
    noise.kind = noise_kind;
    noise.level = level;
    noise.seed = seed_for("noise/eval", cfg.seed);

    if (!rbm_path.empty()) {
        Network<float> fine = load_checkpoint(ckpt, "fine", "train-fine");
        Network<float> coarse = load_checkpoint(coarse_ckpt, "coarse", "train-coarse");
        const Rbm rbm = load_rbm(rbm_path);
        const AssociationSystem sys{&fine, &coarse, &rbm};
        const double acc = accuracy_of(associated_predict(sys, data.test, noise, steps), data.test);
        std::printf("accuracy %.6f (memory-completed, %d steps, %s %.3g)\n", acc, steps,
                    noise.kind.c_str(), noise.level);
        return 0;
    }

    Network<float> net = load_checkpoint(ckpt, "network", "train-fine");
    if (noise.kind == "fgsm" && net.spec.kind != "fine")
        throw std::runtime_error("adversarial evaluation attacks the fine pathway; "
                                 "load a fine checkpoint");
    const auto corrupted =
        corrupt_images(data.test, noise, noise.kind == "fgsm" ? &net : nullptr);
    const double acc = evaluate_accuracy(net, data.test, &corrupted);
    std::printf("accuracy %.6f (%s%s)\n", acc, noise.kind.c_str(),
                noise.kind == "none" ? "" : (" " + fmt_g(noise.level)).c_str());
    return 0;
}

int run_gradcheck(int instances, double tol, uint64_t seed, bool inject) {
    GradSuiteOptions opt;
    opt.instances = instances;
    opt.tol = tol;
    opt.seed = seed;
    opt.negate_conv_weight_grad = inject;
    const auto reports = run_gradient_suite(opt);
    std::printf("gradcheck: %zu primitives, %d instances each, tolerance %.1e\n", reports.size(),
                instances, tol);
    for (const auto& r : reports)
        std::printf("  %-24s checks %5d   max rel error %.3e   %s\n", r.name.c_str(), r.checks,
                    r.max_rel_error, r.ok(tol) ? "ok" : "FAIL");
    const bool pass = gradient_suite_passes(reports, tol);
    std::printf("gradcheck: %s\n", pass ? "PASS" : "FAIL");
    return pass ? 0 : 2;
}

// ---- sweep ------------------------------------------------------------------------

struct SweepDef {
    std::string var;                   // sweep variable name for the CSV
    std::vector<double> grid;          // numeric grid values
    std::vector<std::string> metrics;  // metric names, fixed order
    std::string family;                // imitation | pathways | association | bias
    std::string preproc_kind;          // imitation family: lpf | binarize
    std::string noise_kind;            // noise families: uniform | salt_pepper | fgsm
};

SweepDef sweep_def(const ExperimentConfig& cfg, const std::string& fig) {
    auto as_doubles = [](const std::vector<int>& xs) {
        return std::vector<double>(xs.begin(), xs.end());
    };
    SweepDef d;
    if (fig == "4a" || fig == "4b" || fig == "4c" || fig == "4d" || fig == "4e") {
        d.family = "imitation";
        d.metrics = {"coarse_baseline_accuracy", "coarse_imitation_accuracy"};
        d.preproc_kind = (fig == "4d" || fig == "4e") ? "binarize" : "lpf";
        if (fig == "4a" || fig == "4d") {
            d.var = "channels";
            d.grid = as_doubles(cfg.sweep_channels);
        } else if (fig == "4b" || fig == "4e") {
            d.var = "kernel";
            d.grid = as_doubles(cfg.sweep_kernels);
        } else {
            d.var = "sigma";
            d.grid = cfg.sweep_sigmas;
        }
        return d;
    }
    if (fig == "5a" || fig == "5b" || fig == "5c" || fig == "5d" || fig == "5e" || fig == "5f") {
        d.noise_kind = (fig == "5a" || fig == "5d")   ? "uniform"
                       : (fig == "5b" || fig == "5e") ? "salt_pepper"
                                                      : "fgsm";
        d.var = d.noise_kind;
        d.grid = d.noise_kind == "uniform"       ? cfg.uniform_levels
                 : d.noise_kind == "salt_pepper" ? cfg.saltpepper_levels
                                                 : cfg.fgsm_levels;
        if (fig == "5a" || fig == "5b" || fig == "5c") {
            d.family = "pathways";
            if (cfg.sweep_sigmas.empty())
                throw std::runtime_error("pathway sweeps need at least one sigma in sweep.sigmas");
            const double lo = *std::min_element(cfg.sweep_sigmas.begin(), cfg.sweep_sigmas.end());
            const double hi = *std::max_element(cfg.sweep_sigmas.begin(), cfg.sweep_sigmas.end());
            d.metrics = {"fine_accuracy", "coarse_sigma" + fmt_g(hi) + "_accuracy",
                         "coarse_sigma" + fmt_g(lo) + "_accuracy"};
        } else {
            d.family = "association";
            d.metrics = {"fine_accuracy", "associated_accuracy"};
        }
        return d;
    }
    if (fig == "6a" || fig == "6b") {
        d.family = "bias";
        d.noise_kind = fig == "6a" ? "uniform" : "salt_pepper";
        d.var = d.noise_kind;
        d.grid = fig == "6a" ? cfg.uniform_levels : cfg.saltpepper_levels;
        d.metrics = {"unbiased_accuracy", "oracle_biased_accuracy", "retrieved_biased_accuracy",
                     "super_retrieval"};
        return d;
    }
    throw std::runtime_error("unknown figure id '" + fig + "' (expected 4a-4e, 5a-5f, 6a, 6b)");
}

int run_sweep(const ExperimentConfig& cfg, const std::string& fig, bool plan) {
    const SweepDef def = sweep_def(cfg, fig);

    if (plan) {
        for (double value : def.grid)
            for (uint64_t seed : cfg.seeds)
                for (const auto& metric : def.metrics)
                    std::printf("%s,%llu,%s,%s,%s\n", fig.c_str(),
                                static_cast<unsigned long long>(seed), def.var.c_str(),
                                fmt_g(value).c_str(), metric.c_str());
        std::printf("plan %s: %zu rows (%zu grid points x %zu seeds x %zu metrics)\n", fig.c_str(),
                    def.grid.size() * cfg.seeds.size() * def.metrics.size(), def.grid.size(),
                    cfg.seeds.size(), def.metrics.size());
        return 0;
    }

    write_provenance(cfg);
    const std::string csv_path = cfg.out + "/sweep_" + fig + ".csv";
    std::ofstream os(csv_path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write sweep CSV: " + csv_path);
    os << "experiment,seed,sweep_var,sweep_value,metric,value,wall_seconds\n";
    auto emit = [&](uint64_t seed, double sweep_value, const std::string& metric, double value,
                    double wall) {
        char line[200];
        std::snprintf(line, sizeof(line), "%s,%llu,%s,%s,%s,%.6f,%.6f\n", fig.c_str(),
                      static_cast<unsigned long long>(seed), def.var.c_str(),
                      fmt_g(sweep_value).c_str(), metric.c_str(), value, wall);
        os << line;
    };
    using clock = std::chrono::steady_clock;

    if (def.family == "imitation") {
        const Dataset data = load_experiment_dataset(cfg);
        std::map<uint64_t, Network<float>> teachers;
        for (double value : def.grid) {
            for (uint64_t seed : cfg.seeds) {
                const auto t0 = clock::now();
                if (!teachers.count(seed))
                    teachers.emplace(seed, train_fine_net(cfg, data, seed));
                Network<float>& teacher = teachers.at(seed);

                std::vector<StageSpec> stages = cfg.coarse_stages;
                PreprocSpec preproc = cfg.coarse_preproc;
                preproc.kind = def.preproc_kind;
                if (def.var == "channels") {
                    const int c = static_cast<int>(value);
                    const int k1 = stages.at(0).ksize;
                    const int k2 = stages.size() > 1 ? stages[1].ksize : std::max(3, k1 - 2);
                    stages = {{c, k1}, {2 * c, k2}};
                } else if (def.var == "kernel") {
                    const int k = static_cast<int>(value);
                    const int f1 = stages.at(0).filters;
                    const int f2 = stages.size() > 1 ? stages[1].filters : 2 * f1;
                    stages = {{f1, k}, {f2, std::max(3, k - 2)}};
                } else {
                    preproc.sigma = value;
                }

                std::vector<EpochMetrics> base_m, imit_m;
                train_coarse_net(cfg, data, preproc, seed, nullptr, &stages, &base_m);
                train_coarse_net(cfg, data, preproc, seed, &teacher, &stages, &imit_m);
                const double wall = std::chrono::duration<double>(clock::now() - t0).count();
                emit(seed, value, def.metrics[0], base_m.back().test_accuracy, wall);
                emit(seed, value, def.metrics[1], imit_m.back().test_accuracy, wall);
            }
        }
    } else if (def.family == "pathways") {
        const Dataset data = load_experiment_dataset(cfg);
        const double lo = *std::min_element(cfg.sweep_sigmas.begin(), cfg.sweep_sigmas.end());
        const double hi = *std::max_element(cfg.sweep_sigmas.begin(), cfg.sweep_sigmas.end());
        struct Nets {
            Network<float> fine, wide, narrow;
        };
        std::map<uint64_t, Nets> cache;
        for (size_t gi = 0; gi < def.grid.size(); ++gi) {
            for (uint64_t seed : cfg.seeds) {
                const auto t0 = clock::now();
                if (!cache.count(seed)) {
                    Network<float> fine = train_fine_net(cfg, data, seed);
                    PreprocSpec wide = cfg.coarse_preproc, narrow = cfg.coarse_preproc;
                    wide.kind = narrow.kind = "lpf";
                    wide.sigma = hi;
                    narrow.sigma = lo;
                    Network<float> cw = train_coarse_net(cfg, data, wide, seed, &fine);
                    Network<float> cn = train_coarse_net(cfg, data, narrow, seed, &fine);
                    cache.emplace(seed,
                                  Nets{std::move(fine), std::move(cw), std::move(cn)});
                }
                Nets& nets = cache.at(seed);
                NoiseSpec noise{def.noise_kind, def.grid[gi],
                                seed_for_index(seed_for("noise/" + def.noise_kind, seed), gi)};
                const auto corrupted = corrupt_images(data.test, noise, &nets.fine);
                const double afine = evaluate_accuracy(nets.fine, data.test, &corrupted);
                const double awide = evaluate_accuracy(nets.wide, data.test, &corrupted);
                const double anarrow = evaluate_accuracy(nets.narrow, data.test, &corrupted);
                const double wall = std::chrono::duration<double>(clock::now() - t0).count();
                emit(seed, def.grid[gi], def.metrics[0], afine, wall);
                emit(seed, def.grid[gi], def.metrics[1], awide, wall);
                emit(seed, def.grid[gi], def.metrics[2], anarrow, wall);
            }
        }
    } else if (def.family == "association") {
        const Dataset data = load_experiment_dataset(cfg);
        struct Stack {
            Network<float> fine, coarse;
            Rbm rbm;
        };
        std::map<uint64_t, Stack> cache;
        for (size_t gi = 0; gi < def.grid.size(); ++gi) {
            for (uint64_t seed : cfg.seeds) {
                const auto t0 = clock::now();
                if (!cache.count(seed)) {
                    Network<float> fine = train_fine_net(cfg, data, seed);
                    Network<float> coarse =
                        train_coarse_net(cfg, data, cfg.coarse_preproc, seed, &fine);
                    Rbm rbm = train_robustness_memory(cfg, data, fine, coarse, seed);
                    cache.emplace(seed, Stack{std::move(fine), std::move(coarse), std::move(rbm)});
                }
                Stack& st = cache.at(seed);
                NoiseSpec noise{def.noise_kind, def.grid[gi],
                                seed_for_index(seed_for("noise/" + def.noise_kind, seed), gi)};
                const AssociationSystem sys{&st.fine, &st.coarse, &st.rbm};
                const auto corrupted = corrupt_images(data.test, noise, &st.fine);
                const double afine = evaluate_accuracy(st.fine, data.test, &corrupted);
                const double aassoc =
                    accuracy_of(associated_predict(sys, data.test, noise, cfg.default_t),
                                data.test);
                const double wall = std::chrono::duration<double>(clock::now() - t0).count();
                emit(seed, def.grid[gi], def.metrics[0], afine, wall);
                emit(seed, def.grid[gi], def.metrics[1], aassoc, wall);
            }
        }
    } else {  // bias
        std::map<uint64_t, Dataset> datasets;
        std::map<uint64_t, BiasArtifacts> cache;
        for (size_t gi = 0; gi < def.grid.size(); ++gi) {
            for (uint64_t seed : cfg.seeds) {
                const auto t0 = clock::now();
                if (!cache.count(seed)) {
                    datasets.emplace(seed, load_bias_dataset(cfg, seed));
                    cache.emplace(seed, train_bias_stack(cfg, datasets.at(seed), seed));
                }
                const Dataset& data = datasets.at(seed);
                BiasArtifacts& art = cache.at(seed);
                NoiseSpec noise{def.noise_kind, def.grid[gi],
                                seed_for_index(seed_for("noise/" + def.noise_kind, seed), gi)};
                const BiasSystem sys{&art.fine, &art.coarse, &art.rbm, &art.head, &art.codebook};
                const auto corrupted = corrupt_images(data.test, noise, &art.fine);
                const double unbiased = evaluate_accuracy(art.fine, data.test, &corrupted);
                const double oracle = accuracy_of(
                    biased_predict(sys, data.test, noise, cfg.default_t, true), data.test);
                std::vector<int> retrieved;
                const double biased = accuracy_of(
                    biased_predict(sys, data.test, noise, cfg.default_t, false, &retrieved),
                    data.test);
                size_t hits = 0;
                for (size_t i = 0; i < retrieved.size(); ++i)
                    if (retrieved[i] == data.test.images[i].coarse_label) ++hits;
                const double retrieval =
                    static_cast<double>(hits) / static_cast<double>(retrieved.size());
                const double wall = std::chrono::duration<double>(clock::now() - t0).count();
                emit(seed, def.grid[gi], def.metrics[0], unbiased, wall);
                emit(seed, def.grid[gi], def.metrics[1], oracle, wall);
                emit(seed, def.grid[gi], def.metrics[2], biased, wall);
                emit(seed, def.grid[gi], def.metrics[3], retrieval, wall);
            }
        }
    }

    if (!os) throw std::runtime_error("sweep CSV write failed: " + csv_path);
    std::printf("sweep %s: %zu rows -> %s\n", fig.c_str(),
                def.grid.size() * cfg.seeds.size() * def.metrics.size(), csv_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-pathway object recognition: training, memory, and figure sweeps"};
    app.require_subcommand(1);

    // make-data
    CommonArgs md_args;
    int md_train = 700, md_test = 340, md_super_train = 400, md_super_test = 100, md_masks = 120;
    auto* md = app.add_subcommand("make-data", "write the synthetic corpora to the dataset root");
    add_common(md, md_args);
    md->add_option("--train-per-class", md_train, "ten-class corpus: training images per class");
    md->add_option("--test-per-class", md_test, "ten-class corpus: test images per class");
    md->add_option("--super-train-per-sub", md_super_train,
                   "super-class corpus: training images per sub-class");
    md->add_option("--super-test-per-sub", md_super_test,
                   "super-class corpus: test images per sub-class");
    md->add_option("--mask-per-class", md_masks, "mask corpus: silhouettes per class");

    // train-fine
    CommonArgs tf_args;
    std::string tf_name = "fine";
    bool tf_bias = false;
    auto* tf = app.add_subcommand("train-fine", "train the fine-input pathway");
    add_common(tf, tf_args);
    tf->add_flag("--bias-data", tf_bias,
                 "train on the sampled super-class subset used by the bias task");
    tf->add_option("--name", tf_name, "artifact base name");

    // train-coarse
    CommonArgs tc_args;
    std::string tc_name = "coarse", tc_fine_ckpt;
    bool tc_imitate = false, tc_binarize = false, tc_super = false, tc_bias = false;
    double tc_sigma = 0.0;
    auto* tc = app.add_subcommand("train-coarse", "train the coarse-input pathway");
    add_common(tc, tc_args);
    auto* tc_imitate_opt =
        tc->add_flag("--imitate", tc_imitate, "match the fine pathway's feature layer");
    auto* tc_fine_opt =
        tc->add_option("--fine-ckpt", tc_fine_ckpt, "trained fine checkpoint (the teacher)");
    auto* tc_sigma_opt =
        tc->add_option("--sigma", tc_sigma, "low-pass filter width for the coarse view");
    auto* tc_bin_opt =
        tc->add_flag("--binarize", tc_binarize, "binarized coarse view instead of low-pass");
    tc->add_flag("--super-labels", tc_super, "train on the super-class labels");
    tc->add_flag("--bias-data", tc_bias,
                 "train on the sampled super-class subset used by the bias task");
    tc->add_option("--name", tc_name, "artifact base name");
    tc_imitate_opt->needs(tc_fine_opt);
    tc_sigma_opt->excludes(tc_bin_opt);

    // train-rbm
    CommonArgs tr_args;
    std::string tr_task, tr_fine, tr_coarse, tr_name;
    auto* tr = app.add_subcommand("train-rbm", "train the associative memory for one task");
    add_common(tr, tr_args);
    tr->add_option("--task", tr_task, "robustness (pairs features) or bias (pairs contexts)")
        ->required()
        ->check(CLI::IsMember({"robustness", "bias"}));
    tr->add_option("--fine-ckpt", tr_fine, "trained fine checkpoint")->required();
    tr->add_option("--coarse-ckpt", tr_coarse, "trained coarse checkpoint")->required();
    tr->add_option("--name", tr_name, "artifact base name (default rbm_<task>)");

    // sweep
    CommonArgs sw_args;
    std::string sw_figure;
    bool sw_plan = false;
    auto* sw = app.add_subcommand("sweep", "run one published-figure sweep");
    add_common(sw, sw_args);
    sw->add_option("--figure", sw_figure, "figure id: 4a-4e, 5a-5f, 6a, 6b")->required();
    sw->add_flag("--plan", sw_plan, "enumerate the rows without training anything");

    // gradcheck
    int gc_instances = 20;
    double gc_tol = 1e-4;
    uint64_t gc_seed = 2024;
    bool gc_inject = false;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");
    gc->add_option("--instances", gc_instances, "randomized instances per primitive");
    gc->add_option("--tol", gc_tol, "max relative error accepted");
    gc->add_option("--seed", gc_seed, "suite seed");
    gc->add_flag("--inject-sign-error", gc_inject)->group("");  // self-test fault injection

    // eval
    CommonArgs ev_args;
    std::string ev_ckpt, ev_noise = "none", ev_rbm, ev_coarse;
    double ev_level = 0.0;
    int ev_steps = -1;
    bool ev_super = false, ev_bias = false;
    auto* ev = app.add_subcommand("eval", "accuracy of a saved network on the test split");
    add_common(ev, ev_args);
    ev->add_option("--ckpt", ev_ckpt, "network checkpoint to evaluate")->required();
    ev->add_option("--noise", ev_noise, "corruption kind")
        ->check(CLI::IsMember({"none", "uniform", "salt_pepper", "fgsm"}));
    ev->add_option("--level", ev_level, "corruption strength");
    ev->add_option("--rbm", ev_rbm, "memory checkpoint: evaluate memory-completed predictions");
    ev->add_option("--coarse-ckpt", ev_coarse, "coarse checkpoint (needed with --rbm)");
    ev->add_option("--steps", ev_steps, "interplay steps (default: config interplay.default_t)");
    ev->add_flag("--super-labels", ev_super, "evaluate against super-class labels");
    ev->add_flag("--bias-data", ev_bias,
                 "evaluate on the sampled super-class subset used by the bias task");

    CLI11_PARSE(app, argc, argv);

    try {
        if (md->parsed())
            return run_make_data(resolve_config(md_args), md_train, md_test, md_super_train,
                                 md_super_test, md_masks);
        if (tf->parsed()) return run_train_fine(resolve_config(tf_args), tf_bias, tf_name);
        if (tc->parsed())
            return run_train_coarse(resolve_config(tc_args), tc_imitate, tc_fine_ckpt,
                                    tc_sigma_opt->count() > 0, tc_sigma, tc_binarize, tc_super,
                                    tc_bias, tc_name);
        if (tr->parsed())
            return run_train_rbm(resolve_config(tr_args), tr_task, tr_fine, tr_coarse, tr_name);
        if (sw->parsed()) return run_sweep(resolve_config(sw_args), sw_figure, sw_plan);
        if (gc->parsed()) return run_gradcheck(gc_instances, gc_tol, gc_seed, gc_inject);
        if (ev->parsed()) {
            const ExperimentConfig cfg = resolve_config(ev_args);
            return run_eval(cfg, ev_ckpt, ev_noise, ev_level, ev_rbm, ev_coarse,
                            ev_steps < 0 ? cfg.default_t : ev_steps, ev_super, ev_bias);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
