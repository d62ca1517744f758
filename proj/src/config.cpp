#include "twopath/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <type_traits>

namespace twopath {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const int x = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<uint64_t>(x);
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "': expected an unsigned integer, got '" +
                                 v + "'");
    }
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (const auto& item : split_list(v)) out.push_back(parse_int(key, item));
    return out;
}

std::vector<uint64_t> parse_u64_list(const std::string& key, const std::string& v) {
    std::vector<uint64_t> out;
    for (const auto& item : split_list(v)) out.push_back(parse_u64(key, item));
    return out;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(parse_real(key, item));
    return out;
}

// "64x11,128x9" -> [{64,11},{128,9}]
std::vector<StageSpec> parse_stages(const std::string& key, const std::string& v) {
    std::vector<StageSpec> out;
    for (const auto& item : split_list(v)) {
        const size_t x = item.find('x');
        if (x == std::string::npos || x == 0 || x + 1 == item.size())
            throw std::runtime_error("config key '" + key + "': expected FILTERSxKSIZE, got '" +
                                     item + "'");
        StageSpec s;
        s.filters = parse_int(key, item.substr(0, x));
        s.ksize = parse_int(key, item.substr(x + 1));
        if (s.filters < 1 || s.ksize < 1 || s.ksize % 2 == 0)
            throw std::runtime_error("config key '" + key + "': filters must be positive and " +
                                     "kernels odd, got '" + item + "'");
        out.push_back(s);
    }
    if (out.empty()) throw std::runtime_error("config key '" + key + "': no stages given");
    return out;
}

std::string stages_to_string(const std::vector<StageSpec>& stages) {
    std::string out;
    for (size_t i = 0; i < stages.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(stages[i].filters) + "x" + std::to_string(stages[i].ksize);
    }
    return out;
}

template <typename T>
std::string list_to_string(const std::vector<T>& xs) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        if constexpr (std::is_floating_point_v<T>) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%g", xs[i]);
            if (std::strtod(buf, nullptr) != xs[i])
                std::snprintf(buf, sizeof(buf), "%.17g", xs[i]);
            out += buf;
        } else {
            out += std::to_string(xs[i]);
        }
    }
    return out;
}

// assignments shared between train.* and coarse_train.*
bool set_train_key(TrainConfig& t, const std::string& key, const std::string& sub,
                   const std::string& v) {
    if (sub == "epochs")
        t.epochs = parse_int(key, v);
    else if (sub == "batch_size")
        t.batch_size = parse_int(key, v);
    else if (sub == "lr")
        t.lr = parse_real(key, v);
    else if (sub == "momentum")
        t.momentum = parse_real(key, v);
    else if (sub == "decay_epochs")
        t.lr_decay_epochs = parse_int_list(key, v);
    else if (sub == "decay_factor")
        t.lr_decay_factor = parse_real(key, v);
    else if (sub == "alpha")
        t.alpha = parse_real(key, v);
    else
        return false;
    return true;
}

}  // namespace

void set_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    const size_t dot = key.find('.');
    const std::string head = dot == std::string::npos ? key : key.substr(0, dot);
    const std::string sub = dot == std::string::npos ? "" : key.substr(dot + 1);

    if (head == "dataset") {
        if (sub == "kind") {
            if (v != "cifar10" && v != "cifar100" && v != "masks")
                throw std::runtime_error("config key 'dataset.kind': unknown kind '" + v + "'");
            cfg.dataset_kind = v;
        } else if (sub == "path")
            cfg.dataset_path = v;
        else if (sub == "subset_classes")
            cfg.subset_classes_list = parse_int_list(key, v);
        else if (sub == "subset_train")
            cfg.subset_train = parse_int(key, v);
        else if (sub == "subset_test")
            cfg.subset_test = parse_int(key, v);
        else
            throw std::runtime_error("unknown config key '" + key + "'");
    } else if (head == "fine") {
        if (sub == "stages")
            cfg.fine_stages = parse_stages(key, v);
        else if (sub == "fc_width")
            cfg.fine_fc_width = parse_int(key, v);
        else
            throw std::runtime_error("unknown config key '" + key + "'");
    } else if (head == "coarse") {
        if (sub == "stages")
            cfg.coarse_stages = parse_stages(key, v);
        else if (sub == "fc_width")
            cfg.coarse_fc_width = parse_int(key, v);
        else if (sub == "preproc") {
            if (v != "lpf" && v != "binarize" && v != "none")
                throw std::runtime_error("config key 'coarse.preproc': unknown kind '" + v + "'");
            cfg.coarse_preproc.kind = v;
        } else if (sub == "sigma")
            cfg.coarse_preproc.sigma = parse_real(key, v);
        else if (sub == "threshold")
            cfg.coarse_preproc.threshold = parse_real(key, v);
        else
            throw std::runtime_error("unknown config key '" + key + "'");
    } else if (head == "train") {
        if (!set_train_key(cfg.train, key, sub, v))
            throw std::runtime_error("unknown config key '" + key + "'");
        // coarse training inherits train.* unless coarse_train.* overrides
        // it later; load order is file order
        set_train_key(cfg.coarse_train, key, sub, v);
    } else if (head == "coarse_train") {
        if (!set_train_key(cfg.coarse_train, key, sub, v))
            throw std::runtime_error("unknown config key '" + key + "'");
    } else if (head == "rbm") {
        if (sub == "hidden")
            cfg.rbm_hidden = parse_int(key, v);
        else if (sub == "epochs")
            cfg.rbm.epochs = parse_int(key, v);
        else if (sub == "lr")
            cfg.rbm.lr = parse_real(key, v);
        else if (sub == "decay_epochs")
            cfg.rbm.decay_epochs = parse_int_list(key, v);
        else if (sub == "decay_factor")
            cfg.rbm.decay_factor = parse_real(key, v);
        else if (sub == "batch_size")
            cfg.rbm.batch_size = parse_int(key, v);
        else if (sub == "cd_steps")
            cfg.rbm.cd_steps = parse_int(key, v);
        else
            throw std::runtime_error("unknown config key '" + key + "'");
    } else if (head == "noise") {
        if (sub == "uniform_levels")
            cfg.uniform_levels = parse_real_list(key, v);
        else if (sub == "saltpepper_levels")
            cfg.saltpepper_levels = parse_real_list(key, v);
        else if (sub == "fgsm_levels")
            cfg.fgsm_levels = parse_real_list(key, v);
        else
            throw std::runtime_error("unknown config key '" + key + "'");
    } else if (head == "interplay") {
        if (sub == "steps")
            cfg.interplay_steps = parse_int_list(key, v);
        else if (sub == "default_t")
            cfg.default_t = parse_int(key, v);
        else
            throw std::runtime_error("unknown config key '" + key + "'");
    } else if (head == "bias") {
        if (sub == "n_super")
            cfg.bias_n_super = parse_int(key, v);
        else if (sub == "n_sub")
            cfg.bias_n_sub = parse_int(key, v);
        else
            throw std::runtime_error("unknown config key '" + key + "'");
    } else if (head == "sweep") {
        if (sub == "channels")
            cfg.sweep_channels = parse_int_list(key, v);
        else if (sub == "kernels")
            cfg.sweep_kernels = parse_int_list(key, v);
        else if (sub == "sigmas")
            cfg.sweep_sigmas = parse_real_list(key, v);
        else
            throw std::runtime_error("unknown config key '" + key + "'");
    } else if (key == "seeds") {
        cfg.seeds = parse_u64_list(key, v);
        if (cfg.seeds.empty()) throw std::runtime_error("config key 'seeds': list is empty");
    } else if (key == "seed") {
        cfg.seed = parse_u64(key, v);
    } else if (key == "out") {
        cfg.out = v;
    } else {
        throw std::runtime_error("unknown config key '" + key + "'");
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    struct Assign {
        std::string key, value;
        int lineno;
    };
    std::vector<Assign> entries;
    while (std::getline(is, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty key");
        entries.push_back({key, value, lineno});
    }
    // coarse_train.* keys apply after everything else so the inheritance
    // from train.* does not depend on the order of lines in the file
    auto apply = [&](const Assign& a) {
        try {
            set_config_key(cfg, a.key, a.value);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(path + ":" + std::to_string(a.lineno) + ": " + e.what());
        }
    };
    for (const auto& a : entries)
        if (a.key.rfind("coarse_train.", 0) != 0) apply(a);
    for (const auto& a : entries)
        if (a.key.rfind("coarse_train.", 0) == 0) apply(a);

    if (const char* env = std::getenv("TWOPATH_DATA"); env && *env) cfg.dataset_path = env;

    if (cfg.coarse_preproc.sigma <= 0)
        throw std::runtime_error("config: coarse.sigma must be positive");
    if (cfg.coarse_preproc.threshold <= 0 || cfg.coarse_preproc.threshold >= 1)
        throw std::runtime_error("config: coarse.threshold must lie strictly inside (0,1)");
    if (cfg.fine_fc_width < 1 || cfg.coarse_fc_width < 1)
        throw std::runtime_error("config: feature widths must be positive");
    if (cfg.default_t < 0) throw std::runtime_error("config: interplay.default_t must be >= 0");
    return cfg;
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write config: " + path);
    char buf[64];
    auto real = [&](double x) {
        // shortest form that parses back to the same double
        std::snprintf(buf, sizeof(buf), "%g", x);
        if (std::strtod(buf, nullptr) != x) std::snprintf(buf, sizeof(buf), "%.17g", x);
        return std::string(buf);
    };
    os << "dataset.kind = " << cfg.dataset_kind << "\n";
    os << "dataset.path = " << cfg.dataset_path << "\n";
    os << "dataset.subset_classes = " << list_to_string(cfg.subset_classes_list) << "\n";
    os << "dataset.subset_train = " << cfg.subset_train << "\n";
    os << "dataset.subset_test = " << cfg.subset_test << "\n";
    os << "fine.stages = " << stages_to_string(cfg.fine_stages) << "\n";
    os << "fine.fc_width = " << cfg.fine_fc_width << "\n";
    os << "coarse.stages = " << stages_to_string(cfg.coarse_stages) << "\n";
    os << "coarse.fc_width = " << cfg.coarse_fc_width << "\n";
    os << "coarse.preproc = " << cfg.coarse_preproc.kind << "\n";
    os << "coarse.sigma = " << real(cfg.coarse_preproc.sigma) << "\n";
    os << "coarse.threshold = " << real(cfg.coarse_preproc.threshold) << "\n";
    auto train_block = [&](const std::string& head, const TrainConfig& t) {
        os << head << ".epochs = " << t.epochs << "\n";
        os << head << ".batch_size = " << t.batch_size << "\n";
        os << head << ".lr = " << real(t.lr) << "\n";
        os << head << ".momentum = " << real(t.momentum) << "\n";
        os << head << ".decay_epochs = " << list_to_string(t.lr_decay_epochs) << "\n";
        os << head << ".decay_factor = " << real(t.lr_decay_factor) << "\n";
        os << head << ".alpha = " << real(t.alpha) << "\n";
    };
    train_block("train", cfg.train);
    train_block("coarse_train", cfg.coarse_train);
    os << "rbm.hidden = " << cfg.rbm_hidden << "\n";
    os << "rbm.epochs = " << cfg.rbm.epochs << "\n";
    os << "rbm.lr = " << real(cfg.rbm.lr) << "\n";
    os << "rbm.decay_epochs = " << list_to_string(cfg.rbm.decay_epochs) << "\n";
    os << "rbm.decay_factor = " << real(cfg.rbm.decay_factor) << "\n";
    os << "rbm.batch_size = " << cfg.rbm.batch_size << "\n";
    os << "rbm.cd_steps = " << cfg.rbm.cd_steps << "\n";
    os << "noise.uniform_levels = " << list_to_string(cfg.uniform_levels) << "\n";
    os << "noise.saltpepper_levels = " << list_to_string(cfg.saltpepper_levels) << "\n";
    os << "noise.fgsm_levels = " << list_to_string(cfg.fgsm_levels) << "\n";
    os << "interplay.steps = " << list_to_string(cfg.interplay_steps) << "\n";
    os << "interplay.default_t = " << cfg.default_t << "\n";
    os << "bias.n_super = " << cfg.bias_n_super << "\n";
    os << "bias.n_sub = " << cfg.bias_n_sub << "\n";
    os << "sweep.channels = " << list_to_string(cfg.sweep_channels) << "\n";
    os << "sweep.kernels = " << list_to_string(cfg.sweep_kernels) << "\n";
    os << "sweep.sigmas = " << list_to_string(cfg.sweep_sigmas) << "\n";
    os << "seeds = " << list_to_string(cfg.seeds) << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "out = " << cfg.out << "\n";
    if (!os) throw std::runtime_error("config write failed: " + path);
}

}  // namespace twopath
