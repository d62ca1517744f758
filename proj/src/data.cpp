#include "twopath/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "twopath/rng.hpp"

namespace fs = std::filesystem;

namespace twopath {

namespace {

constexpr int kHw = 32;
constexpr int kPixels = kHw * kHw;

std::vector<unsigned char> read_all(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open dataset file: " + path);
    is.seekg(0, std::ios::end);
    const auto size = is.tellg();
    is.seekg(0);
    std::vector<unsigned char> buf(static_cast<size_t>(size));
    if (!is.read(reinterpret_cast<char*>(buf.data()), size))
        throw std::runtime_error("cannot read dataset file: " + path);
    return buf;
}

// One CIFAR-style record: optional coarse byte, fine byte, then 3072 pixel
// bytes in channel-planar R,G,B order, scaled to [0,1] by /255.
LabeledImage decode_record(const unsigned char* rec, bool has_coarse) {
    LabeledImage img;
    int off = 0;
    if (has_coarse) img.coarse_label = rec[off++];
    img.fine_label = rec[off++];
    img.pixels = Tensor<float>({3, kHw, kHw});
    for (int i = 0; i < 3 * kPixels; ++i)
        img.pixels.data[i] = static_cast<float>(rec[off + i]) / 255.0f;
    return img;
}

void load_cifar_file(const std::string& path, bool has_coarse, std::vector<LabeledImage>& out) {
    const auto buf = read_all(path);
    const size_t rec_size = (has_coarse ? 2 : 1) + 3 * kPixels;
    if (buf.empty() || buf.size() % rec_size != 0)
        throw std::runtime_error("dataset file size " + std::to_string(buf.size()) +
                                 " is not a multiple of the record size: " + path);
    const size_t n = buf.size() / rec_size;
    out.reserve(out.size() + n);
    for (size_t i = 0; i < n; ++i) out.push_back(decode_record(buf.data() + i * rec_size, has_coarse));
}

void validate_labels(const Dataset& ds, const std::string& what) {
    for (const auto* split : {&ds.train, &ds.test})
        for (const auto& img : split->images) {
            if (img.fine_label < 0 || img.fine_label >= ds.num_classes)
                throw std::runtime_error(what + ": fine label " +
                                         std::to_string(img.fine_label) + " out of range");
            if (ds.num_coarse_classes > 0 &&
                (img.coarse_label < 0 || img.coarse_label >= ds.num_coarse_classes))
                throw std::runtime_error(what + ": coarse label " +
                                         std::to_string(img.coarse_label) + " out of range");
        }
}

std::vector<std::string> generic_names(int k, const std::string& prefix) {
    std::vector<std::string> out;
    for (int i = 0; i < k; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

}  // namespace

Dataset load_cifar10(const std::string& dir) {
    Dataset ds;
    ds.num_classes = 10;
    ds.channels = 3;
    for (int b = 1; b <= 5; ++b)
        load_cifar_file(dir + "/data_batch_" + std::to_string(b) + ".bin", false,
                        ds.train.images);
    load_cifar_file(dir + "/test_batch.bin", false, ds.test.images);
    validate_labels(ds, "cifar10");
    ds.train.class_names = ds.test.class_names = generic_names(10, "class_");
    compute_channel_stats(ds.train, ds.train.channel_mean, ds.train.channel_std);
    ds.test.channel_mean = ds.train.channel_mean;
    ds.test.channel_std = ds.train.channel_std;
    return ds;
}

Dataset load_cifar100(const std::string& dir) {
    Dataset ds;
    ds.num_classes = 100;
    ds.num_coarse_classes = 20;
    ds.channels = 3;
    load_cifar_file(dir + "/train.bin", true, ds.train.images);
    load_cifar_file(dir + "/test.bin", true, ds.test.images);
    // Synthetic reduced universes are allowed: shrink the label spaces to
    // what the files actually hold rather than rejecting them.
    int max_fine = -1, max_coarse = -1;
    for (const auto* split : {&ds.train, &ds.test})
        for (const auto& img : split->images) {
            max_fine = std::max(max_fine, img.fine_label);
            max_coarse = std::max(max_coarse, img.coarse_label);
        }
    if (max_fine >= 100 || max_coarse >= 20)
        throw std::runtime_error("cifar100: label out of range in " + dir);
    ds.num_classes = max_fine + 1;
    ds.num_coarse_classes = max_coarse + 1;
    validate_labels(ds, "cifar100");
    ds.train.class_names = ds.test.class_names = generic_names(ds.num_classes, "fine_");
    compute_channel_stats(ds.train, ds.train.channel_mean, ds.train.channel_std);
    ds.test.channel_mean = ds.train.channel_mean;
    ds.test.channel_std = ds.train.channel_std;
    return ds;
}

namespace {

// Minimal binary PGM (P5) reader: 8-bit, square, '#' comments allowed.
Tensor<float> read_pgm(const std::string& path, int& side) {
    const auto buf = read_all(path);
    size_t pos = 0;
    auto skip_space = [&]() {
        while (pos < buf.size()) {
            if (std::isspace(buf[pos])) {
                ++pos;
            } else if (buf[pos] == '#') {
                while (pos < buf.size() && buf[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() {
        skip_space();
        if (pos >= buf.size() || !std::isdigit(buf[pos]))
            throw std::runtime_error("malformed PGM header: " + path);
        long v = 0;
        while (pos < buf.size() && std::isdigit(buf[pos])) v = v * 10 + (buf[pos++] - '0');
        return v;
    };
    if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '5')
        throw std::runtime_error("not a P5 PGM file: " + path);
    pos = 2;
    const long w = read_int(), h = read_int(), maxval = read_int();
    if (w != h) throw std::runtime_error("mask image is not square: " + path);
    if (w <= 0 || w > 4096) throw std::runtime_error("unreasonable PGM size: " + path);
    if (maxval != 255) throw std::runtime_error("PGM must be 8-bit (maxval 255): " + path);
    ++pos;  // single whitespace after maxval
    if (buf.size() - pos < static_cast<size_t>(w) * h)
        throw std::runtime_error("PGM pixel data truncated: " + path);
    side = static_cast<int>(w);
    Tensor<float> img({1, side, side});
    for (int i = 0; i < side * side; ++i)
        img.data[i] = static_cast<float>(buf[pos + i]) / 255.0f;
    return img;
}

// Exact box resampling from side s to 32: each output cell averages the
// source region it covers, with fractional edge weights.
Tensor<float> area_average_to_32(const Tensor<float>& src, int s) {
    Tensor<float> out({1, kHw, kHw});
    const double scale = static_cast<double>(s) / kHw;
    for (int oy = 0; oy < kHw; ++oy) {
        const double y0 = oy * scale, y1 = (oy + 1) * scale;
        for (int ox = 0; ox < kHw; ++ox) {
            const double x0 = ox * scale, x1 = (ox + 1) * scale;
            double acc = 0.0;
            for (int sy = static_cast<int>(y0); sy < s && sy < y1; ++sy) {
                const double wy =
                    std::min(y1, static_cast<double>(sy + 1)) - std::max(y0, static_cast<double>(sy));
                if (wy <= 0) continue;
                for (int sx = static_cast<int>(x0); sx < s && sx < x1; ++sx) {
                    const double wx = std::min(x1, static_cast<double>(sx + 1)) -
                                      std::max(x0, static_cast<double>(sx));
                    if (wx <= 0) continue;
                    acc += wy * wx * src.data[static_cast<size_t>(sy) * s + sx];
                }
            }
            out.data[static_cast<size_t>(oy) * kHw + ox] =
                static_cast<float>(acc / (scale * scale));
        }
    }
    return out;
}

}  // namespace

Dataset load_mask_dataset(const std::string& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("mask dataset is not a directory: " + dir);
    // <classid>_<index>.pgm
    std::map<int, std::map<int, std::string>> by_class;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() < 5 || name.substr(name.size() - 4) != ".pgm") continue;
        const auto us = name.find('_');
        if (us == std::string::npos) throw std::runtime_error("mask filename lacks '_': " + name);
        int cls = -1, idx = -1;
        try {
            cls = std::stoi(name.substr(0, us));
            idx = std::stoi(name.substr(us + 1, name.size() - us - 5));
        } catch (const std::exception&) {
            throw std::runtime_error("mask filename is not <classid>_<index>.pgm: " + name);
        }
        by_class[cls][idx] = entry.path().string();
    }
    if (by_class.empty()) throw std::runtime_error("no .pgm files in " + dir);

    Dataset ds;
    ds.channels = 1;
    ds.num_classes = by_class.rbegin()->first + 1;
    for (const auto& [cls, files] : by_class) {
        if (cls < 0) throw std::runtime_error("negative mask class id");
        int ordinal = 0;
        for (const auto& [idx, path] : files) {
            int side = 0;
            auto raw = read_pgm(path, side);
            LabeledImage img;
            img.fine_label = cls;
            img.pixels = side == kHw ? std::move(raw) : area_average_to_32(raw, side);
            // hold out every fifth image per class, in index order
            if (ordinal % 5 == 4) ds.test.images.push_back(std::move(img));
            else ds.train.images.push_back(std::move(img));
            ++ordinal;
        }
    }
    validate_labels(ds, "masks");
    ds.train.class_names = ds.test.class_names = generic_names(ds.num_classes, "mask_");
    compute_channel_stats(ds.train, ds.train.channel_mean, ds.train.channel_std);
    ds.test.channel_mean = ds.train.channel_mean;
    ds.test.channel_std = ds.train.channel_std;
    return ds;
}

Tensor<float> to_grayscale(const Tensor<float>& rgb) {
    if (rgb.shape.size() != 3 || rgb.shape[0] != 3)
        throw std::invalid_argument("to_grayscale expects [3,H,W]");
    const int H = rgb.shape[1], W = rgb.shape[2];
    Tensor<float> out({1, H, W});
    const float* r = rgb.ptr();
    const float* g = r + static_cast<size_t>(H) * W;
    const float* b = g + static_cast<size_t>(H) * W;
    for (int i = 0; i < H * W; ++i)
        out.data[i] = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
    return out;
}

namespace {

// Half-sample symmetric reflection: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
// Keeping the edge sample in the fold makes the blur operator doubly
// stochastic, which preserves the image mean exactly.
int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

}  // namespace

Tensor<float> gaussian_lowpass(const Tensor<float>& gray, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_lowpass needs sigma > 0");
    if (gray.shape.size() != 3 || gray.shape[0] != 1)
        throw std::invalid_argument("gaussian_lowpass expects [1,H,W]");
    const int H = gray.shape[1], W = gray.shape[2];
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (auto& k : kernel) k /= sum;

    // horizontal pass then vertical pass, double accumulators
    std::vector<double> mid(static_cast<size_t>(H) * W);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += kernel[t + radius] *
                       gray.data[static_cast<size_t>(y) * W + reflect_index(x + t, W)];
            mid[static_cast<size_t>(y) * W + x] = acc;
        }
    Tensor<float> out({1, H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += kernel[t + radius] * mid[static_cast<size_t>(reflect_index(y + t, H)) * W + x];
            out.data[static_cast<size_t>(y) * W + x] = static_cast<float>(acc);
        }
    return out;
}

Tensor<float> binarize(const Tensor<float>& gray, double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0)
        throw std::invalid_argument("binarize threshold must lie strictly inside (0,1)");
    Tensor<float> out(gray.shape);
    for (size_t i = 0; i < gray.data.size(); ++i)
        out.data[i] = gray.data[i] > static_cast<float>(threshold) ? 1.0f : 0.0f;
    return out;
}

Tensor<float> coarse_input(const Tensor<float>& pixels, const PreprocSpec& preproc) {
    Tensor<float> gray = pixels.shape[0] == 3 ? to_grayscale(pixels) : pixels;
    if (preproc.kind == "lpf") return gaussian_lowpass(gray, preproc.sigma);
    if (preproc.kind == "binarize") return binarize(gray, preproc.threshold);
    if (preproc.kind == "none") return gray;
    throw std::invalid_argument("unknown coarse preprocessing kind: " + preproc.kind);
}

void compute_channel_stats(const DatasetSplit& split, std::vector<double>& mean,
                           std::vector<double>& stdev) {
    if (split.images.empty()) throw std::invalid_argument("cannot take stats of an empty split");
    const int C = split.images.front().pixels.shape[0];
    mean.assign(C, 0.0);
    stdev.assign(C, 0.0);
    std::vector<double> sq(C, 0.0);
    size_t per_channel = 0;
    for (const auto& img : split.images) {
        const int H = img.pixels.shape[1], W = img.pixels.shape[2];
        for (int c = 0; c < C; ++c) {
            const float* p = img.pixels.ptr() + static_cast<size_t>(c) * H * W;
            for (int i = 0; i < H * W; ++i) {
                mean[c] += p[i];
                sq[c] += static_cast<double>(p[i]) * p[i];
            }
        }
        per_channel += static_cast<size_t>(split.images.front().pixels.shape[1]) *
                       split.images.front().pixels.shape[2];
    }
    per_channel /= split.images.size();
    const double n = static_cast<double>(split.images.size()) * per_channel;
    for (int c = 0; c < C; ++c) {
        mean[c] /= n;
        const double var = sq[c] / n - mean[c] * mean[c];
        stdev[c] = std::sqrt(std::max(var, 1e-12));
    }
}

std::vector<std::vector<int>> batches(int n_images, int batch_size, uint64_t seed, int epoch) {
    if (n_images <= 0 || batch_size <= 0) throw std::invalid_argument("bad batch arguments");
    std::vector<int> order(n_images);
    for (int i = 0; i < n_images; ++i) order[i] = i;
    Rng rng(seed_for_index(seed_for("batches", seed), static_cast<uint64_t>(epoch)));
    rng.shuffle(order);
    std::vector<std::vector<int>> out;
    for (int start = 0; start < n_images; start += batch_size) {
        const int end = std::min(n_images, start + batch_size);
        out.emplace_back(order.begin() + start, order.begin() + end);
    }
    return out;
}

namespace {

DatasetSplit subset_split(const DatasetSplit& split, const std::vector<int>& classes, int cap,
                          uint64_t seed, const std::vector<int>& relabel) {
    // bucket indices per kept class, preserving file order
    std::vector<std::vector<int>> per_class(classes.size());
    for (int i = 0; i < static_cast<int>(split.images.size()); ++i) {
        const int lbl = split.images[i].fine_label;
        for (size_t k = 0; k < classes.size(); ++k)
            if (classes[k] == lbl) per_class[k].push_back(i);
    }
    // per-class cap, selection seeded per class for determinism
    std::vector<int> chosen;
    const int per_cap = cap > 0 ? (cap + static_cast<int>(classes.size()) - 1) /
                                      static_cast<int>(classes.size())
                                : 0;
    for (size_t k = 0; k < classes.size(); ++k) {
        auto& bucket = per_class[k];
        if (cap > 0 && static_cast<int>(bucket.size()) > per_cap) {
            Rng rng(seed_for_index(seed_for("subset", seed), k));
            rng.shuffle(bucket);
            bucket.resize(per_cap);
            std::sort(bucket.begin(), bucket.end());
        }
        for (int idx : bucket) chosen.push_back(idx);
    }
    std::sort(chosen.begin(), chosen.end());
    DatasetSplit out;
    for (int idx : chosen) {
        LabeledImage img = split.images[idx];
        img.fine_label = relabel[img.fine_label];
        out.images.push_back(std::move(img));
    }
    return out;
}

}  // namespace

Dataset subset_classes(const Dataset& full, const std::vector<int>& classes, int n_train,
                       int n_test, uint64_t seed) {
    if (classes.empty()) throw std::invalid_argument("subset needs at least one class");
    std::set<int> uniq(classes.begin(), classes.end());
    if (uniq.size() != classes.size()) throw std::invalid_argument("duplicate subset class");
    for (int c : classes)
        if (c < 0 || c >= full.num_classes)
            throw std::invalid_argument("subset class out of range: " + std::to_string(c));

    std::vector<int> relabel(full.num_classes, -1);
    for (size_t k = 0; k < classes.size(); ++k) relabel[classes[k]] = static_cast<int>(k);

    Dataset out;
    out.num_classes = static_cast<int>(classes.size());
    out.channels = full.channels;
    out.train = subset_split(full.train, classes, n_train, seed, relabel);
    out.test = subset_split(full.test, classes, n_test, seed + 1, relabel);
    for (int k = 0; k < out.num_classes; ++k)
        out.train.class_names.push_back(full.train.class_names.empty()
                                            ? "class_" + std::to_string(k)
                                            : full.train.class_names[classes[k]]);
    out.test.class_names = out.train.class_names;
    compute_channel_stats(out.train, out.train.channel_mean, out.train.channel_std);
    out.test.channel_mean = out.train.channel_mean;
    out.test.channel_std = out.train.channel_std;
    return out;
}

Dataset sample_superclass_subset(const Dataset& cifar100, int n_super, int n_sub_per_super,
                                 uint64_t seed, std::vector<SubclassMapping>& mapping) {
    if (n_super <= 0 || n_super > 20 || n_sub_per_super <= 0 || n_sub_per_super > 5)
        throw std::invalid_argument("super/sub counts out of range");
    // recover the fine -> coarse partition from the training images
    std::map<int, std::set<int>> fines_of_super;
    std::map<int, int> super_of_fine;
    for (const auto& img : cifar100.train.images) {
        auto it = super_of_fine.find(img.fine_label);
        if (it != super_of_fine.end() && it->second != img.coarse_label)
            throw std::runtime_error("fine class maps to two super-classes; not a partition");
        super_of_fine[img.fine_label] = img.coarse_label;
        fines_of_super[img.coarse_label].insert(img.fine_label);
    }
    std::vector<int> eligible;
    for (const auto& [sup, fines] : fines_of_super)
        if (static_cast<int>(fines.size()) >= n_sub_per_super) eligible.push_back(sup);
    if (static_cast<int>(eligible.size()) < n_super)
        throw std::runtime_error("not enough super-classes with " +
                                 std::to_string(n_sub_per_super) + " sub-classes");

    Rng rng(seed_for("superclass-subset", seed));
    rng.shuffle(eligible);
    eligible.resize(n_super);
    std::sort(eligible.begin(), eligible.end());

    mapping.clear();
    std::map<int, int> new_fine, new_super;
    for (int s = 0; s < n_super; ++s) {
        new_super[eligible[s]] = s;
        std::vector<int> fines(fines_of_super[eligible[s]].begin(),
                               fines_of_super[eligible[s]].end());
        rng.shuffle(fines);
        fines.resize(n_sub_per_super);
        std::sort(fines.begin(), fines.end());
        for (int j = 0; j < n_sub_per_super; ++j) {
            const int sub_id = s * n_sub_per_super + j;
            new_fine[fines[j]] = sub_id;
            mapping.push_back({sub_id, s, fines[j], eligible[s]});
        }
    }

    Dataset out;
    out.num_classes = n_super * n_sub_per_super;
    out.num_coarse_classes = n_super;
    out.channels = cifar100.channels;
    for (const auto* src : {&cifar100.train, &cifar100.test}) {
        DatasetSplit& dst = src == &cifar100.train ? out.train : out.test;
        for (const auto& img : src->images) {
            auto it = new_fine.find(img.fine_label);
            if (it == new_fine.end()) continue;
            LabeledImage copy = img;
            copy.fine_label = it->second;
            copy.coarse_label = new_super.at(img.coarse_label);
            dst.images.push_back(std::move(copy));
        }
    }
    out.train.class_names = out.test.class_names = generic_names(out.num_classes, "sub_");
    compute_channel_stats(out.train, out.train.channel_mean, out.train.channel_std);
    out.test.channel_mean = out.train.channel_mean;
    out.test.channel_std = out.train.channel_std;
    return out;
}

void write_mapping(const std::string& path, const std::vector<SubclassMapping>& mapping) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write mapping file: " + path);
    for (const auto& m : mapping)
        os << m.sub_id << ' ' << m.super_id << ' ' << m.original_fine << ' ' << m.original_coarse
           << '\n';
    if (!os) throw std::runtime_error("mapping write failed: " + path);
}

}  // namespace twopath
