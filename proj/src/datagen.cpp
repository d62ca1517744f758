#include "twopath/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "twopath/rng.hpp"

namespace twopath {

namespace {

// five hues with identical grayscale luma (0.299 r + 0.587 g + 0.114 b =
// 0.55), so the coarse pathway cannot tell them apart by brightness
constexpr int kHues = 5;
constexpr double kHue[kHues][3] = {
    {0.90, 0.44, 0.20},  // orange
    {0.20, 0.78, 0.30},  // green
    {0.30, 0.60, 0.95},  // azure
    {0.75, 0.39, 0.85},  // violet
    {0.10, 0.74, 0.75},  // teal
};

constexpr int kShapes = 8;

// membership of the sample point in the centered shape of size r
bool inside_shape(int shape, double dx, double dy, double r) {
    switch (shape) {
        case 0:  // disk
            return dx * dx + dy * dy <= r * r;
        case 1:  // square
            return std::max(std::abs(dx), std::abs(dy)) <= 0.85 * r;
        case 2: {  // upward triangle
            if (dy < -r || dy > 0.8 * r) return false;
            return std::abs(dx) <= r * (dy + r) / (1.8 * r);
        }
        case 3:  // plus
            return (std::abs(dx) <= 0.33 * r && std::abs(dy) <= r) ||
                   (std::abs(dy) <= 0.33 * r && std::abs(dx) <= r);
        case 4: {  // ring
            const double d = std::sqrt(dx * dx + dy * dy);
            return d >= 0.55 * r && d <= r;
        }
        case 5:  // diamond
            return std::abs(dx) + std::abs(dy) <= 1.1 * r;
        case 6:  // two horizontal bars
            return std::abs(dx) <= r &&
                   (std::abs(dy - 0.55 * r) <= 0.22 * r || std::abs(dy + 0.55 * r) <= 0.22 * r);
        case 7:  // two vertical bars
            return std::abs(dy) <= r &&
                   (std::abs(dx - 0.55 * r) <= 0.22 * r || std::abs(dx + 0.55 * r) <= 0.22 * r);
        default:
            throw std::invalid_argument("unknown shape id");
    }
}

uint8_t to_byte(double v) {
    const double c = std::min(1.0, std::max(0.0, v));
    return static_cast<uint8_t>(std::lround(c * 255.0));
}

// one rendered RGB image as 3072 channel-planar bytes
std::vector<uint8_t> render_image(int shape, int hue, bool striped, Rng& rng) {
    const int hw = 32;
    const double cx = hw / 2.0 + rng.uniform(-4.0f, 4.0f);
    const double cy = hw / 2.0 + rng.uniform(-4.0f, 4.0f);
    const double r = rng.uniform(9.0f, 13.0f);
    const double bg = rng.uniform(0.20f, 0.35f);
    const int hue2 = (hue + 2) % kHues;  // stripe partner, same luma

    std::vector<uint8_t> bytes(3 * hw * hw);
    std::vector<double> pix(3 * hw * hw);
    for (int y = 0; y < hw; ++y)
        for (int x = 0; x < hw; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            // 2x2 supersampling for softened edges
            for (int sy = 0; sy < 2; ++sy)
                for (int sx = 0; sx < 2; ++sx) {
                    const double px = x + 0.25 + 0.5 * sx;
                    const double py = y + 0.25 + 0.5 * sy;
                    if (inside_shape(shape, px - cx, py - cy, r)) {
                        const int h =
                            striped && (static_cast<int>(std::floor(px)) % 2 == 0) ? hue2 : hue;
                        for (int c = 0; c < 3; ++c) acc[c] += kHue[h][c];
                    } else {
                        for (int c = 0; c < 3; ++c) acc[c] += bg;
                    }
                }
            for (int c = 0; c < 3; ++c) pix[c * hw * hw + y * hw + x] = acc[c] / 4.0;
        }
    for (size_t i = 0; i < pix.size(); ++i)
        bytes[i] = to_byte(pix[i] + 0.04 * (2.0 * rng.uniform01d() - 1.0));
    return bytes;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void write_synthetic_cifar10(const std::string& dir, const SynthConfig& cfg) {
    if (cfg.train_per_class < 1 || cfg.test_per_class < 1)
        throw std::invalid_argument("per-class counts must be positive");
    std::filesystem::create_directories(dir);
    const int n_classes = 10;

    // class = shape (k % 5) x texture (flat / striped); hue is drawn per
    // image so color alone carries no label information
    auto emit_records = [&](int per_class, Rng& rng) {
        std::vector<uint8_t> records;
        records.reserve(static_cast<size_t>(per_class) * n_classes * 3073);
        for (int i = 0; i < per_class; ++i)
            for (int cls = 0; cls < n_classes; ++cls) {
                const int shape = cls % 5;
                const bool striped = cls >= 5;
                const int hue = static_cast<int>(rng.below(kHues));
                records.push_back(static_cast<uint8_t>(cls));
                const auto img = render_image(shape, hue, striped, rng);
                records.insert(records.end(), img.begin(), img.end());
            }
        return records;
    };

    Rng train_rng(seed_for("synth/ten-train", cfg.seed));
    const auto train = emit_records(cfg.train_per_class, train_rng);
    const size_t per_file = train.size() / 5 / 3073 * 3073;  // whole records
    size_t off = 0;
    for (int f = 1; f <= 5; ++f) {
        const size_t len = f == 5 ? train.size() - off : per_file;
        std::vector<uint8_t> part(train.begin() + off, train.begin() + off + len);
        write_file(dir + "/data_batch_" + std::to_string(f) + ".bin", part);
        off += len;
    }
    Rng test_rng(seed_for("synth/ten-test", cfg.seed));
    write_file(dir + "/test_batch.bin", emit_records(cfg.test_per_class, test_rng));
}

void write_synthetic_cifar100(const std::string& dir, const SuperSynthConfig& cfg) {
    if (cfg.n_super < 1 || cfg.n_super > kShapes) throw std::invalid_argument("bad super count");
    if (cfg.n_sub < 1 || cfg.n_sub > kHues) throw std::invalid_argument("bad sub count");
    if (cfg.train_per_sub < 1 || cfg.test_per_sub < 1)
        throw std::invalid_argument("per-class counts must be positive");
    std::filesystem::create_directories(dir);

    // super = shape, sub = fixed hue; flat fill so the hue is the only
    // within-super cue
    auto emit_records = [&](int per_sub, Rng& rng) {
        std::vector<uint8_t> records;
        for (int i = 0; i < per_sub; ++i)
            for (int super = 0; super < cfg.n_super; ++super)
                for (int sub = 0; sub < cfg.n_sub; ++sub) {
                    records.push_back(static_cast<uint8_t>(super));
                    records.push_back(static_cast<uint8_t>(super * cfg.n_sub + sub));
                    const auto img = render_image(super, sub, false, rng);
                    records.insert(records.end(), img.begin(), img.end());
                }
        return records;
    };

    Rng train_rng(seed_for("synth/super-train", cfg.seed));
    write_file(dir + "/train.bin", emit_records(cfg.train_per_sub, train_rng));
    Rng test_rng(seed_for("synth/super-test", cfg.seed));
    write_file(dir + "/test.bin", emit_records(cfg.test_per_sub, test_rng));
}

void write_synthetic_masks(const std::string& dir, int n_classes, int per_class, int hw,
                           uint64_t seed) {
    if (n_classes < 1 || n_classes > kShapes) throw std::invalid_argument("bad class count");
    if (per_class < 1 || hw < 8) throw std::invalid_argument("bad mask geometry");
    std::filesystem::create_directories(dir);
    Rng rng(seed_for("synth/masks", seed));
    char name[64];
    for (int cls = 0; cls < n_classes; ++cls)
        for (int k = 0; k < per_class; ++k) {
            const double cx = hw / 2.0 + rng.uniform(-hw / 8.0f, hw / 8.0f);
            const double cy = hw / 2.0 + rng.uniform(-hw / 8.0f, hw / 8.0f);
            const double r = rng.uniform(hw * 0.28f, hw * 0.40f);
            std::vector<uint8_t> body(static_cast<size_t>(hw) * hw);
            for (int y = 0; y < hw; ++y)
                for (int x = 0; x < hw; ++x)
                    body[static_cast<size_t>(y) * hw + x] =
                        inside_shape(cls, x + 0.5 - cx, y + 0.5 - cy, r) ? 255 : 0;
            std::snprintf(name, sizeof(name), "%d_%04d.pgm", cls, k);
            std::ofstream os(dir + "/" + name, std::ios::binary | std::ios::trunc);
            if (!os) throw std::runtime_error("cannot write mask " + std::string(name));
            os << "P5\n" << hw << " " << hw << "\n255\n";
            os.write(reinterpret_cast<const char*>(body.data()),
                     static_cast<std::streamsize>(body.size()));
        }
}

}  // namespace twopath
